//! Recurrence plots and Recurrence Quantification Analysis (RQA) for
//! uniformly sampled time series, with the batch machinery needed to scan
//! satellite vegetation-index pixels for regime shifts: delay embedding
//! with data-driven parameter selection, fixed- and target-RR
//! thresholding, joint recurrence of paired series, sliding-window
//! analysis, disruption profiling, and group-level statistics.
//!
//! ```
//! use rqa_core::{build_matrix, embed, measures, signal, EmbeddingConfig,
//!                Norm, ThresholdConfig};
//!
//! // a periodic signal embeds into a plot dominated by diagonal lines
//! let series = signal::sine_series(200, 24.0, 0.0)?;
//! let traj = embed(&series, EmbeddingConfig::new(2, 6)?)?;
//! let rm = build_matrix(&traj, &ThresholdConfig::target_rr(0.10, Norm::Max)?)?;
//! let m = measures(&rm, 2, 2, 0)?;
//! assert!(m.det.unwrap() > 0.99);
//! # Ok::<(), rqa_core::Error>(())
//! ```

pub mod embedding;
pub mod error;
pub mod recurrence;
pub mod rqa;
pub mod signal;
pub mod stats;
pub mod study;

pub use embedding::{embed, select_delay, select_dimension, EmbeddingConfig, PhaseTrajectory};
pub use error::{Error, Result};
pub use recurrence::{
    build_matrix, epsilon_for_target_rr, joint_matrix, render_plot, MatrixKind, Norm,
    RecurrenceMatrix, RenderFormat, ThresholdConfig, ThresholdMode,
};
pub use rqa::{
    disruption_profile, line_histograms, measures, windowed_joint_measures, windowed_measures,
    LineHistograms, RqaMeasures, WindowedMeasures,
};
pub use signal::{
    compute_evi, detect_format, load_series, split_series, BandSample, CsvFormat, Generator,
    LoadOptions, Loaded, LorenzParams, PixelStack, SplitSpec, TimeSeries,
};
pub use study::{
    group_summary, per_pixel_measures, pooled_t_test, run_pipeline, welch_t_test, EpsilonPolicy,
    GroupSummary, Measure, MeasureSummary, PipelineParams, StudyReport, TTestResult, TTestRow,
    TestKind,
};
