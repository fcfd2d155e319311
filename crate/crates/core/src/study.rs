//! Group-level analysis: per-pixel batch RQA, pre/post-event comparisons,
//! windowed joint recurrence between land-cover groups, and Welch t-tests
//! over the resulting measure tables.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::embedding::{embed, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::recurrence::{
    build_matrix, joint_matrix, RecurrenceMatrix, ThresholdConfig,
    ThresholdMode,
};
use crate::rqa::{disruption_profile, measures, windowed_joint_measures, RqaMeasures, WindowedMeasures};
use crate::signal::{split_series, PixelStack, SplitSpec, TimeSeries};
use crate::stats::student_t_two_sided_p;

/// The four reported measures, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Rr,
    Det,
    Lam,
    Div,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Rr, Measure::Det, Measure::Lam, Measure::Div];

    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::Rr => "rr",
            Measure::Det => "det",
            Measure::Lam => "lam",
            Measure::Div => "div",
        }
    }

    /// Extract this measure from one row; `None` when undefined there.
    pub fn extract(&self, m: &RqaMeasures) -> Option<f64> {
        match self {
            Measure::Rr => Some(m.rr),
            Measure::Det => m.det,
            Measure::Lam => m.lam,
            Measure::Div => m.div,
        }
    }
}

/// Welch unequal-variance two-sample t-test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Set when both samples had zero variance but different means; the
    /// statistic is then unbounded and p is reported as 0.
    pub degenerate_variance: bool,
}

fn mean_and_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's t-test with two-sided p from the regularized incomplete beta
/// function. Each sample needs at least two finite values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    for (name, s) in [("a", a), ("b", b)] {
        if s.len() < 2 {
            return Err(Error::TooShort {
                context: "t-test sample",
                needed: 2,
                got: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "t-test sample {name} contains non-finite values"
            )));
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_and_var(a);
    let (mb, vb) = mean_and_var(b);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            TTestResult {
                t: 0.0,
                df: na + nb - 2.0,
                p: 1.0,
                degenerate_variance: false,
            }
        } else {
            TTestResult {
                t: if ma > mb {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df: f64::INFINITY,
                p: 0.0,
                degenerate_variance: true,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    Ok(TTestResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
    degenerate_variance: false,
    })
}

/// Student's pooled-variance two-sample t-test; kept for sensitivity
/// checks against the Welch default.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooShort {
                context: "t-test sample",
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_and_var(a);
    let (mb, vb) = mean_and_var(b);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    let se2 = pooled * (1.0 / na + 1.0 / nb);
    if se2 == 0.0 {
        return Ok(if ma == mb {
            TTestResult {
                t: 0.0,
                df,
                p: 1.0,
                degenerate_variance: false,
            }
        } else {
            TTestResult {
                t: if ma > mb {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df,
                p: 0.0,
                degenerate_variance: true,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    Ok(TTestResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
        degenerate_variance: false,
    })
}

/// Which two-sample test the pipeline reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestKind {
    /// Welch's unequal-variance test; the default because group SDs are
    /// rarely equal in practice.
    #[default]
    Welch,
    /// Student's pooled-variance test, for sensitivity checks.
    Pooled,
}

/// How the threshold is applied across the pixels of a stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpsilonPolicy {
    /// Each pixel gets its own epsilon (per-pixel quantile in target-RR
    /// mode).
    #[default]
    PerPixel,
    /// One epsilon for the whole stack, taken from the pooled distance
    /// distribution of all pixels in target-RR mode.
    Shared,
}

/// Resolve a target-RR threshold against the pooled distances of every
/// pixel in the stack.
fn shared_threshold(
    stack: &PixelStack,
    config: EmbeddingConfig,
    thr: &ThresholdConfig,
) -> Result<ThresholdConfig> {
    let target = match thr.mode {
        ThresholdMode::FixedEpsilon(_) => return Ok(*thr),
        ThresholdMode::TargetRr(t) => t,
    };
    let mut dists = Vec::new();
    let mut diag_total = 0usize;
    let mut entries_total = 0usize;
    for (id, series) in stack.iter() {
        let traj = embed(series, config).map_err(|e| e.for_pixel(id))?;
        let n = traj.len();
        diag_total += n;
        entries_total += n * n;
        for i in 0..n {
            let a = traj.point(i);
            for j in (i + 1)..n {
                dists.push(thr.norm.distance(a, traj.point(j)));
            }
        }
    }
    let need = (target * entries_total as f64).ceil() as usize;
    let epsilon = if diag_total >= need {
        0.0
    } else {
        dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let mut cum = diag_total;
        let mut idx = 0;
        let mut eps = *dists.last().expect("non-empty stack");
        while idx < dists.len() {
            let d = dists[idx];
            let mut tie_end = idx;
            while tie_end < dists.len() && dists[tie_end] == d {
                tie_end += 1;
            }
            cum += 2 * (tie_end - idx);
            if cum >= need {
                eps = d;
                break;
            }
            idx = tie_end;
        }
        eps
    };
    Ok(ThresholdConfig::fixed(epsilon, thr.norm)?.with_theiler(thr.theiler))
}

/// One measures row per pixel, in pixel-id order. A failing pixel aborts
/// the whole batch with its id attached; pixels are never silently
/// skipped.
pub fn per_pixel_measures(
    stack: &PixelStack,
    config: EmbeddingConfig,
    thr: &ThresholdConfig,
    lmin: usize,
    vmin: usize,
) -> Result<Vec<(String, RqaMeasures)>> {
    per_pixel_measures_with(stack, config, thr, lmin, vmin, EpsilonPolicy::PerPixel)
}

pub fn per_pixel_measures_with(
    stack: &PixelStack,
    config: EmbeddingConfig,
    thr: &ThresholdConfig,
    lmin: usize,
    vmin: usize,
    policy: EpsilonPolicy,
) -> Result<Vec<(String, RqaMeasures)>> {
    let thr = match policy {
        EpsilonPolicy::PerPixel => *thr,
        EpsilonPolicy::Shared => shared_threshold(stack, config, thr)?,
    };
    let pixels: Vec<(&str, &TimeSeries)> = stack.iter().collect();
    pixels
        .into_par_iter()
        .map(|(id, series)| {
            let row = (|| -> Result<RqaMeasures> {
                let traj = embed(series, config)?;
                let rm = build_matrix(&traj, &thr)?;
                measures(&rm, lmin, vmin, thr.theiler)
            })()
            .map_err(|e| e.for_pixel(id))?;
            Ok((id.to_string(), row))
        })
        .collect()
}

/// Mean and sample standard deviation of one measure over a table, with
/// undefined rows excluded and counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSummary {
    pub mean: f64,
    /// `None` at n = 1, where the n-1 denominator is undefined.
    pub sd: Option<f64>,
    /// Rows that contributed.
    pub n: usize,
    /// Rows where the measure was undefined.
    pub excluded: usize,
}

/// Per-measure summaries over one pixel table; a measure that is undefined
/// on every row gets `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub pixel_count: usize,
    pub rr: Option<MeasureSummary>,
    pub det: Option<MeasureSummary>,
    pub lam: Option<MeasureSummary>,
    pub div: Option<MeasureSummary>,
}

impl GroupSummary {
    pub fn get(&self, measure: Measure) -> Option<&MeasureSummary> {
        match measure {
            Measure::Rr => self.rr.as_ref(),
            Measure::Det => self.det.as_ref(),
            Measure::Lam => self.lam.as_ref(),
            Measure::Div => self.div.as_ref(),
        }
    }
}

fn summarize_measure(table: &[(String, RqaMeasures)], measure: Measure) -> Option<MeasureSummary> {
    let values: Vec<f64> = table.iter().filter_map(|(_, m)| measure.extract(m)).collect();
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n >= 2).then(|| {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    });
    Some(MeasureSummary {
        mean,
        sd,
        n,
        excluded: table.len() - n,
    })
}

/// Spatial averaging of a per-pixel table.
pub fn group_summary(table: &[(String, RqaMeasures)]) -> GroupSummary {
    GroupSummary {
        pixel_count: table.len(),
        rr: summarize_measure(table, Measure::Rr),
        det: summarize_measure(table, Measure::Det),
        lam: summarize_measure(table, Measure::Lam),
        div: summarize_measure(table, Measure::Div),
    }
}

/// A per-pixel table together with its summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTable {
    pub rows: Vec<(String, RqaMeasures)>,
    pub summary: GroupSummary,
}

impl MeasureTable {
    fn from_rows(rows: Vec<(String, RqaMeasures)>) -> Self {
        let summary = group_summary(&rows);
        Self { rows, summary }
    }

    fn values(&self, measure: Measure) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|(_, m)| measure.extract(m))
            .collect()
    }
}

/// One comparison row of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct TTestRow {
    pub measure: Measure,
    pub group_a: String,
    pub group_b: String,
    pub result: TTestResult,
}

/// Pre/post tables of one group in step 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTables {
    pub pre: MeasureTable,
    pub post: MeasureTable,
}

/// Windowed joint measures of one designated pair at one window length.
#[derive(Debug, Clone, PartialEq)]
pub struct JointWindowResult {
    pub pair: (String, String),
    pub window_len: usize,
    pub windows: WindowedMeasures,
}

/// Full-series joint recurrence of a pair's mean series: the matrix and
/// its disruption profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProfile {
    pub pair: (String, String),
    pub matrix: RecurrenceMatrix,
    pub profile: Vec<f64>,
}

/// Mean-series recurrence plot of one group, with its disruption profile.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPlot {
    pub group: String,
    pub matrix: RecurrenceMatrix,
    pub profile: Vec<f64>,
}

/// Pipeline configuration. Embedding defaults: dimension 3, delay 1 on
/// full series; both set to 1 on the short split halves and sliding
/// windows, which are too short for a deep embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub full_embedding: EmbeddingConfig,
    pub short_embedding: EmbeddingConfig,
    pub threshold: ThresholdConfig,
    pub lmin: usize,
    pub vmin: usize,
    /// Sliding-window lengths for step 3; 46 and 69 samples are two and
    /// three years of 16-day composites.
    pub window_lens: Vec<usize>,
    pub window_step: usize,
    /// Stack pairs compared by joint recurrence in step 3.
    pub joint_pairs: Vec<(String, String)>,
    /// Smoothing width of disruption profiles.
    pub profile_band: usize,
    pub epsilon_policy: EpsilonPolicy,
    pub test_kind: TestKind,
}

impl PipelineParams {
    pub fn new(threshold: ThresholdConfig) -> Self {
        Self {
            full_embedding: EmbeddingConfig::new(3, 1).expect("static"),
            short_embedding: EmbeddingConfig::new(1, 1).expect("static"),
            threshold,
            lmin: 2,
            vmin: 2,
            window_lens: vec![46, 69],
            window_step: 1,
            joint_pairs: Vec::new(),
            profile_band: 5,
            epsilon_policy: EpsilonPolicy::PerPixel,
            test_kind: TestKind::Welch,
        }
    }
}

/// Everything the three-step protocol produces, in deterministic group and
/// window order.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub split: SplitSpec,
    /// Step 1: full-series per-pixel tables per group.
    pub step1: BTreeMap<String, MeasureTable>,
    /// Step 1: pairwise between-group comparisons per measure.
    pub step1_tests: Vec<TTestRow>,
    /// Step 2: pre/post tables per group.
    pub step2: BTreeMap<String, SplitTables>,
    /// Step 2: within-group pre-vs-post and between-group per-phase
    /// comparisons. Group labels carry `:pre` / `:post` suffixes.
    pub step2_tests: Vec<TTestRow>,
    /// Step 3: windowed joint measures of the designated pairs (mean
    /// series of each stack), per window length.
    pub joint_windows: Vec<JointWindowResult>,
    /// Step 3: full-series joint disruption profiles of the designated
    /// pairs.
    pub joint_profiles: Vec<PairProfile>,
    /// Mean-series recurrence plot and profile per group.
    pub group_plots: Vec<GroupPlot>,
}

fn phase_label(group: &str, phase: &str) -> String {
    format!("{group}:{phase}")
}

/// Compare one measure between two tables; `None` when either side has
/// fewer than two defined values.
fn test_between(
    kind: TestKind,
    measure: Measure,
    label_a: String,
    table_a: &MeasureTable,
    label_b: String,
    table_b: &MeasureTable,
) -> Option<TTestRow> {
    let a = table_a.values(measure);
    let b = table_b.values(measure);
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let result = match kind {
        TestKind::Welch => welch_t_test(&a, &b),
        TestKind::Pooled => pooled_t_test(&a, &b),
    }
    .expect("validated lengths and finite measures");
    Some(TTestRow {
        measure,
        group_a: label_a,
        group_b: label_b,
        result,
    })
}

/// Run the three-step protocol over labeled stacks.
///
/// Step 1 computes full-series per-pixel measures and between-group tests;
/// step 2 repeats the per-pixel analysis on the pre/post halves around
/// `split`; step 3 runs windowed joint recurrence over the designated
/// pairs' mean series and derives disruption profiles from the full-series
/// joint plots.
pub fn run_pipeline(
    stacks: &BTreeMap<String, PixelStack>,
    split: SplitSpec,
    params: &PipelineParams,
) -> Result<StudyReport> {
    if stacks.is_empty() {
        return Err(Error::Config("no pixel stacks supplied".into()));
    }
    let mut lens = stacks.iter().map(|(label, s)| (label, s.series_len()));
    let (_, len) = lens.next().expect("non-empty");
    for (label, l) in lens {
        if l != len {
            return Err(Error::DimensionMismatch(format!(
                "stack {label} has series length {l}, expected {len}"
            )));
        }
    }
    split.validate_for_len(len)?;
    for (a, b) in &params.joint_pairs {
        for label in [a, b] {
            if !stacks.contains_key(label) {
                return Err(Error::Config(format!(
                    "joint pair references unknown stack {label:?}"
                )));
            }
        }
    }

    // Step 1: full series, per pixel.
    let mut step1 = BTreeMap::new();
    for (label, stack) in stacks {
        let rows = per_pixel_measures_with(
            stack,
            params.full_embedding,
            &params.threshold,
            params.lmin,
            params.vmin,
            params.epsilon_policy,
        )?;
        step1.insert(label.clone(), MeasureTable::from_rows(rows));
    }
    let mut step1_tests = Vec::new();
    let labels: Vec<&String> = step1.keys().collect();
    for (i, la) in labels.iter().enumerate() {
        for lb in &labels[i + 1..] {
            for measure in Measure::ALL {
                if let Some(row) = test_between(
                    params.test_kind,
                    measure,
                    (*la).clone(),
                    &step1[*la],
                    (*lb).clone(),
                    &step1[*lb],
                ) {
                    step1_tests.push(row);
                }
            }
        }
    }

    // Step 2: split halves at the short embedding.
    let mut step2 = BTreeMap::new();
    for (label, stack) in stacks {
        let mut pre_map = BTreeMap::new();
        let mut post_map = BTreeMap::new();
        for (id, series) in stack.iter() {
            let (pre, post) = split_series(series, split).map_err(|e| e.for_pixel(id))?;
            pre_map.insert(id.to_string(), pre);
            post_map.insert(id.to_string(), post);
        }
        let pre_stack = PixelStack::new(pre_map, stack.group())?;
        let post_stack = PixelStack::new(post_map, stack.group())?;
        let pre = per_pixel_measures_with(
            &pre_stack,
            params.short_embedding,
            &params.threshold,
            params.lmin,
            params.vmin,
            params.epsilon_policy,
        )?;
        let post = per_pixel_measures_with(
            &post_stack,
            params.short_embedding,
            &params.threshold,
            params.lmin,
            params.vmin,
            params.epsilon_policy,
        )?;
        step2.insert(
            label.clone(),
            SplitTables {
                pre: MeasureTable::from_rows(pre),
                post: MeasureTable::from_rows(post),
            },
        );
    }
    let mut step2_tests = Vec::new();
    for (label, tables) in &step2 {
        for measure in Measure::ALL {
            if let Some(row) = test_between(
                params.test_kind,
                measure,
                phase_label(label, "pre"),
                &tables.pre,
                phase_label(label, "post"),
                &tables.post,
            ) {
                step2_tests.push(row);
            }
        }
    }
    for (i, la) in labels.iter().enumerate() {
        for lb in &labels[i + 1..] {
            for phase in ["pre", "post"] {
                let ta = if phase == "pre" {
                    &step2[*la].pre
                } else {
                    &step2[*la].post
                };
                let tb = if phase == "pre" {
                    &step2[*lb].pre
                } else {
                    &step2[*lb].post
                };
                for measure in Measure::ALL {
                    if let Some(row) = test_between(
                        params.test_kind,
                        measure,
                        phase_label(la, phase),
                        ta,
                        phase_label(lb, phase),
                        tb,
                    ) {
                        step2_tests.push(row);
                    }
                }
            }
        }
    }

    // Step 3: joint recurrence over mean series.
    let mean_series: BTreeMap<&String, TimeSeries> = stacks
        .iter()
        .map(|(label, s)| (label, s.mean_series()))
        .collect();
    let mut joint_windows = Vec::new();
    let mut joint_profiles = Vec::new();
    for pair in &params.joint_pairs {
        let a = &mean_series[&pair.0];
        let b = &mean_series[&pair.1];
        for &window_len in &params.window_lens {
            let windows = windowed_joint_measures(
                a,
                b,
                params.short_embedding,
                &params.threshold,
                window_len,
                params.window_step,
                params.lmin,
                params.vmin,
            )?;
            joint_windows.push(JointWindowResult {
                pair: pair.clone(),
                window_len,
                windows,
            });
        }
        let ra = build_matrix(&embed(a, params.full_embedding)?, &params.threshold)?;
        let rb = build_matrix(&embed(b, params.full_embedding)?, &params.threshold)?;
        let joint = joint_matrix(&ra, &rb)?;
        let profile = disruption_profile(&joint, params.profile_band)?;
        joint_profiles.push(PairProfile {
            pair: pair.clone(),
            matrix: joint,
            profile,
        });
    }
    let mut group_plots = Vec::new();
    for label in stacks.keys() {
        let series = &mean_series[label];
        let rm = build_matrix(&embed(series, params.full_embedding)?, &params.threshold)?;
        let profile = disruption_profile(&rm, params.profile_band)?;
        group_plots.push(GroupPlot {
            group: label.clone(),
            matrix: rm,
            profile,
        });
    }

    Ok(StudyReport {
        split,
        step1,
        step1_tests,
        step2,
        step2_tests,
        joint_windows,
        joint_profiles,
        group_plots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::Norm;
    use crate::signal::{sine_series, white_noise_series};

    #[test]
    fn welch_documented_example() {
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.t, -1.0);
        assert_eq!(r.df, 8.0);
        assert!((r.p - 0.34659350708733425).abs() < 1e-12, "p = {}", r.p);
    }

    #[test]
    fn welch_identical_samples() {
        let a = [1.0, 2.5, 3.0, 4.5];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn welch_swap_negates_t() {
        let a = [1.0, 2.0, 5.0, 3.0];
        let b = [4.0, 4.5, 6.0];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p, ba.p);
        assert_eq!(ab.df, ba.df);
    }

    #[test]
    fn welch_zero_variance_cases() {
        let r = welch_t_test(&[2.0, 2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        assert!(!r.degenerate_variance);

        let r = welch_t_test(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(r.p, 0.0);
        assert!(r.degenerate_variance);
        assert!(r.t.is_infinite() && r.t < 0.0);
    }

    #[test]
    fn welch_rejects_short_or_nonfinite() {
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
        assert!(welch_t_test(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pooled_reference_case() {
        // frozen from a 30-digit reference computation
        let r = pooled_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        assert!((r.t - -2.1182963643408085).abs() < 1e-12, "t = {}", r.t);
        assert_eq!(r.df, 7.0);
        assert!((r.p - 0.071902154196621101).abs() < 1e-12, "p = {}", r.p);
        // equal sizes and equal variances: pooled and Welch coincide
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 3.0, 4.0, 5.0, 6.0];
        let pooled = pooled_t_test(&a, &b).unwrap();
        let welch = welch_t_test(&a, &b).unwrap();
        assert_eq!(pooled.t, welch.t);
        assert_eq!(pooled.df, welch.df);
        assert_eq!(pooled.p, welch.p);
    }

    fn row(rr: f64, det: Option<f64>) -> RqaMeasures {
        RqaMeasures {
            rr,
            det,
            lam: Some(0.5),
            div: None,
            lmax: 0,
        }
    }

    #[test]
    fn summary_two_point_case() {
        let table = vec![
            ("a".to_string(), row(0.2, Some(0.7))),
            ("b".to_string(), row(0.4, None)),
        ];
        let s = group_summary(&table);
        let rr = s.rr.unwrap();
        assert!((rr.mean - 0.3).abs() < 1e-15);
        assert!((rr.sd.unwrap() - 0.1414213562373095).abs() < 1e-12);
        let det = s.det.unwrap();
        assert_eq!((det.n, det.excluded), (1, 1));
        assert_eq!(det.sd, None); // single defined value
        assert!(s.div.is_none()); // undefined everywhere
    }

    #[test]
    fn summary_identical_rows_zero_sd() {
        let table = vec![
            ("a".to_string(), row(0.25, Some(0.9))),
            ("b".to_string(), row(0.25, Some(0.9))),
            ("c".to_string(), row(0.25, Some(0.9))),
        ];
        let s = group_summary(&table);
        assert_eq!(s.rr.unwrap().sd, Some(0.0));
        assert_eq!(s.det.unwrap().sd, Some(0.0));
    }

    fn noise_stack(count: usize, n: usize, group: &str, seed0: u64) -> PixelStack {
        let mut map = BTreeMap::new();
        for k in 0..count {
            map.insert(
                format!("px{k:03}"),
                white_noise_series(n, seed0 + k as u64).unwrap(),
            );
        }
        PixelStack::new(map, group).unwrap()
    }

    fn sine_stack(count: usize, n: usize, group: &str) -> PixelStack {
        let mut map = BTreeMap::new();
        for k in 0..count {
            map.insert(
                format!("px{k:03}"),
                sine_series(n, 24.0, k as f64 * 0.37).unwrap(),
            );
        }
        PixelStack::new(map, group).unwrap()
    }

    #[test]
    fn single_pixel_batch_matches_direct_measures() {
        let stack = noise_stack(1, 150, "g", 9);
        let config = EmbeddingConfig::new(2, 1).unwrap();
        let thr = ThresholdConfig::target_rr(0.2, Norm::Max).unwrap();
        let table = per_pixel_measures(&stack, config, &thr, 2, 2).unwrap();
        assert_eq!(table.len(), 1);
        let direct = measures(
            &build_matrix(&embed(stack.get("px000").unwrap(), config).unwrap(), &thr).unwrap(),
            2,
            2,
            0,
        )
        .unwrap();
        assert_eq!(table[0].1, direct);
    }

    #[test]
    fn identical_pixels_identical_rows() {
        let series = white_noise_series(120, 3).unwrap();
        let mut map = BTreeMap::new();
        for k in 0..5 {
            map.insert(format!("p{k}"), series.clone());
        }
        let stack = PixelStack::new(map, "g").unwrap();
        let thr = ThresholdConfig::target_rr(0.15, Norm::Max).unwrap();
        let table =
            per_pixel_measures(&stack, EmbeddingConfig::new(3, 1).unwrap(), &thr, 2, 2).unwrap();
        for (_, m) in &table[1..] {
            assert_eq!(*m, table[0].1);
        }
    }

    #[test]
    fn sine_pixels_dominate_noise_pixels_in_det() {
        let noise = noise_stack(20, 200, "noise", 1000);
        let sine = sine_stack(20, 200, "sine");
        let thr = ThresholdConfig::target_rr(0.10, Norm::Max).unwrap();
        let config = EmbeddingConfig::new(1, 1).unwrap();
        let tn = per_pixel_measures(&noise, config, &thr, 2, 2).unwrap();
        let ts = per_pixel_measures(&sine, config, &thr, 2, 2).unwrap();
        let max_noise = tn
            .iter()
            .map(|(_, m)| m.det.unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let min_sine = ts
            .iter()
            .map(|(_, m)| m.det.unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(
            min_sine > max_noise,
            "sine min {min_sine} vs noise max {max_noise}"
        );
    }

    #[test]
    fn shared_epsilon_mode_applies_one_threshold() {
        let stack = noise_stack(4, 100, "g", 77);
        let config = EmbeddingConfig::new(1, 1).unwrap();
        let thr = ThresholdConfig::target_rr(0.3, Norm::Max).unwrap();
        let shared = shared_threshold(&stack, config, &thr).unwrap();
        let ThresholdMode::FixedEpsilon(eps) = shared.mode else {
            panic!("expected resolved epsilon");
        };
        assert!(eps > 0.0 && eps < 1.0);
        // per-pixel RRs now scatter around the target instead of pinning it
        let rows =
            per_pixel_measures_with(&stack, config, &thr, 2, 2, EpsilonPolicy::Shared).unwrap();
        let mean_rr: f64 = rows.iter().map(|(_, m)| m.rr).sum::<f64>() / rows.len() as f64;
        assert!((mean_rr - 0.3).abs() < 0.05, "mean RR {mean_rr}");
    }

    fn tiny_pipeline_params() -> PipelineParams {
        let thr = ThresholdConfig::target_rr(0.3, Norm::Max).unwrap();
        let mut p = PipelineParams::new(thr);
        p.window_lens = vec![40];
        p.profile_band = 5;
        p
    }

    #[test]
    fn identical_stacks_test_at_p_one() {
        let a = sine_stack(6, 160, "a");
        let b = sine_stack(6, 160, "b");
        let mut stacks = BTreeMap::new();
        stacks.insert("a".to_string(), a);
        stacks.insert("b".to_string(), b);
        let mut params = tiny_pipeline_params();
        params.joint_pairs = vec![("a".to_string(), "b".to_string())];
        let report = run_pipeline(&stacks, SplitSpec::new(79, 80).unwrap(), &params).unwrap();
        assert!(!report.step1_tests.is_empty());
        for row in &report.step1_tests {
            assert_eq!(row.result.p, 1.0, "{:?}", row);
        }
    }

    #[test]
    fn step2_composes_with_split_series() {
        let stack = noise_stack(3, 120, "g", 5);
        let mut stacks = BTreeMap::new();
        stacks.insert("g".to_string(), stack.clone());
        let params = tiny_pipeline_params();
        let split = SplitSpec::new(49, 70).unwrap();
        let report = run_pipeline(&stacks, split, &params).unwrap();
        let tables = &report.step2["g"];
        for (id, series) in stack.iter() {
            let (pre, post) = split_series(series, split).unwrap();
            for (half, table) in [(pre, &tables.pre), (post, &tables.post)] {
                let direct = measures(
                    &build_matrix(
                        &embed(&half, params.short_embedding).unwrap(),
                        &params.threshold,
                    )
                    .unwrap(),
                    params.lmin,
                    params.vmin,
                    params.threshold.theiler,
                )
                .unwrap();
                let in_report = &table.rows.iter().find(|(p, _)| p == id).unwrap().1;
                assert_eq!(*in_report, direct);
            }
        }
    }

    #[test]
    fn pipeline_rejects_unknown_pair_and_ragged_stacks() {
        let mut stacks = BTreeMap::new();
        stacks.insert("a".to_string(), sine_stack(2, 120, "a"));
        let mut params = tiny_pipeline_params();
        params.joint_pairs = vec![("a".to_string(), "missing".to_string())];
        let err = run_pipeline(&stacks, SplitSpec::new(49, 60).unwrap(), &params).unwrap_err();
        assert!(matches!(err, Error::Config(_)));

        stacks.insert("b".to_string(), sine_stack(2, 100, "b"));
        let params = tiny_pipeline_params();
        let err = run_pipeline(&stacks, SplitSpec::new(49, 60).unwrap(), &params).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn group_means_permutation_invariant() {
        // same pixels under different ids end up with identical summaries
        let mut m1 = BTreeMap::new();
        let mut m2 = BTreeMap::new();
        for (k, seed) in [0u64, 1, 2, 3].iter().enumerate() {
            let s = white_noise_series(100, *seed).unwrap();
            m1.insert(format!("a{k}"), s.clone());
            m2.insert(format!("z{}", 3 - k), s);
        }
        let thr = ThresholdConfig::target_rr(0.2, Norm::Max).unwrap();
        let config = EmbeddingConfig::new(1, 1).unwrap();
        let t1 =
            per_pixel_measures(&PixelStack::new(m1, "g").unwrap(), config, &thr, 2, 2).unwrap();
        let t2 =
            per_pixel_measures(&PixelStack::new(m2, "g").unwrap(), config, &thr, 2, 2).unwrap();
        let s1 = group_summary(&t1);
        let s2 = group_summary(&t2);
        assert_eq!(s1.rr.unwrap().mean, s2.rr.unwrap().mean);
        assert_eq!(s1.det.unwrap().mean, s2.det.unwrap().mean);
    }
}
