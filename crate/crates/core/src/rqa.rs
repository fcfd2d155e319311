//! Line-structure extraction and the four complexity measures (RR, DET,
//! LAM, DIV), sliding-window variants, and column-density disruption
//! profiling.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::embedding::{embed_slice, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::recurrence::{build_matrix, joint_matrix, RecurrenceMatrix, ThresholdConfig};
use crate::signal::TimeSeries;

/// Counts of maximal line lengths: `diagonal[l]` lines of exactly `l`
/// recurrent points along diagonals outside the Theiler band, `vertical[v]`
/// runs down columns (all rows, the identity line included).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LineHistograms {
    pub diagonal: BTreeMap<usize, usize>,
    pub vertical: BTreeMap<usize, usize>,
}

impl LineHistograms {
    /// Total recurrence points sitting on counted diagonal lines.
    pub fn diagonal_points(&self) -> usize {
        self.diagonal.iter().map(|(l, c)| l * c).sum()
    }

    pub fn vertical_points(&self) -> usize {
        self.vertical.iter().map(|(l, c)| l * c).sum()
    }

    /// Longest counted diagonal line, 0 when none exists.
    pub fn longest_diagonal(&self) -> usize {
        self.diagonal.keys().next_back().copied().unwrap_or(0)
    }
}

fn record_run(hist: &mut BTreeMap<usize, usize>, run: &mut usize) {
    if *run > 0 {
        *hist.entry(*run).or_insert(0) += 1;
        *run = 0;
    }
}

/// Count maximal runs of recurrent points along every diagonal with offset
/// `|k| > theiler` and down every column. Lines cut off by the matrix
/// border count at their truncated length.
pub fn line_histograms(rm: &RecurrenceMatrix, theiler: usize) -> LineHistograms {
    let n = rm.n();
    let mut hists = LineHistograms::default();

    for k in (theiler + 1)..n {
        // offset +k (above the identity line) and -k (below)
        let mut run_hi = 0usize;
        let mut run_lo = 0usize;
        for i in 0..(n - k) {
            if rm.get(i, i + k) {
                run_hi += 1;
            } else {
                record_run(&mut hists.diagonal, &mut run_hi);
            }
            if rm.get(i + k, i) {
                run_lo += 1;
            } else {
                record_run(&mut hists.diagonal, &mut run_lo);
            }
        }
        record_run(&mut hists.diagonal, &mut run_hi);
        record_run(&mut hists.diagonal, &mut run_lo);
    }

    for j in 0..n {
        let mut run = 0usize;
        for i in 0..n {
            if rm.get(i, j) {
                run += 1;
            } else {
                record_run(&mut hists.vertical, &mut run);
            }
        }
        record_run(&mut hists.vertical, &mut run);
    }

    hists
}

/// The four recurrence measures of one matrix (or window).
///
/// `det`, `lam` and `div` are `None` when their defining denominator is
/// empty: no diagonal recurrence points at all for DET/DIV, no vertical
/// points for LAM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RqaMeasures {
    /// Fraction of recurrent entries over n^2, identity line included.
    pub rr: f64,
    /// Fraction of diagonal recurrence points on lines of length >= lmin.
    pub det: Option<f64>,
    /// Fraction of vertical recurrence points on runs of length >= vmin.
    pub lam: Option<f64>,
    /// Inverse of the longest diagonal line outside the Theiler band.
    pub div: Option<f64>,
    /// Longest diagonal line outside the Theiler band, 0 when none.
    pub lmax: usize,
}

fn line_fraction(hist: &BTreeMap<usize, usize>, min_len: usize) -> Option<f64> {
    let total: usize = hist.iter().map(|(l, c)| l * c).sum();
    if total == 0 {
        return None;
    }
    let long: usize = hist
        .iter()
        .filter(|(l, _)| **l >= min_len)
        .map(|(l, c)| l * c)
        .sum();
    Some(long as f64 / total as f64)
}

/// Compute RR, DET, LAM, DIV and Lmax from one matrix.
pub fn measures(
    rm: &RecurrenceMatrix,
    lmin: usize,
    vmin: usize,
    theiler: usize,
) -> Result<RqaMeasures> {
    if lmin < 2 {
        return Err(Error::Parameter {
            name: "lmin",
            reason: "minimum diagonal line length must be at least 2".into(),
        });
    }
    if vmin < 2 {
        return Err(Error::Parameter {
            name: "vmin",
            reason: "minimum vertical line length must be at least 2".into(),
        });
    }
    let hists = line_histograms(rm, theiler);
    let lmax = hists.longest_diagonal();
    Ok(RqaMeasures {
        rr: rm.recurrence_rate(),
        det: line_fraction(&hists.diagonal, lmin),
        lam: line_fraction(&hists.vertical, vmin),
        div: (lmax >= 1).then(|| 1.0 / lmax as f64),
        lmax,
    })
}

/// Measures of every sliding window, ordered by window start.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedMeasures {
    pub window_len: usize,
    pub step: usize,
    pub entries: Vec<(usize, RqaMeasures)>,
}

fn window_starts(len: usize, window_len: usize, step: usize) -> Result<Vec<usize>> {
    if step < 1 {
        return Err(Error::Parameter {
            name: "step",
            reason: "must be at least 1".into(),
        });
    }
    if window_len > len {
        return Err(Error::TooShort {
            context: "sliding window",
            needed: window_len,
            got: len,
        });
    }
    Ok((0..=len - window_len).step_by(step).collect())
}

/// Slide a window along the series; embed, threshold and measure each
/// window independently. In target-RR mode the epsilon is recomputed per
/// window.
#[allow(clippy::too_many_arguments)]
pub fn windowed_measures(
    series: &TimeSeries,
    config: EmbeddingConfig,
    thr: &ThresholdConfig,
    window_len: usize,
    step: usize,
    lmin: usize,
    vmin: usize,
) -> Result<WindowedMeasures> {
    config.point_count(window_len)?; // fail fast if windows cannot embed
    let starts = window_starts(series.len(), window_len, step)?;
    let u = series.values();
    let entries = starts
        .into_par_iter()
        .map(|s| {
            let traj = embed_slice(&u[s..s + window_len], config)?;
            let rm = build_matrix(&traj, thr)?;
            Ok((s, measures(&rm, lmin, vmin, thr.theiler)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowedMeasures {
        window_len,
        step,
        entries,
    })
}

/// Windowed joint recurrence of two equal-length series: per window, both
/// matrices are built separately (each with its own epsilon in target-RR
/// mode) and combined by element-wise AND before measuring.
#[allow(clippy::too_many_arguments)]
pub fn windowed_joint_measures(
    a: &TimeSeries,
    b: &TimeSeries,
    config: EmbeddingConfig,
    thr: &ThresholdConfig,
    window_len: usize,
    step: usize,
    lmin: usize,
    vmin: usize,
) -> Result<WindowedMeasures> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "joint analysis needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    config.point_count(window_len)?;
    let starts = window_starts(a.len(), window_len, step)?;
    let (ua, ub) = (a.values(), b.values());
    let entries = starts
        .into_par_iter()
        .map(|s| {
            let ra = build_matrix(&embed_slice(&ua[s..s + window_len], config)?, thr)?;
            let rb = build_matrix(&embed_slice(&ub[s..s + window_len], config)?, thr)?;
            let joint = joint_matrix(&ra, &rb)?;
            Ok((s, measures(&joint, lmin, vmin, thr.theiler)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowedMeasures {
        window_len,
        step,
        entries,
    })
}

/// Column recurrence density smoothed by a centered moving average of
/// `band` columns (truncated at the edges). Low values mark disruption
/// epochs: the white bands an abrupt transition cuts through a plot.
pub fn disruption_profile(rm: &RecurrenceMatrix, band: usize) -> Result<Vec<f64>> {
    let n = rm.n();
    if band < 1 || band > n {
        return Err(Error::Parameter {
            name: "band",
            reason: format!("smoothing width must be in 1..={n}, got {band}"),
        });
    }
    let density: Vec<f64> = (0..n).map(|j| rm.column_density(j)).collect();
    let lo = (band - 1) / 2;
    let hi = band / 2;
    Ok((0..n)
        .map(|j| {
            let start = j.saturating_sub(lo);
            let end = (j + hi).min(n - 1);
            let w = &density[start..=end];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect())
}
