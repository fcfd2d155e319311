//! Recurrence-matrix construction, threshold strategies, joint recurrence,
//! and plot rendering.
//!
//! A matrix entry (i, j) is recurrent when the distance between states i
//! and j is at or below the threshold; ties count as recurrent. Storage is
//! one bit per entry, so a full 323-point pixel matrix is ~13 KB and large
//! per-pixel batches stay cheap.

use crate::embedding::PhaseTrajectory;
use crate::error::{Error, Result};

/// Distance norm over state vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// Maximum (Chebyshev) norm, the paper-default.
    Max,
    Euclidean,
    Manhattan,
}

impl Norm {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::Max => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
            Norm::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Norm::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Norm::Max => "max",
            Norm::Euclidean => "euclidean",
            Norm::Manhattan => "manhattan",
        }
    }
}

/// How the recurrence threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Apply this epsilon directly.
    FixedEpsilon(f64),
    /// Pick the smallest epsilon whose recurrence rate reaches the target;
    /// recomputed per matrix (and per window in sliding analyses).
    TargetRr(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub mode: ThresholdMode,
    pub norm: Norm,
    /// Half-width of the diagonal band excluded from line statistics.
    /// Matrix entries themselves are never blanked.
    pub theiler: usize,
}

impl ThresholdConfig {
    pub fn fixed(epsilon: f64, norm: Norm) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::Parameter {
                name: "epsilon",
                reason: format!("must be >= 0, got {epsilon}"),
            });
        }
        Ok(Self {
            mode: ThresholdMode::FixedEpsilon(epsilon),
            norm,
            theiler: 0,
        })
    }

    pub fn target_rr(target: f64, norm: Norm) -> Result<Self> {
        if !target.is_finite() || target <= 0.0 || target > 1.0 {
            return Err(Error::Parameter {
                name: "target_rr",
                reason: format!("must be in (0, 1], got {target}"),
            });
        }
        Ok(Self {
            mode: ThresholdMode::TargetRr(target),
            norm,
            theiler: 0,
        })
    }

    pub fn with_theiler(mut self, theiler: usize) -> Self {
        self.theiler = theiler;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Plain,
    Joint,
}

/// Construction metadata of a thresholded matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildMeta {
    pub threshold_used: f64,
    pub config: ThresholdConfig,
}

/// Symmetric binary recurrence matrix, bit-packed row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceMatrix {
    bits: Vec<u64>,
    n: usize,
    words_per_row: usize,
    kind: MatrixKind,
    meta: Option<BuildMeta>,
}

impl RecurrenceMatrix {
    fn empty(n: usize, kind: MatrixKind, meta: Option<BuildMeta>) -> Self {
        let words_per_row = n.div_ceil(64);
        Self {
            bits: vec![0; words_per_row * n],
            n,
            words_per_row,
            kind,
            meta,
        }
    }

    /// Build a matrix directly from a predicate; handy for tests and for
    /// importing matrices computed elsewhere. Carries no threshold
    /// metadata.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::empty(n, MatrixKind::Plain, None);
        for i in 0..n {
            for j in 0..n {
                if f(i, j) {
                    m.set(i, j);
                }
            }
        }
        m
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words_per_row + j / 64] |= 1u64 << (j % 64);
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// The epsilon actually applied, when this matrix came from
    /// [`build_matrix`]; `None` for hand-built and joint matrices.
    pub fn threshold_used(&self) -> Option<f64> {
        self.meta.map(|m| m.threshold_used)
    }

    pub fn build_config(&self) -> Option<ThresholdConfig> {
        self.meta.map(|m| m.config)
    }

    /// Total count of recurrent entries (padding bits are always zero).
    pub fn ones_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Fraction of recurrent entries over all n^2, the line of identity
    /// included.
    pub fn recurrence_rate(&self) -> f64 {
        self.ones_count() as f64 / (self.n * self.n) as f64
    }

    /// Recurrence density of one column over all rows.
    pub fn column_density(&self, j: usize) -> f64 {
        let mut count = 0usize;
        for i in 0..self.n {
            count += self.get(i, j) as usize;
        }
        count as f64 / self.n as f64
    }
}

/// All pairwise distances of the trajectory under `norm`, upper triangle
/// (i < j) only.
fn pairwise_distances(traj: &PhaseTrajectory, norm: Norm) -> Vec<f64> {
    let n = traj.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let a = traj.point(i);
        for j in (i + 1)..n {
            out.push(norm.distance(a, traj.point(j)));
        }
    }
    out
}

/// Smallest distance in the full n^2 multiset (diagonal zeros included)
/// whose cumulative fraction reaches `target_rr`. Thresholding with the
/// result yields RR >= target_rr, with the excess bounded by the tie mass
/// at the returned value.
pub fn epsilon_for_target_rr(
    traj: &PhaseTrajectory,
    target_rr: f64,
    norm: Norm,
) -> Result<f64> {
    if !target_rr.is_finite() || target_rr <= 0.0 || target_rr > 1.0 {
        return Err(Error::Parameter {
            name: "target_rr",
            reason: format!("must be in (0, 1], got {target_rr}"),
        });
    }
    let n = traj.len();
    if n < 2 {
        return Err(Error::TooShort {
            context: "recurrence threshold search",
            needed: 2,
            got: n,
        });
    }
    let need = (target_rr * (n * n) as f64).ceil() as usize;
    if n >= need {
        // the diagonal zeros alone reach the target
        return Ok(0.0);
    }
    let mut dists = pairwise_distances(traj, norm);
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mut cum = n; // diagonal entries at distance zero
    let mut idx = 0;
    while idx < dists.len() {
        let d = dists[idx];
        let mut tie_end = idx;
        while tie_end < dists.len() && dists[tie_end] == d {
            tie_end += 1;
        }
        cum += 2 * (tie_end - idx); // each unordered pair is two entries
        if cum >= need {
            return Ok(d);
        }
        idx = tie_end;
    }
    Ok(*dists.last().expect("n >= 2"))
}

/// Threshold a trajectory into a recurrence matrix. In target-RR mode the
/// epsilon is derived from this trajectory's own distance distribution.
pub fn build_matrix(traj: &PhaseTrajectory, config: &ThresholdConfig) -> Result<RecurrenceMatrix> {
    let n = traj.len();
    if n < 2 {
        return Err(Error::TooShort {
            context: "recurrence matrix",
            needed: 2,
            got: n,
        });
    }
    let epsilon = match config.mode {
        ThresholdMode::FixedEpsilon(e) => e,
        ThresholdMode::TargetRr(t) => epsilon_for_target_rr(traj, t, config.norm)?,
    };
    let mut m = RecurrenceMatrix::empty(
        n,
        MatrixKind::Plain,
        Some(BuildMeta {
            threshold_used: epsilon,
            config: *config,
        }),
    );
    for i in 0..n {
        m.set(i, i); // line of identity: distance zero
        let a = traj.point(i);
        for j in (i + 1)..n {
            if config.norm.distance(a, traj.point(j)) <= epsilon {
                m.set(i, j);
                m.set(j, i);
            }
        }
    }
    Ok(m)
}

/// Element-wise AND of two recurrence matrices: entries where both systems
/// recur simultaneously. The result is `Joint` and carries no single
/// threshold of its own.
pub fn joint_matrix(a: &RecurrenceMatrix, b: &RecurrenceMatrix) -> Result<RecurrenceMatrix> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch(format!(
            "joint recurrence needs equal sizes, got {} and {}",
            a.n, b.n
        )));
    }
    let bits = a
        .bits
        .iter()
        .zip(&b.bits)
        .map(|(x, y)| x & y)
        .collect();
    Ok(RecurrenceMatrix {
        bits,
        n: a.n,
        words_per_row: a.words_per_row,
        kind: MatrixKind::Joint,
        meta: None,
    })
}

/// Output encoding for [`render_plot`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    /// Binary PGM (P5), black = recurrent; matrix row 0 is the bottom
    /// image row so time advances up and to the right.
    Pgm,
    /// `#` = recurrent, `.` = empty, one matrix row per line, printed
    /// bottom row last so the orientation matches the PGM.
    Ascii,
}

pub fn render_plot(rm: &RecurrenceMatrix, format: RenderFormat) -> Vec<u8> {
    let n = rm.n;
    match format {
        RenderFormat::Pgm => {
            let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
            out.reserve(n * n);
            for i in (0..n).rev() {
                for j in 0..n {
                    out.push(if rm.get(i, j) { 0 } else { 255 });
                }
            }
            out
        }
        RenderFormat::Ascii => {
            let mut out = Vec::with_capacity((n + 1) * n);
            for i in (0..n).rev() {
                for j in 0..n {
                    out.push(if rm.get(i, j) { b'#' } else { b'.' });
                }
                out.push(b'\n');
            }
            out
        }
    }
}
