//! Delay-coordinate phase-space reconstruction, plus data-driven selection
//! of the delay (histogram mutual information) and the dimension (false
//! nearest neighbors).

use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Kennel distance-ratio threshold for the false-neighbor test.
const FNN_RATIO_TOL: f64 = 10.0;
/// Kennel attractor-size threshold.
const FNN_SIZE_TOL: f64 = 2.0;
/// Neighbors closer than this fraction of the series SD are numerical
/// duplicates (exact phase repeats of a noise-free oscillation) and are
/// skipped by the nearest-neighbor search.
const FNN_DUPLICATE_FLOOR: f64 = 1e-8;

/// Embedding dimension and delay, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingConfig {
    m: usize,
    tau: usize,
}

impl EmbeddingConfig {
    pub fn new(m: usize, tau: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Parameter {
                name: "embedding_dim",
                reason: "must be at least 1".into(),
            });
        }
        if tau < 1 {
            return Err(Error::Parameter {
                name: "delay",
                reason: "must be at least 1".into(),
            });
        }
        Ok(Self { m, tau })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    /// Number of reconstructed state vectors for a series of length `len`:
    /// `len - (m-1)*tau`, requiring at least 2.
    pub fn point_count(&self, len: usize) -> Result<usize> {
        let span = (self.m - 1) * self.tau;
        if len < span + 2 {
            return Err(Error::TooShort {
                context: "delay embedding",
                needed: span + 2,
                got: len,
            });
        }
        Ok(len - span)
    }
}

/// A reconstructed trajectory: `point_count` vectors of `m` components,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    data: Vec<f64>,
    dim: usize,
    config: EmbeddingConfig,
    source_len: usize,
}

impl PhaseTrajectory {
    /// Wrap explicit state vectors (all the same dimension) as a trajectory.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooShort {
                context: "phase trajectory",
                needed: 2,
                got: points.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Parameter {
                name: "points",
                reason: "state vectors must have at least one component".into(),
            });
        }
        let mut data = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {i} has {} components, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Degenerate(format!(
                    "non-finite component in point {i}"
                )));
            }
            data.extend_from_slice(p);
        }
        let source_len = points.len();
        Ok(Self {
            data,
            dim,
            config: EmbeddingConfig::new(dim, 1)?,
            source_len,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> EmbeddingConfig {
        self.config
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Reconstruct state vectors `(u_i, u_{i+tau}, ..., u_{i+(m-1)tau})`.
pub fn embed(series: &TimeSeries, config: EmbeddingConfig) -> Result<PhaseTrajectory> {
    embed_slice(series.values(), config)
}

pub(crate) fn embed_slice(u: &[f64], config: EmbeddingConfig) -> Result<PhaseTrajectory> {
    let count = config.point_count(u.len())?;
    let (m, tau) = (config.m, config.tau);
    let mut data = Vec::with_capacity(count * m);
    for i in 0..count {
        for j in 0..m {
            data.push(u[i + j * tau]);
        }
    }
    Ok(PhaseTrajectory {
        data,
        dim: m,
        config,
        source_len: u.len(),
    })
}

/// Default histogram bin count: Sturges' rule, `ceil(log2 n) + 1`.
pub fn sturges_bins(n: usize) -> usize {
    ((n.max(2) as f64).log2().ceil() as usize) + 1
}

fn bin_indices(u: &[f64], bins: usize) -> Result<Vec<usize>> {
    let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::Degenerate(
            "constant series: mutual information is undefined as a delay selector".into(),
        ));
    }
    let width = (hi - lo) / bins as f64;
    Ok(u.iter()
        .map(|v| (((v - lo) / width) as usize).min(bins - 1))
        .collect())
}

/// Histogram mutual information, in bits, between `u_t` and `u_{t+lag}`.
fn lagged_mi(bin_idx: &[usize], bins: usize, lag: usize) -> f64 {
    let n_pairs = bin_idx.len() - lag;
    let mut joint = vec![0u32; bins * bins];
    let mut mx = vec![0u32; bins];
    let mut my = vec![0u32; bins];
    for t in 0..n_pairs {
        let (a, b) = (bin_idx[t], bin_idx[t + lag]);
        joint[a * bins + b] += 1;
        mx[a] += 1;
        my[b] += 1;
    }
    let total = n_pairs as f64;
    let mut mi = 0.0;
    for a in 0..bins {
        if mx[a] == 0 {
            continue;
        }
        for b in 0..bins {
            let c = joint[a * bins + b];
            if c == 0 {
                continue;
            }
            let p_ab = c as f64 / total;
            let p_a = mx[a] as f64 / total;
            let p_b = my[b] as f64 / total;
            mi += p_ab * (p_ab / (p_a * p_b)).log2();
        }
    }
    mi
}

/// Select the embedding delay as the first strict local minimum of the
/// lagged mutual-information curve, falling back to `max_lag` when the
/// curve has none. Returns `(tau, mi_curve)` with `mi_curve[k]` the MI at
/// lag `k` for `k = 0..=max_lag`; `mi_curve[0]` is the marginal entropy
/// estimate.
pub fn select_delay(
    series: &TimeSeries,
    max_lag: usize,
    bins: usize,
) -> Result<(usize, Vec<f64>)> {
    let n = series.len();
    if max_lag < 1 || max_lag >= n / 2 {
        return Err(Error::Parameter {
            name: "max_lag",
            reason: format!("must be in 1..{} for a series of length {n}", n / 2),
        });
    }
    if bins < 2 {
        return Err(Error::Parameter {
            name: "bins",
            reason: "need at least 2 histogram bins".into(),
        });
    }
    let idx = bin_indices(series.values(), bins)?;
    let curve: Vec<f64> = (0..=max_lag).map(|k| lagged_mi(&idx, bins, k)).collect();
    let tau = first_local_min(&curve).unwrap_or(max_lag);
    Ok((tau, curve))
}

/// First index with strictly smaller neighbors on both sides; plateaus are
/// not minima.
fn first_local_min(curve: &[f64]) -> Option<usize> {
    (1..curve.len().saturating_sub(1))
        .find(|&k| curve[k - 1] > curve[k] && curve[k] < curve[k + 1])
}

/// Select the embedding dimension by the false-nearest-neighbor criterion.
///
/// `fnn_fractions[k]` is the false-neighbor fraction at dimension `k + 1`:
/// the share of nearest neighbors (exact search, Euclidean distance) whose
/// separation gained at dimension `k + 2` exceeds the Kennel tolerances.
/// Returns the smallest dimension whose fraction drops below 0.01, or
/// `m_max` if none does, together with the full curve.
pub fn select_dimension(
    series: &TimeSeries,
    tau: usize,
    m_max: usize,
) -> Result<(usize, Vec<f64>)> {
    if m_max < 2 {
        return Err(Error::Parameter {
            name: "m_max",
            reason: "must be at least 2".into(),
        });
    }
    if tau < 1 {
        return Err(Error::Parameter {
            name: "delay",
            reason: "must be at least 1".into(),
        });
    }
    let u = series.values();
    let n = u.len();
    // checking dimension m needs the component u_{i + m*tau}
    if n < m_max * tau + 2 {
        return Err(Error::TooShort {
            context: "false-nearest-neighbor search",
            needed: m_max * tau + 2,
            got: n,
        });
    }
    let sd = standard_deviation(u);
    let floor = FNN_DUPLICATE_FLOOR * sd;

    let mut fractions = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let n_pts = n - m * tau;
        let mut false_count = 0usize;
        let mut total = 0usize;
        for i in 0..n_pts {
            let mut best = f64::INFINITY;
            let mut best_j = usize::MAX;
            for j in 0..n_pts {
                if j == i {
                    continue;
                }
                let mut d2 = 0.0;
                for c in 0..m {
                    let diff = u[i + c * tau] - u[j + c * tau];
                    d2 += diff * diff;
                }
                if d2 < best {
                    let d = d2.sqrt();
                    if d > floor {
                        best = d2;
                        best_j = j;
                    }
                }
            }
            if best_j == usize::MAX {
                continue; // every candidate was a numerical duplicate
            }
            let r = best.sqrt();
            let gained = (u[i + m * tau] - u[best_j + m * tau]).abs();
            total += 1;
            if gained / r > FNN_RATIO_TOL || (r * r + gained * gained).sqrt() / sd > FNN_SIZE_TOL {
                false_count += 1;
            }
        }
        fractions.push(if total == 0 {
            0.0
        } else {
            false_count as f64 / total as f64
        });
    }
    let selected = fractions
        .iter()
        .position(|&f| f < 0.01)
        .map(|k| k + 1)
        .unwrap_or(m_max);
    Ok((selected, fractions))
}

fn standard_deviation(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    (u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
