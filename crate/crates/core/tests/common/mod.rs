//! Naive reference implementations used to cross-check the library.
//!
//! Everything here recomputes results from first principles with plain
//! nested loops and `Vec<Vec<bool>>` matrices, sharing no code with the
//! implementation under test.
#![allow(dead_code)] // each test target uses a different subset

use std::collections::BTreeMap;

use rqa_core::{Norm, PhaseTrajectory, RecurrenceMatrix};

/// Distance under `norm`, written out longhand.
pub fn naive_distance(norm: Norm, a: &[f64], b: &[f64]) -> f64 {
    match norm {
        Norm::Max => {
            let mut best = 0.0f64;
            for k in 0..a.len() {
                let d = (a[k] - b[k]).abs();
                if d > best {
                    best = d;
                }
            }
            best
        }
        Norm::Euclidean => {
            let mut acc = 0.0;
            for k in 0..a.len() {
                acc += (a[k] - b[k]) * (a[k] - b[k]);
            }
            acc.sqrt()
        }
        Norm::Manhattan => {
            let mut acc = 0.0;
            for k in 0..a.len() {
                acc += (a[k] - b[k]).abs();
            }
            acc
        }
    }
}

/// Thresholded matrix computed entry by entry, no symmetry shortcut.
pub fn naive_matrix(traj: &PhaseTrajectory, norm: Norm, epsilon: f64) -> Vec<Vec<bool>> {
    let n = traj.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = naive_distance(norm, traj.point(i), traj.point(j)) <= epsilon;
        }
    }
    out
}

pub fn to_naive(rm: &RecurrenceMatrix) -> Vec<Vec<bool>> {
    let n = rm.n();
    (0..n)
        .map(|i| (0..n).map(|j| rm.get(i, j)).collect())
        .collect()
}

/// Run lengths of `true` along one sequence of cells.
fn run_lengths(cells: impl Iterator<Item = bool>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut run = 0usize;
    for c in cells {
        if c {
            run += 1;
        } else if run > 0 {
            out.push(run);
            run = 0;
        }
    }
    if run > 0 {
        out.push(run);
    }
    out
}

pub struct NaiveHistograms {
    pub diagonal: BTreeMap<usize, usize>,
    pub vertical: BTreeMap<usize, usize>,
}

/// Histograms by explicit enumeration of every diagonal offset and column.
pub fn naive_histograms(m: &[Vec<bool>], theiler: usize) -> NaiveHistograms {
    let n = m.len();
    let mut diagonal = BTreeMap::new();
    let mut vertical = BTreeMap::new();
    for k in -(n as i64 - 1)..=(n as i64 - 1) {
        if k.unsigned_abs() as usize <= theiler {
            continue;
        }
        let cells = (0..n).filter_map(move |i| {
            let j = i as i64 + k;
            (j >= 0 && (j as usize) < n).then_some((i, j as usize))
        });
        for len in run_lengths(cells.map(|(i, j)| m[i][j])) {
            *diagonal.entry(len).or_insert(0) += 1;
        }
    }
    for j in 0..n {
        for len in run_lengths((0..n).map(|i| m[i][j])) {
            *vertical.entry(len).or_insert(0) += 1;
        }
    }
    NaiveHistograms { diagonal, vertical }
}

pub struct NaiveMeasures {
    pub rr: f64,
    pub det: Option<f64>,
    pub lam: Option<f64>,
    pub div: Option<f64>,
    pub lmax: usize,
}

pub fn naive_measures(m: &[Vec<bool>], lmin: usize, vmin: usize, theiler: usize) -> NaiveMeasures {
    let n = m.len();
    let ones: usize = m.iter().flatten().filter(|&&b| b).count();
    let h = naive_histograms(m, theiler);
    let frac = |hist: &BTreeMap<usize, usize>, min_len: usize| -> Option<f64> {
        let total: usize = hist.iter().map(|(l, c)| l * c).sum();
        if total == 0 {
            return None;
        }
        let kept: usize = hist
            .iter()
            .filter(|(l, _)| **l >= min_len)
            .map(|(l, c)| l * c)
            .sum();
        Some(kept as f64 / total as f64)
    };
    let lmax = h.diagonal.keys().max().copied().unwrap_or(0);
    NaiveMeasures {
        rr: ones as f64 / (n * n) as f64,
        det: frac(&h.diagonal, lmin),
        lam: frac(&h.vertical, vmin),
        div: if lmax >= 1 {
            Some(1.0 / lmax as f64)
        } else {
            None
        },
        lmax,
    }
}
