//! Majorization on vectors and on step functions of `[0, 1]`.
//!
//! `y` majorizes `x` (`x ≺ y`) when the prefix sums of the nonincreasing
//! rearrangement of `x` never exceed those of `y` and the totals agree. The
//! constructive side is the T-transform chain realizing `x = P y` and the
//! Birkhoff decomposition of a doubly stochastic `P` into permutations.

mod doubly_stochastic;
mod step;

pub use doubly_stochastic::{
    birkhoff_decompose, is_doubly_stochastic, BirkhoffTerm, DoublyStochasticMatrix, PermutationMap,
};
pub use step::{majorizes_step, rearrangement_step, StepFunction, StepMajorization};

use serde::Serialize;

use crate::error::{dim_mismatch, Error, Result};

/// Default tolerance wherever a caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Components in nonincreasing order.
pub fn decreasing_rearrangement(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Indices that sort `x` nonincreasingly, ties by index.
pub(crate) fn decreasing_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    idx
}

/// Outcome of a majorization test with its partial-sum gaps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Majorization {
    pub holds: bool,
    /// `gaps[k-1] = (y*_1 + ... + y*_k) - (x*_1 + ... + x*_k)`; the last entry is the total gap.
    pub gaps: Vec<f64>,
    /// First prefix length `k` (1-based) at which the test fails.
    pub first_violation: Option<usize>,
}

impl Majorization {
    /// Smallest prefix gap over `k < n` (0 when `n = 1`).
    pub fn min_prefix_gap(&self) -> f64 {
        let n = self.gaps.len();
        if n < 2 {
            return 0.0;
        }
        self.gaps[..n - 1]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_gap(&self) -> f64 {
        self.gaps.last().copied().unwrap_or(0.0)
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidInput(format!("{what} must be non-empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} has non-finite entries"
        )));
    }
    Ok(())
}

/// Tests `x ≺ y`.
pub fn majorizes(y: &[f64], x: &[f64], tol: f64) -> Result<Majorization> {
    if x.len() != y.len() {
        return Err(dim_mismatch(y.len(), x.len()));
    }
    check_finite(y, "y")?;
    check_finite(x, "x")?;
    let xs = decreasing_rearrangement(x);
    let ys = decreasing_rearrangement(y);
    let n = xs.len();
    let mut gaps = Vec::with_capacity(n);
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut first_violation = None;
    for k in 0..n {
        sx += xs[k];
        sy += ys[k];
        let gap = sy - sx;
        gaps.push(gap);
        let bad = if k + 1 < n {
            gap < -tol
        } else {
            gap.abs() > tol
        };
        if bad && first_violation.is_none() {
            first_violation = Some(k + 1);
        }
    }
    Ok(Majorization {
        holds: first_violation.is_none(),
        gaps,
        first_violation,
    })
}

/// One elementary step `t I + (1 - t) Q`, `Q` swapping positions `first` and
/// `second` of the nonincreasing arrangement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TTransform {
    pub first: usize,
    pub second: usize,
    pub t: f64,
}

#[derive(Clone, Debug)]
pub struct TransformChain {
    /// `x = P y` in the caller's coordinates.
    pub matrix: DoublyStochasticMatrix,
    /// Steps in application order, indexed in sorted coordinates.
    pub transforms: Vec<TTransform>,
}

/// Builds a doubly stochastic `P` with `x = P y` from at most `n - 1` T-transforms.
///
/// Works on the nonincreasing arrangements: take the last position `j` where the
/// working vector still exceeds `x*` and the first later position `k` where it
/// falls short, then move `min(w_j - x*_j, x*_k - w_k)` from `j` to `k`. Each
/// step pins at least one coordinate to its target.
pub fn t_transform_chain(x: &[f64], y: &[f64]) -> Result<TransformChain> {
    let cert = majorizes(y, x, 1e-10)?;
    if let Some(k) = cert.first_violation {
        return Err(Error::MajorizationFailure {
            index: k,
            gap: cert.gaps[k - 1],
        });
    }
    let n = x.len();
    let px = decreasing_order(x);
    let py = decreasing_order(y);
    let target: Vec<f64> = px.iter().map(|&i| x[i]).collect();
    let mut w: Vec<f64> = py.iter().map(|&i| y[i]).collect();

    let scale = w.iter().chain(&target).fold(1.0_f64, |m, v| m.max(v.abs()));
    let eps = 4.0 * f64::EPSILON * scale * n as f64;

    let mut sorted = identity_rows(n);
    let mut transforms = Vec::new();
    for _ in 0..n {
        let Some(j) = (0..n).rev().find(|&i| w[i] - target[i] > eps) else {
            break;
        };
        let Some(k) = (j + 1..n).find(|&i| target[i] - w[i] > eps) else {
            break;
        };
        let up = w[j] - target[j];
        let down = target[k] - w[k];
        let delta = up.min(down);
        let t = 1.0 - delta / (w[j] - w[k]);
        if up <= down {
            w[k] += delta;
            w[j] = target[j];
        } else {
            w[j] -= delta;
            w[k] = target[k];
        }
        if (up - down).abs() <= eps {
            w[j] = target[j];
            w[k] = target[k];
        }
        // P <- T P
        for c in 0..n {
            let (a, b) = (sorted[j][c], sorted[k][c]);
            sorted[j][c] = t * a + (1.0 - t) * b;
            sorted[k][c] = t * b + (1.0 - t) * a;
        }
        transforms.push(TTransform {
            first: j,
            second: k,
            t,
        });
    }

    let mut p = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            p[px[a]][py[b]] = sorted[a][b];
        }
    }
    Ok(TransformChain {
        matrix: DoublyStochasticMatrix::new(p)?,
        transforms,
    })
}

fn identity_rows(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}
