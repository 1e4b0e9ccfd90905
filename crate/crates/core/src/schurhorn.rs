//! Schur and Horn directions of the diagonal/spectrum correspondence.
//!
//! Schur: the diagonal of a Hermitian `A = Q diag(λ) Q^†` is `P λ` with
//! `P_ij = |Q_ij|^2` doubly stochastic, hence majorized by `λ`. Horn: any `x ≺ λ`
//! is the diagonal of some Hermitian matrix with spectrum `λ`; we build one from
//! plane rotations that follow the T-transform chain.

use serde::Serialize;

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{jacobi_eigh, Complex, ComplexMatrix, HermitianMatrix};
use crate::majorization::{decreasing_order, majorizes, DoublyStochasticMatrix};

#[derive(Clone, Debug, Serialize)]
pub struct SchurProjection {
    pub diag: Vec<f64>,
    /// Nonincreasing.
    pub spectrum: Vec<f64>,
    /// `P_ij = |Q_ij|^2`, so that `diag = P spectrum`.
    pub witness: DoublyStochasticMatrix,
}

pub fn schur_projection(a: &HermitianMatrix) -> Result<SchurProjection> {
    let eig = jacobi_eigh(a)?;
    let witness = DoublyStochasticMatrix::new(eig.vectors.squared_moduli())?;
    Ok(SchurProjection {
        diag: a.diagonal(),
        spectrum: eig.values,
        witness,
    })
}

/// Real symmetric matrix with eigenvalues `spectrum` and diagonal `target_diag`.
///
/// Works on the nonincreasing arrangements. Starting from `diag(λ*)`, every step
/// of the T-transform chain moves mass between two diagonal positions `j < k`;
/// we realize it by a rotation in the `(j, k)` plane chosen so that the new
/// `(j, j)` entry hits its value. That value lies between the two current
/// diagonal entries, hence between the eigenvalues of the 2x2 block, so the
/// rotation exists. The result is then permuted back to the caller's order.
pub fn horn_construct(spectrum: &[f64], target_diag: &[f64]) -> Result<HermitianMatrix> {
    if spectrum.len() != target_diag.len() {
        return Err(dim_mismatch(spectrum.len(), target_diag.len()));
    }
    let cert = majorizes(spectrum, target_diag, 1e-10)?;
    if let Some(k) = cert.first_violation {
        return Err(Error::MajorizationFailure {
            index: k,
            gap: cert.gaps[k - 1],
        });
    }
    let n = spectrum.len();
    let lam: Vec<f64> = decreasing_order(spectrum)
        .iter()
        .map(|&i| spectrum[i])
        .collect();
    let order = decreasing_order(target_diag);
    let target: Vec<f64> = order.iter().map(|&i| target_diag[i]).collect();

    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = lam[i];
    }
    let scale = lam
        .iter()
        .chain(&target)
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    let eps = 4.0 * f64::EPSILON * scale * n as f64;

    for _ in 0..n {
        let d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        let Some(j) = (0..n).rev().find(|&i| d[i] - target[i] > eps) else {
            break;
        };
        let Some(k) = (j + 1..n).find(|&i| target[i] - d[i] > eps) else {
            break;
        };
        let delta = (d[j] - target[j]).min(target[k] - d[k]);
        rotate_to_diagonal(&mut a, j, k, d[j] - delta);
    }

    // undo the sort: position order[r] receives sorted row r
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        let (r, c) = (rank_of(&order, i), rank_of(&order, j));
        Complex::real(a[r][c])
    });
    HermitianMatrix::new(m)
}

fn rank_of(order: &[usize], i: usize) -> usize {
    order.iter().position(|&o| o == i).expect("permutation")
}

/// `A <- R^T A R` in the `(p, q)` plane with `R = [[c, s], [-s, c]]` so that the
/// new `A_pp` equals `value`.
fn rotate_to_diagonal(a: &mut [Vec<f64>], p: usize, q: usize, value: f64) {
    let (app, aqq, apq) = (a[p][p], a[q][q], a[p][q]);
    // A'_pp = m + h cos 2θ - apq sin 2θ = m + r cos(2θ + φ)
    let m = 0.5 * (app + aqq);
    let h = 0.5 * (app - aqq);
    let r = h.hypot(apq);
    if r == 0.0 {
        return;
    }
    let phi = apq.atan2(h);
    let two_theta = ((value - m) / r).clamp(-1.0, 1.0).acos() - phi;
    let (s, c) = (0.5 * two_theta).sin_cos();
    let n = a.len();
    for k in 0..n {
        let (akp, akq) = (a[k][p], a[k][q]);
        a[k][p] = c * akp - s * akq;
        a[k][q] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[p][k], a[q][k]);
        a[p][k] = c * apk - s * aqk;
        a[q][k] = s * apk + c * aqk;
    }
    for k in 0..n {
        let v = 0.5 * (a[p][k] + a[k][p]);
        a[p][k] = v;
        a[k][p] = v;
        let v = 0.5 * (a[q][k] + a[k][q]);
        a[q][k] = v;
        a[k][q] = v;
    }
    a[p][p] = value;
    a[q][q] = app + aqq - value;
}

/// Membership of `point` in the convex hull of the permutations of `y`.
pub fn permutohedron_contains(point: &[f64], y: &[f64], tol: f64) -> Result<bool> {
    Ok(majorizes(y, point, tol)?.holds)
}
