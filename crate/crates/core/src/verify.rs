//! Seeded batch harnesses behind the `verify` subcommands.
//!
//! Instance `k` of a batch is generated from `seed + k`, instances run in
//! parallel and are collected in index order, and reports contain no timings, so
//! a rerun with the same arguments serializes to the same bytes.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bracketflow::{
    align_direction, aligned_arrangement, gradient_check, integrate_flow_with, FlowOptions,
};
use crate::error::Result;
use crate::linalg::{jacobi_eigh, SkewHermitianMatrix};
use crate::majorization::majorizes;
use crate::random::{
    random_doubly_stochastic, random_hermitian, random_orbit_point, rng_from_seed,
    separated_values, uniform_matrix, uniform_vec,
};
use crate::schurhorn::{horn_construct, schur_projection};
use crate::transport::{brute_force_monge, verify_triple_equality, CostMatrix};

fn instance_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add(k as u64)
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct MkdInstance {
    pub n: usize,
    pub monge: f64,
    pub gap_monge_kantorovich: f64,
    pub gap_kantorovich_dual: f64,
    /// `None` above the enumeration limit.
    pub brute_force_agrees: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MkdReport {
    pub seed: u64,
    pub instances: usize,
    pub tol: f64,
    pub max_gap_monge_kantorovich: f64,
    pub max_gap_kantorovich_dual: f64,
    pub brute_force_checked: usize,
    pub brute_force_mismatches: usize,
    pub passed: bool,
    pub details: Vec<MkdInstance>,
}

/// Uniform `[0, 1]` square costs; `n` fixed, or drawn from `2..=8` per instance.
pub fn verify_mkd(n: Option<usize>, instances: usize, seed: u64, tol: f64) -> Result<MkdReport> {
    let details = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(instance_seed(seed, k));
            let n = n.unwrap_or_else(|| rng.random_range(2..=8));
            let cost = CostMatrix::new(uniform_matrix(&mut rng, n, n))?;
            let r = verify_triple_equality(&cost)?;
            let brute_force_agrees = if n <= 7 {
                Some((brute_force_monge(&cost)?.value - r.monge).abs() <= tol)
            } else {
                None
            };
            Ok(MkdInstance {
                n,
                monge: r.monge,
                gap_monge_kantorovich: r.gap_monge_kantorovich,
                gap_kantorovich_dual: r.gap_kantorovich_dual,
                brute_force_agrees,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_mk = max_of(details.iter().map(|d| d.gap_monge_kantorovich));
    let max_kd = max_of(details.iter().map(|d| d.gap_kantorovich_dual));
    let checked = details
        .iter()
        .filter(|d| d.brute_force_agrees.is_some())
        .count();
    let mismatches = details
        .iter()
        .filter(|d| d.brute_force_agrees == Some(false))
        .count();
    Ok(MkdReport {
        seed,
        instances,
        tol,
        max_gap_monge_kantorovich: max_mk,
        max_gap_kantorovich_dual: max_kd,
        brute_force_checked: checked,
        brute_force_mismatches: mismatches,
        passed: max_mk <= tol && max_kd <= tol && mismatches == 0,
        details,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SchurHornReport {
    pub seed: u64,
    pub instances: usize,
    pub max_n: usize,
    /// Smallest prefix gap of `spectrum - diag` over the Schur instances.
    pub min_schur_slack: f64,
    pub max_witness_residual: f64,
    pub max_spectrum_error: f64,
    pub max_diagonal_error: f64,
    pub passed: bool,
}

/// Schur direction on random Hermitian matrices and Horn round trips on random
/// `x = P λ`, with `n` drawn from `1..=max_n`.
pub fn verify_schur_horn(instances: usize, max_n: usize, seed: u64) -> Result<SchurHornReport> {
    let rows = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(instance_seed(seed, k));
            let n = rng.random_range(1..=max_n.max(1));
            let a = random_hermitian(&mut rng, n, 1.0);
            let p = schur_projection(&a)?;
            let cert = majorizes(&p.spectrum, &p.diag, 1e-10)?;
            let back = p.witness.apply(&p.spectrum)?;
            let witness = max_of(back.iter().zip(&p.diag).map(|(x, y)| (x - y).abs()));

            let n = rng.random_range(1..=max_n.max(1));
            let lam = uniform_vec(&mut rng, n, -5.0, 5.0);
            let terms = rng.random_range(1..=n + 1);
            let x = random_doubly_stochastic(&mut rng, n, terms).apply(&lam)?;
            let h = horn_construct(&lam, &x)?;
            let eig = jacobi_eigh(&h)?;
            let mut sorted = lam.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let spec = max_of(eig.values.iter().zip(&sorted).map(|(a, b)| (a - b).abs()));
            let diag = max_of(h.diagonal().iter().zip(&x).map(|(a, b)| (a - b).abs()));
            Ok((cert.min_prefix_gap(), witness, spec, diag))
        })
        .collect::<Result<Vec<_>>>()?;
    let slack = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let witness = max_of(rows.iter().map(|r| r.1));
    let spec = max_of(rows.iter().map(|r| r.2));
    let diag = max_of(rows.iter().map(|r| r.3));
    Ok(SchurHornReport {
        seed,
        instances,
        max_n,
        min_schur_slack: slack,
        max_witness_residual: witness,
        max_spectrum_error: spec,
        max_diagonal_error: diag,
        passed: slack >= -1e-10 && spec <= 1e-8 && diag <= 1e-9,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowLimitInstance {
    pub n: usize,
    pub steps: usize,
    pub converged: bool,
    pub spectrum_drift: f64,
    pub rate_error: f64,
    /// `max |L_final - i diag(aligned arrangement)|`.
    pub limit_error: f64,
    pub gradient_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowLimitReport {
    pub seed: u64,
    pub instances: usize,
    pub step: f64,
    pub max_spectrum_drift: f64,
    pub max_rate_error: f64,
    pub aligned_limits: usize,
    pub max_limit_error: f64,
    pub max_gradient_error: f64,
    pub passed: bool,
    pub details: Vec<FlowLimitInstance>,
}

/// Generic instances with `3 <= n <= 6`: spectrum and target have gaps of at least
/// `0.3`, the start is a random point of the orbit, and the sign comes from
/// `align_direction`.
pub fn verify_flow_limit(instances: usize, seed: u64, step: f64) -> Result<FlowLimitReport> {
    let details = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(instance_seed(seed, k));
            let n = rng.random_range(3..=6);
            let lam = separated_values(&mut rng, n, 0.3);
            let nd = separated_values(&mut rng, n, 0.3);
            let l0 = random_orbit_point(&mut rng, &lam);
            let target = SkewHermitianMatrix::from_imaginary_diagonal(&nd);
            let dir = align_direction(&lam, &nd)?;
            let mut opts = FlowOptions::new(step, 1e4, dir);
            opts.rate_probe = Some(1e-4);
            let trace = integrate_flow_with(&l0, &target, &opts)?;
            let expect =
                SkewHermitianMatrix::from_imaginary_diagonal(&aligned_arrangement(&lam, &nd)?);
            let limit_error = trace
                .final_state
                .l
                .as_matrix()
                .try_sub(expect.as_matrix())?
                .max_abs();
            let g = gradient_check(&l0, &target, 20, 1e-300, &mut rng)?;
            Ok(FlowLimitInstance {
                n,
                steps: trace.steps,
                converged: trace.converged,
                spectrum_drift: trace.max_spectrum_drift(),
                rate_error: trace.max_rate_error().unwrap_or(0.0),
                limit_error,
                gradient_error: g.max_relative_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let drift = max_of(details.iter().map(|d| d.spectrum_drift));
    let rate = max_of(details.iter().map(|d| d.rate_error));
    let limit = max_of(details.iter().map(|d| d.limit_error));
    let grad = max_of(details.iter().map(|d| d.gradient_error));
    let aligned = details.iter().filter(|d| d.limit_error <= 1e-6).count();
    Ok(FlowLimitReport {
        seed,
        instances,
        step,
        max_spectrum_drift: drift,
        max_rate_error: rate,
        aligned_limits: aligned,
        max_limit_error: limit,
        max_gradient_error: grad,
        passed: drift <= 1e-10 && rate <= 1e-3 && aligned == instances && grad <= 1e-6,
        details,
    })
}
