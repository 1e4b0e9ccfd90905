//! Double-bracket flow `L' = s [L, [L, N]]` on the adjoint orbit of a
//! skew-Hermitian `L`.
//!
//! Along the flow `d/dt Tr(LN) = s ||[L, N]||_F^2`, so the sign `s` decides
//! whether `Tr(LN)` rises or falls. Steps are conjugations by Cayley transforms,
//! which keep the spectrum fixed up to roundoff.

use serde::Serialize;

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{
    commutator, jacobi_eigh, skew_commutator, trace_pairing, Complex, ComplexMatrix,
    SkewHermitianMatrix, UnitaryMatrix,
};
use crate::random::{random_skew_hermitian, InstanceRng};
use crate::transport::next_permutation;

pub const CONVERGENCE_TOL: f64 = 1e-10;
pub const MAX_STEPS: usize = 1_000_000;
/// Spectral gap below which `gradient_check` flags its result.
pub const GAP_WARNING: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `s = +1`: `Tr(LN)` increases.
    Ascend,
    /// `s = -1`: `Tr(LN)` decreases.
    Descend,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Ascend => 1.0,
            Direction::Descend => -1.0,
        }
    }
}

impl TryFrom<i32> for Direction {
    type Error = Error;

    fn try_from(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Direction::Ascend),
            -1 => Ok(Direction::Descend),
            _ => Err(Error::InvalidInput(format!(
                "direction must be +1 or -1, got {s}"
            ))),
        }
    }
}

/// A point `L = Q Λ Q^dagger` of the orbit, `Λ = i diag(reference_spectrum)`.
#[derive(Clone, Debug)]
pub struct OrbitState {
    pub l: SkewHermitianMatrix,
    pub reference_spectrum: Vec<f64>,
    pub q_accum: UnitaryMatrix,
    pub time: f64,
}

impl OrbitState {
    pub fn new(l: SkewHermitianMatrix) -> Result<Self> {
        let eig = jacobi_eigh(&l.to_hermitian())?;
        Ok(Self {
            l,
            reference_spectrum: eig.values,
            q_accum: eig.vectors,
            time: 0.0,
        })
    }

    /// `max |L - Q Λ Q^dagger|`.
    pub fn reconstruction_residual(&self) -> f64 {
        let q = self.q_accum.as_matrix();
        let n = self.reference_spectrum.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex::ZERO;
                for (k, &lam) in self.reference_spectrum.iter().enumerate() {
                    s += q[(i, k)] * q[(j, k)].conj() * lam;
                }
                worst = worst.max((self.l[(i, j)] - s.mul_i()).abs());
            }
        }
        worst
    }

    /// Largest deviation of the current spectrum of `L / i` from the reference.
    pub fn spectrum_drift(&self) -> Result<f64> {
        let now = self.l.spectrum()?;
        Ok(now
            .iter()
            .zip(&self.reference_spectrum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub trace_ln: f64,
    pub comm_norm: f64,
    pub dist_sq: f64,
    pub spec_drift: f64,
    /// `|fd - s ||[L, N]||^2| / ||[L, N]||^2` from `trace_rate_check`, when a
    /// probe step is configured and `||[L, N]||_F >= 1e-6`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub samples: Vec<FlowSample>,
    pub final_state: OrbitState,
    pub steps: usize,
    pub step_halvings: usize,
    /// `||[L, N]||_F` fell below the convergence threshold.
    pub converged: bool,
}

impl FlowTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,trace_ln,comm_norm,dist_sq,spec_drift\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s.t, s.trace_ln, s.comm_norm, s.dist_sq, s.spec_drift
            ));
        }
        out
    }

    pub fn max_spectrum_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.spec_drift)
            .fold(0.0, f64::max)
    }

    pub fn max_rate_error(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.rate_error)
            .reduce(f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub step: f64,
    pub t_end: f64,
    pub direction: Direction,
    /// Record every `sample_every`-th accepted step (the endpoints are always kept).
    pub sample_every: usize,
    pub tol: f64,
    pub max_steps: usize,
    /// Probe step for `trace_rate_check` at every sample.
    pub rate_probe: Option<f64>,
}

impl FlowOptions {
    pub fn new(step: f64, t_end: f64, direction: Direction) -> Self {
        Self {
            step,
            t_end,
            direction,
            sample_every: 1,
            tol: CONVERGENCE_TOL,
            max_steps: MAX_STEPS,
            rate_probe: None,
        }
    }
}

fn check_pair(l: &SkewHermitianMatrix, n: &SkewHermitianMatrix) -> Result<()> {
    if l.n() != n.n() {
        return Err(dim_mismatch(l.n(), n.n()));
    }
    Ok(())
}

/// `[L, [L, N]]`.
pub fn double_bracket_rhs(
    l: &SkewHermitianMatrix,
    n: &SkewHermitianMatrix,
) -> Result<SkewHermitianMatrix> {
    check_pair(l, n)?;
    skew_commutator(l, &skew_commutator(l, n)?)
}

/// One Cayley step with generator `A = -(s h / 2) [L, N]`, returned as
/// `E = U - I` and `ΔL = U L U^dagger - L`.
///
/// Both are formed without subtracting nearly equal quantities:
/// `E = (I - A)^{-1} 2A` and `ΔL = E L + L E^dagger + E L E^dagger`.
fn cayley_increment(
    l: &ComplexMatrix,
    c: &ComplexMatrix,
    sign: f64,
    h: f64,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = l.rows();
    let a = c.scale_real(-0.5 * sign * h);
    let e = ComplexMatrix::identity(n)
        .try_sub(&a)?
        .solve(&a.scale_real(2.0))
        .map_err(|_| Error::Singular {
            context: "Cayley denominator",
        })?;
    if !e.is_finite() {
        return Err(Error::Singular {
            context: "Cayley denominator",
        });
    }
    let el = e.matmul(l)?;
    let dl = el
        .try_add(&l.matmul(&e.adjoint())?)?
        .try_add(&el.matmul(&e.adjoint())?)?;
    Ok((e, dl))
}

/// Central difference of `Tr(LN)` along the discrete flow at `L`, using steps `+h`
/// and `-h`, together with the predicted rate `s ||[L, N]||_F^2`.
pub fn trace_rate_check(
    l: &SkewHermitianMatrix,
    n: &SkewHermitianMatrix,
    direction: Direction,
    h: f64,
) -> Result<(f64, f64)> {
    check_pair(l, n)?;
    let c = commutator(l.as_matrix(), n.as_matrix())?;
    let s = direction.sign();
    let (_, up) = cayley_increment(l.as_matrix(), &c, s, h)?;
    let (_, down) = cayley_increment(l.as_matrix(), &c, s, -h)?;
    let fd =
        (trace_pairing(&up, n.as_matrix())? - trace_pairing(&down, n.as_matrix())?) / (2.0 * h);
    Ok((fd, s * c.frobenius_norm().powi(2)))
}

fn sample(
    state: &OrbitState,
    n: &SkewHermitianMatrix,
    comm_norm: f64,
    opts: &FlowOptions,
) -> Result<FlowSample> {
    let rate_error = match opts.rate_probe {
        Some(h) if comm_norm >= 1e-6 => {
            let (fd, pred) = trace_rate_check(&state.l, n, opts.direction, h)?;
            Some((fd - pred).abs() / pred.abs())
        }
        _ => None,
    };
    Ok(FlowSample {
        t: state.time,
        trace_ln: trace_pairing(state.l.as_matrix(), n.as_matrix())?,
        comm_norm,
        dist_sq: monge_distance_objective(&state.l, n)?,
        spec_drift: state.spectrum_drift()?,
        rate_error,
    })
}

pub fn integrate_flow(
    l0: &SkewHermitianMatrix,
    n: &SkewHermitianMatrix,
    step: f64,
    t_end: f64,
    direction: Direction,
) -> Result<FlowTrace> {
    integrate_flow_with(l0, n, &FlowOptions::new(step, t_end, direction))
}

/// Integrates `L' = s [L, [L, N]]` by `L <- U L U^dagger` with
/// `U = Cayley(-(s h / 2) [L, N])`.
///
/// A step whose `Tr(LN)` increment has the wrong sign is rejected and retried
/// with half the step; after ten accepted steps the step is allowed to double
/// again, up to the requested size.
pub fn integrate_flow_with(
    l0: &SkewHermitianMatrix,
    n: &SkewHermitianMatrix,
    opts: &FlowOptions,
) -> Result<FlowTrace> {
    check_pair(l0, n)?;
    if !(opts.step > 0.0) || !opts.step.is_finite() {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {}",
            opts.step
        )));
    }
    if !(opts.t_end >= 0.0) || !opts.t_end.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t_end must be >= 0, got {}",
            opts.t_end
        )));
    }
    let every = opts.sample_every.max(1);
    let s = opts.direction.sign();
    let mut state = OrbitState::new(l0.clone())?;
    let mut c = commutator(state.l.as_matrix(), n.as_matrix())?;
    let mut comm_norm = c.frobenius_norm();
    let mut samples = vec![sample(&state, n, comm_norm, opts)?];
    let mut h = opts.step;
    let min_step = opts.step * 1e-12;
    let (mut steps, mut halvings, mut streak) = (0, 0, 0);
    let mut last_sampled = true;
    let end_slack = 1e-14 * opts.t_end.max(1.0);

    let converged = loop {
        if comm_norm <= opts.tol {
            break true;
        }
        if state.time >= opts.t_end - end_slack || steps >= opts.max_steps {
            break false;
        }
        let hh = h.min(opts.t_end - state.time);
        let (e, dl) = cayley_increment(state.l.as_matrix(), &c, s, hh)?;
        let dt = trace_pairing(&dl, n.as_matrix())?;
        if s * dt < 0.0 {
            h *= 0.5;
            halvings += 1;
            streak = 0;
            if h < min_step {
                return Err(Error::Degenerate(format!(
                    "step fell below {min_step:.3e} at t = {}",
                    state.time
                )));
            }
            continue;
        }
        let l_next = state.l.as_matrix().try_add(&dl)?;
        state.l = SkewHermitianMatrix::skew_symmetrized(&l_next)?;
        let u = ComplexMatrix::identity(e.rows()).try_add(&e)?;
        state.q_accum = UnitaryMatrix::from_trusted(u.matmul(state.q_accum.as_matrix())?);
        state.time += hh;
        steps += 1;
        streak += 1;
        if streak >= 10 && h < opts.step {
            h = (2.0 * h).min(opts.step);
            streak = 0;
        }
        c = commutator(state.l.as_matrix(), n.as_matrix())?;
        comm_norm = c.frobenius_norm();
        last_sampled = steps % every == 0;
        if last_sampled {
            samples.push(sample(&state, n, comm_norm, opts)?);
        }
    };
    if !last_sampled {
        samples.push(sample(&state, n, comm_norm, opts)?);
    }
    Ok(FlowTrace {
        samples,
        final_state: state,
        steps,
        step_halvings: halvings,
        converged,
    })
}

fn require_distinct(v: &[f64], what: &str) -> Result<()> {
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Degenerate(format!("{what} has repeated entries")));
    }
    Ok(())
}

fn check_orbit_data(lambda: &[f64], n_diag: &[f64]) -> Result<()> {
    if lambda.len() != n_diag.len() {
        return Err(dim_mismatch(lambda.len(), n_diag.len()));
    }
    if lambda.is_empty() {
        return Err(Error::InvalidInput("empty spectrum".into()));
    }
    require_distinct(lambda, "spectrum")?;
    require_distinct(n_diag, "target diagonal")
}

/// Sign that drives a generic start to the arrangement of `lambda` ordered like
/// `n_diag`.
///
/// On diagonals `Tr(LN) = -sum lambda_i n_i`, and the similarly ordered pairing
/// maximizes `sum lambda_i n_i`, so `Tr(LN)` must decrease.
pub fn align_direction(lambda: &[f64], n_diag: &[f64]) -> Result<Direction> {
    check_orbit_data(lambda, n_diag)?;
    Ok(Direction::Descend)
}

/// The arrangement of `lambda` with the same ordering as `n_diag`.
pub fn aligned_arrangement(lambda: &[f64], n_diag: &[f64]) -> Result<Vec<f64>> {
    if lambda.len() != n_diag.len() {
        return Err(dim_mismatch(lambda.len(), n_diag.len()));
    }
    let mut lam = lambda.to_vec();
    lam.sort_by(f64::total_cmp);
    let mut idx: Vec<usize> = (0..n_diag.len()).collect();
    idx.sort_by(|&a, &b| n_diag[a].total_cmp(&n_diag[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; lam.len()];
    for (rank, &i) in idx.iter().enumerate() {
        out[i] = lam[rank];
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub directions: usize,
    pub min_gap: f64,
    /// Spectral gap below `GAP_WARNING`; the projection is then poorly conditioned.
    pub ill_conditioned: bool,
}

/// Compares `dH [L, δ] = Tr([L, δ] N)` with the normal-metric pairing
/// `-Tr(X^L δ^L)` of the gradient `[L, [L, N]] = [L, X]` against `[L, δ]`.
///
/// In the eigenbasis of `L`, `ad_L` multiplies entry `(i, j)` by
/// `i (λ_i - λ_j)`. `X^L` is the least-squares solution of
/// `[L, X] = [L, [L, N]]` orthogonal to the centralizer, and `δ^L` drops the
/// entries with `λ_i = λ_j`. Relative errors use `max(|lhs|, |rhs|, eps)` as the
/// denominator.
pub fn gradient_check(
    l: &SkewHermitianMatrix,
    n: &SkewHermitianMatrix,
    num_directions: usize,
    eps: f64,
    rng: &mut InstanceRng,
) -> Result<GradientCheck> {
    check_pair(l, n)?;
    let dim = l.n();
    let eig = jacobi_eigh(&l.to_hermitian())?;
    let lam = &eig.values;
    let q = eig.vectors.as_matrix();
    let qh = q.adjoint();
    let scale = lam.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let degenerate = 1e-12 * scale;
    let min_gap = lam
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);

    let to_eigenbasis = |m: &ComplexMatrix| qh.matmul(m)?.matmul(q);
    let grad = to_eigenbasis(double_bracket_rhs(l, n)?.as_matrix())?;
    let x = ComplexMatrix::from_fn(dim, dim, |i, j| {
        let gap = lam[i] - lam[j];
        if gap.abs() <= degenerate {
            Complex::ZERO
        } else {
            grad[(i, j)] / Complex::new(0.0, gap)
        }
    });

    let mut worst: f64 = 0.0;
    for _ in 0..num_directions {
        let delta = random_skew_hermitian(rng, dim);
        let tangent = commutator(l.as_matrix(), delta.as_matrix())?;
        let lhs = trace_pairing(&tangent, n.as_matrix())?;
        let d = to_eigenbasis(delta.as_matrix())?;
        let d_proj = ComplexMatrix::from_fn(dim, dim, |i, j| {
            if (lam[i] - lam[j]).abs() <= degenerate {
                Complex::ZERO
            } else {
                d[(i, j)]
            }
        });
        let rhs = -trace_pairing(&x, &d_proj)?;
        let denom = lhs.abs().max(rhs.abs()).max(eps);
        worst = worst.max((lhs - rhs).abs() / denom);
    }
    Ok(GradientCheck {
        max_relative_error: worst,
        directions: num_directions,
        min_gap: if dim < 2 { f64::INFINITY } else { min_gap },
        ill_conditioned: dim >= 2 && min_gap < GAP_WARNING,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Equilibrium {
    /// Position `i` of the diagonal holds `lambda[permutation[i]]`.
    pub permutation: Vec<usize>,
    pub trace_ln: f64,
    pub stable: bool,
}

/// All `n!` diagonal equilibria `i diag(lambda_σ)` in lexicographic order of `σ`.
/// The stable one is the arrangement ordered like `n_diag`.
pub fn classify_equilibria(lambda: &[f64], n_diag: &[f64]) -> Result<Vec<Equilibrium>> {
    if lambda.len() > 8 {
        return Err(Error::SizeLimit(format!(
            "equilibrium enumeration limited to n <= 8, got {}",
            lambda.len()
        )));
    }
    check_orbit_data(lambda, n_diag)?;
    let target = aligned_arrangement(lambda, n_diag)?;
    let mut perm: Vec<usize> = (0..lambda.len()).collect();
    let mut out = Vec::new();
    loop {
        let trace_ln = -perm
            .iter()
            .zip(n_diag)
            .map(|(&p, nv)| lambda[p] * nv)
            .sum::<f64>();
        let stable = perm.iter().zip(&target).all(|(&p, t)| lambda[p] == *t);
        out.push(Equilibrium {
            permutation: perm.clone(),
            trace_ln,
            stable,
        });
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(out)
}

/// `||L - N||_F^2`.
pub fn monge_distance_objective(l: &SkewHermitianMatrix, n: &SkewHermitianMatrix) -> Result<f64> {
    check_pair(l, n)?;
    Ok(l.as_matrix()
        .as_slice()
        .iter()
        .zip(n.as_matrix().as_slice())
        .map(|(a, b)| (*a - *b).norm_sqr())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_orbit_point, rng_from_seed, separated_values};
    use crate::schurhorn::{permutohedron_contains, schur_projection};

    fn diag_i(v: &[f64]) -> SkewHermitianMatrix {
        SkewHermitianMatrix::from_imaginary_diagonal(v)
    }

    fn imag_diag(l: &SkewHermitianMatrix) -> Vec<f64> {
        l.as_matrix().diag().iter().map(|z| z.im).collect()
    }

    #[test]
    fn rhs_vanishes_on_commuting_pair() {
        let r = double_bracket_rhs(&diag_i(&[1.0, 2.0]), &diag_i(&[3.0, -1.0])).unwrap();
        assert_eq!(r.as_matrix().max_abs(), 0.0);
    }

    #[test]
    fn rhs_two_by_two_by_hand() {
        // L = i [[0,1],[1,0]], N = i diag(1,2):
        // [L,N] = [[0,-1],[1,0]], [L,[L,N]] = i [[2,0],[0,-2]]
        let l = SkewHermitianMatrix::new(ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                Complex::ZERO
            } else {
                Complex::I
            }
        }))
        .unwrap();
        let r = double_bracket_rhs(&l, &diag_i(&[1.0, 2.0])).unwrap();
        let m = r.as_matrix();
        assert_eq!(m[(0, 0)], Complex::new(0.0, 2.0));
        assert_eq!(m[(1, 1)], Complex::new(0.0, -2.0));
        assert_eq!(m[(0, 1)], Complex::ZERO);
        assert_eq!(m[(1, 0)], Complex::ZERO);
    }

    #[test]
    fn rhs_is_skew_and_stationarity_matches_commutation() {
        let mut rng = rng_from_seed(3);
        for n in 2..7 {
            let l = random_skew_hermitian(&mut rng, n);
            let m = random_skew_hermitian(&mut rng, n);
            let raw = commutator(
                l.as_matrix(),
                &commutator(l.as_matrix(), m.as_matrix()).unwrap(),
            )
            .unwrap();
            assert!(raw.skew_hermitian_residual() <= 1e-12);
            assert!(
                double_bracket_rhs(&l, &m)
                    .unwrap()
                    .as_matrix()
                    .frobenius_norm()
                    > 1e-6
            );
        }
        assert!(double_bracket_rhs(&diag_i(&[1.0]), &diag_i(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn commuting_start_is_stationary() {
        let tr = integrate_flow(
            &diag_i(&[3.0, 1.0, 2.0]),
            &diag_i(&[1.0, 2.0, 3.0]),
            0.1,
            5.0,
            Direction::Descend,
        )
        .unwrap();
        assert_eq!(tr.steps, 0);
        assert!(tr.converged);
        assert_eq!(tr.samples.len(), 1);
    }

    #[test]
    fn limit_is_similarly_ordered() {
        let lam = [3.0, 1.0, 2.0];
        let nd = [1.0, 2.0, 3.0];
        let n = diag_i(&nd);
        let dir = align_direction(&lam, &nd).unwrap();
        let mut rng = rng_from_seed(11);
        for _ in 0..5 {
            let l0 = random_orbit_point(&mut rng, &lam);
            let tr = integrate_flow(&l0, &n, 0.05, 200.0, dir).unwrap();
            assert!(tr.converged);
            let fin = &tr.final_state.l;
            let d = imag_diag(fin);
            for (a, b) in d.iter().zip(&[1.0, 2.0, 3.0]) {
                assert!((a - b).abs() <= 1e-6, "{d:?}");
            }
            assert!(fin.as_matrix().off_diagonal_norm_sqr().sqrt() <= 1e-6);
            assert!(tr.max_spectrum_drift() <= 1e-10);
            assert!(tr.final_state.reconstruction_residual() <= 1e-9);
            let w = tr
                .samples
                .windows(2)
                .all(|w| w[1].trace_ln <= w[0].trace_ln + 1e-13 && w[1].t > w[0].t);
            assert!(w);
            // the limit diagonal is a point of the permutohedron of the spectrum
            let proj = schur_projection(&fin.to_hermitian()).unwrap();
            assert!(permutohedron_contains(&proj.diag, &lam, 1e-9).unwrap());
        }
    }

    #[test]
    fn opposite_sign_and_reversed_target() {
        let lam = [3.0, 1.0, 2.0];
        let mut rng = rng_from_seed(12);
        let l0 = random_orbit_point(&mut rng, &lam);
        // ascending drives Tr(LN) up: the oppositely ordered arrangement
        let tr = integrate_flow(
            &l0,
            &diag_i(&[1.0, 2.0, 3.0]),
            0.05,
            200.0,
            Direction::Ascend,
        )
        .unwrap();
        let d = imag_diag(&tr.final_state.l);
        assert!(
            (d[0] - 3.0).abs() < 1e-6 && (d[2] - 1.0).abs() < 1e-6,
            "{d:?}"
        );
        let tr = integrate_flow(
            &l0,
            &diag_i(&[3.0, 2.0, 1.0]),
            0.05,
            200.0,
            Direction::Descend,
        )
        .unwrap();
        let d = imag_diag(&tr.final_state.l);
        assert!(
            (d[0] - 3.0).abs() < 1e-6 && (d[2] - 1.0).abs() < 1e-6,
            "{d:?}"
        );
    }

    #[test]
    fn aligned_start_stationary_for_both_signs() {
        for dir in [Direction::Ascend, Direction::Descend] {
            let tr =
                integrate_flow(&diag_i(&[1.0, 2.0]), &diag_i(&[1.0, 2.0]), 0.1, 1.0, dir).unwrap();
            assert_eq!(tr.steps, 0);
        }
    }

    #[test]
    fn rate_matches_squared_commutator() {
        let mut rng = rng_from_seed(21);
        for n in 2..7 {
            let lam = separated_values(&mut rng, n, 0.3);
            let nd = separated_values(&mut rng, n, 0.3);
            let l = random_orbit_point(&mut rng, &lam);
            for dir in [Direction::Ascend, Direction::Descend] {
                let (fd, pred) = trace_rate_check(&l, &diag_i(&nd), dir, 1e-4).unwrap();
                assert!((fd - pred).abs() <= 1e-3 * pred.abs(), "{fd} vs {pred}");
                assert_eq!(fd.signum(), dir.sign());
            }
        }
    }

    #[test]
    fn rate_check_near_equilibrium() {
        let mut rng = rng_from_seed(22);
        let lam = [0.5, -1.0, 2.0, 1.2];
        let nd = [1.0, -0.5, 0.25, 2.0];
        let l0 = random_orbit_point(&mut rng, &lam);
        let mut opts = FlowOptions::new(0.05, 400.0, Direction::Descend);
        opts.tol = 1e-6;
        let tr = integrate_flow_with(&l0, &diag_i(&nd), &opts).unwrap();
        let (fd, pred) =
            trace_rate_check(&tr.final_state.l, &diag_i(&nd), Direction::Descend, 1e-4).unwrap();
        assert!(pred.abs() < 1e-11);
        assert!((fd - pred).abs() <= 1e-3 * pred.abs());
    }

    #[test]
    fn gradient_identity() {
        let mut rng = rng_from_seed(5);
        let l = random_orbit_point(&mut rng, &[1.0, 2.5]);
        let g = gradient_check(&l, &diag_i(&[0.3, -1.0]), 10, 1e-300, &mut rng).unwrap();
        assert!(g.max_relative_error <= 1e-10);
        assert!(!g.ill_conditioned);

        let lam = separated_values(&mut rng, 5, 0.2);
        let l = random_orbit_point(&mut rng, &lam);
        let n = random_skew_hermitian(&mut rng, 5);
        let g = gradient_check(&l, &n, 20, 1e-300, &mut rng).unwrap();
        assert!(g.max_relative_error <= 1e-6, "{}", g.max_relative_error);
    }

    #[test]
    fn gradient_check_flags_degenerate_spectrum() {
        let mut rng = rng_from_seed(6);
        let l = random_orbit_point(&mut rng, &[1.0, 1.0, -2.0]);
        let g = gradient_check(&l, &diag_i(&[1.0, 2.0, 3.0]), 10, 1e-12, &mut rng).unwrap();
        assert!(g.ill_conditioned);
        assert!(g.max_relative_error <= 1e-6);
    }

    #[test]
    fn centralizer_direction_has_zero_pairing() {
        // δ = L commutes with L, so [L, δ] = 0
        let l = diag_i(&[1.0, 2.0, 4.0]);
        let tangent = commutator(l.as_matrix(), l.as_matrix()).unwrap();
        assert_eq!(
            trace_pairing(&tangent, diag_i(&[5.0, 1.0, 0.0]).as_matrix()).unwrap(),
            0.0
        );
    }

    #[test]
    fn align_direction_rejects_repeats() {
        assert_eq!(
            align_direction(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            Direction::Descend
        );
        assert!(matches!(
            align_direction(&[1.0, 1.0], &[3.0, 4.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            align_direction(&[1.0, 2.0], &[3.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn equilibria_enumeration() {
        let one = classify_equilibria(&[5.0], &[2.0]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].stable);

        let two = classify_equilibria(&[2.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(two.len(), 2);
        let stable: Vec<_> = two.iter().filter(|e| e.stable).collect();
        assert_eq!(stable.len(), 1);
        assert_eq!(stable[0].permutation, vec![1, 0]);
        assert_eq!(stable[0].trace_ln, -5.0);

        let mut rng = rng_from_seed(8);
        let lam = separated_values(&mut rng, 3, 0.3);
        let nd = separated_values(&mut rng, 3, 0.3);
        let eq = classify_equilibria(&lam, &nd).unwrap();
        assert_eq!(eq.len(), 6);
        let best = eq
            .iter()
            .min_by(|a, b| a.trace_ln.total_cmp(&b.trace_ln))
            .unwrap();
        assert!(best.stable);
        assert_eq!(eq.iter().filter(|e| e.stable).count(), 1);
        // the integrated limit lands on the stable equilibrium
        let l0 = random_orbit_point(&mut rng, &lam);
        let tr = integrate_flow(&l0, &diag_i(&nd), 0.05, 500.0, Direction::Descend).unwrap();
        let d = imag_diag(&tr.final_state.l);
        for (i, &p) in best.permutation.iter().enumerate() {
            assert!((d[i] - lam[p]).abs() <= 1e-6);
        }

        assert!(matches!(
            classify_equilibria(&[0.0; 9], &[0.0; 9]),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn distance_objective_identity() {
        assert_eq!(
            monge_distance_objective(&diag_i(&[1.0, 2.0]), &diag_i(&[1.0, 2.0])).unwrap(),
            0.0
        );
        assert_eq!(
            monge_distance_objective(&diag_i(&[1.0, 2.0]), &diag_i(&[2.0, 1.0])).unwrap(),
            2.0
        );
        let mut rng = rng_from_seed(31);
        for n in 1..8 {
            let l = random_skew_hermitian(&mut rng, n);
            let m = random_skew_hermitian(&mut rng, n);
            let lhs = monge_distance_objective(&l, &m).unwrap();
            let rhs = l.as_matrix().frobenius_norm().powi(2)
                + m.as_matrix().frobenius_norm().powi(2)
                + 2.0 * trace_pairing(l.as_matrix(), m.as_matrix()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1.0));
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut rng = rng_from_seed(1);
        let l0 = random_orbit_point(&mut rng, &[1.0, -1.0]);
        let tr = integrate_flow(&l0, &diag_i(&[0.0, 1.0]), 0.1, 0.5, Direction::Descend).unwrap();
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,trace_ln,comm_norm,dist_sq,spec_drift\n"));
        assert_eq!(csv.lines().count(), tr.samples.len() + 1);
        assert!((tr.samples.last().unwrap().t - 0.5).abs() < 1e-12);
    }
}
