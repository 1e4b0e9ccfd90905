//! `x_t = s J(x, J(x, z))` with `J(f, g) = f_z g_θ - f_θ g_z`.
//!
//! Expanded, the right side is `s (x_θ x_zθ - x_z x_θθ)`, which is also
//! `s (∂_z(x_θ^2) - ∂_θ(x_z x_θ))`. For `s = -1` and `x_z > 0` the dominant term
//! is diffusion in θ, and the solution relaxes toward a θ-independent profile
//! increasing in z.

use serde::Serialize;

use super::{moments, GridFunction};
use crate::bracketflow::Direction;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Centered differences of the expanded form `x_θ x_zθ - x_z x_θθ`.
    #[default]
    Centered,
    /// Flux form `∂_z(x_θ^2) - ∂_θ(x_z x_θ)` with zero z-flux at both walls;
    /// conserves `I_1` to roundoff.
    Conservative,
}

#[derive(Clone, Debug)]
pub struct PdeOptions {
    pub step: f64,
    pub t_end: f64,
    pub direction: Direction,
    pub scheme: Scheme,
    pub sample_every: usize,
    /// Halt once `max|∇x|` exceeds this multiple of its initial value.
    pub shock_factor: f64,
}

impl PdeOptions {
    pub fn new(step: f64, t_end: f64, direction: Direction) -> Self {
        Self {
            step,
            t_end,
            direction,
            scheme: Scheme::default(),
            sample_every: 1,
            shock_factor: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdeSample {
    pub t: f64,
    /// `I_1 .. I_4`.
    pub moments: [f64; 4],
    pub xtheta_norm: f64,
    pub maxgrad: f64,
}

#[derive(Clone, Debug)]
pub struct PdeTrace {
    pub samples: Vec<PdeSample>,
    pub final_state: GridFunction,
    pub steps: usize,
    pub shock: bool,
}

impl PdeTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,I1,I2,I3,I4,xtheta_norm,maxgrad\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s.t,
                s.moments[0],
                s.moments[1],
                s.moments[2],
                s.moments[3],
                s.xtheta_norm,
                s.maxgrad
            ));
        }
        out
    }

    pub fn first(&self) -> &PdeSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &PdeSample {
        self.samples.last().expect("at least the initial sample")
    }
}

struct Grid {
    nz: usize,
    nt: usize,
    dz: f64,
    dt: f64,
}

impl Grid {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nt + j
    }

    fn jp(&self, j: usize) -> usize {
        (j + 1) % self.nt
    }

    fn jm(&self, j: usize) -> usize {
        (j + self.nt - 1) % self.nt
    }

    /// `x_z` at cell centers: centered inside, second-order one-sided at the walls.
    fn xz(&self, x: &[f64]) -> Vec<f64> {
        let (nz, dz) = (self.nz, self.dz);
        let mut out = vec![0.0; x.len()];
        for j in 0..self.nt {
            let v = |i: usize| x[self.idx(i, j)];
            for i in 0..nz {
                out[self.idx(i, j)] = if nz == 1 {
                    0.0
                } else if i == 0 {
                    if nz >= 3 {
                        (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * dz)
                    } else {
                        (v(1) - v(0)) / dz
                    }
                } else if i == nz - 1 {
                    if nz >= 3 {
                        (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / (2.0 * dz)
                    } else {
                        (v(i) - v(i - 1)) / dz
                    }
                } else {
                    (v(i + 1) - v(i - 1)) / (2.0 * dz)
                };
            }
        }
        out
    }

    /// Centered periodic `x_θ`.
    fn xt(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for i in 0..self.nz {
            for j in 0..self.nt {
                out[self.idx(i, j)] =
                    (x[self.idx(i, self.jp(j))] - x[self.idx(i, self.jm(j))]) / (2.0 * self.dt);
            }
        }
        out
    }

    fn rhs(&self, x: &[f64], scheme: Scheme, sign: f64) -> Vec<f64> {
        match scheme {
            Scheme::Centered => self.rhs_centered(x, sign),
            Scheme::Conservative => self.rhs_conservative(x, sign),
        }
    }

    fn rhs_centered(&self, x: &[f64], sign: f64) -> Vec<f64> {
        let xz = self.xz(x);
        let xt = self.xt(x);
        let xzt = self.xt(&xz);
        let mut out = vec![0.0; x.len()];
        let h2 = self.dt * self.dt;
        for i in 0..self.nz {
            for j in 0..self.nt {
                let c = self.idx(i, j);
                let xtt =
                    (x[self.idx(i, self.jp(j))] - 2.0 * x[c] + x[self.idx(i, self.jm(j))]) / h2;
                out[c] = sign * (xt[c] * xzt[c] - xz[c] * xtt);
            }
        }
        out
    }

    fn rhs_conservative(&self, x: &[f64], sign: f64) -> Vec<f64> {
        let xz = self.xz(x);
        let xt = self.xt(x);
        let mut out = vec![0.0; x.len()];
        for i in 0..self.nz {
            for j in 0..self.nt {
                let c = self.idx(i, j);
                // θ-faces j ± 1/2: G = x_z x_θ with a compact difference for x_θ
                let (cp, cm) = (self.idx(i, self.jp(j)), self.idx(i, self.jm(j)));
                let g_plus = 0.5 * (xz[c] + xz[cp]) * (x[cp] - x[c]) / self.dt;
                let g_minus = 0.5 * (xz[cm] + xz[c]) * (x[c] - x[cm]) / self.dt;
                // z-faces i ± 1/2: F = x_θ^2, zero at the walls
                let f_plus = if i + 1 < self.nz {
                    (0.5 * (xt[c] + xt[self.idx(i + 1, j)])).powi(2)
                } else {
                    0.0
                };
                let f_minus = if i > 0 {
                    (0.5 * (xt[self.idx(i - 1, j)] + xt[c])).powi(2)
                } else {
                    0.0
                };
                out[c] = sign * ((f_plus - f_minus) / self.dz - (g_plus - g_minus) / self.dt);
            }
        }
        out
    }

    /// `(||x_θ||_2, max |∇x|)` with one-sided θ differences.
    fn diagnostics(&self, x: &[f64]) -> (f64, f64) {
        let xz = self.xz(x);
        let mut sq = 0.0;
        let mut maxgrad: f64 = 0.0;
        for i in 0..self.nz {
            for j in 0..self.nt {
                let c = self.idx(i, j);
                let t = (x[self.idx(i, self.jp(j))] - x[c]) / self.dt;
                sq += t * t;
                maxgrad = maxgrad.max(t.hypot(xz[c]));
            }
        }
        ((sq / x.len() as f64).sqrt(), maxgrad)
    }
}

/// A step about a fifth of the explicit limit set by θ-diffusion with coefficient
/// `max|x_z|` and by z-transport with speed `max|x_θ|`.
pub fn stable_pde_step(x: &GridFunction) -> f64 {
    let g = grid_of(x);
    let flat = x.flat();
    let kz = g.xz(&flat).iter().fold(1e-12_f64, |m, v| m.max(v.abs()));
    let kt = g.xt(&flat).iter().fold(1e-12_f64, |m, v| m.max(v.abs()));
    0.2 * (g.dt * g.dt / kz).min(g.dz / kt)
}

fn grid_of(x: &GridFunction) -> Grid {
    Grid {
        nz: x.nz(),
        nt: x.ntheta(),
        dz: 1.0 / x.nz() as f64,
        dt: 1.0 / x.ntheta() as f64,
    }
}

pub fn integrate_pde(
    x0: &GridFunction,
    step: f64,
    t_end: f64,
    direction: Direction,
) -> Result<PdeTrace> {
    integrate_pde_with(x0, &PdeOptions::new(step, t_end, direction))
}

/// Three-stage strong-stability-preserving Runge-Kutta in time.
pub fn integrate_pde_with(x0: &GridFunction, opts: &PdeOptions) -> Result<PdeTrace> {
    if x0.nz() < 8 || x0.ntheta() < 8 {
        return Err(Error::InvalidInput(format!(
            "PDE grid must be at least 8x8, got {}x{}",
            x0.nz(),
            x0.ntheta()
        )));
    }
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
    let g = grid_of(x0);
    let sign = opts.direction.sign();
    let every = opts.sample_every.max(1);
    let mut x = x0.flat();
    let record = |x: &[f64], t: f64| -> Result<PdeSample> {
        let gf = GridFunction::from_flat(g.nz, g.nt, x)?;
        let m = moments(&gf, 4);
        let (xtheta_norm, maxgrad) = g.diagnostics(x);
        Ok(PdeSample {
            t,
            moments: [m[0], m[1], m[2], m[3]],
            xtheta_norm,
            maxgrad,
        })
    };
    let mut samples = vec![record(&x, 0.0)?];
    let grad0 = samples[0].maxgrad;
    let mut t = 0.0;
    let mut steps = 0;
    let mut shock = false;
    let mut last_sampled = true;
    let end_slack = 1e-12 * opts.t_end.max(1.0);

    while t < opts.t_end - end_slack {
        let h = opts.step.min(opts.t_end - t);
        let k1 = g.rhs(&x, opts.scheme, sign);
        let x1: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + h * k).collect();
        let k2 = g.rhs(&x1, opts.scheme, sign);
        // increment form, so a vanishing right-hand side leaves x bit-for-bit unchanged
        let x2: Vec<f64> = x
            .iter()
            .zip(k1.iter().zip(&k2))
            .map(|(a, (p, q))| a + 0.25 * h * (p + q))
            .collect();
        let k3 = g.rhs(&x2, opts.scheme, sign);
        let next: Vec<f64> = x
            .iter()
            .zip(k1.iter().zip(&k2).zip(&k3))
            .map(|(a, ((p, q), r))| a + h / 6.0 * (p + q + 4.0 * r))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                last_valid_time: t,
                reason: "non-finite values".into(),
            });
        }
        x = next;
        t += h;
        steps += 1;
        let (_, maxgrad) = g.diagnostics(&x);
        if maxgrad > opts.shock_factor * grad0.max(f64::MIN_POSITIVE) {
            shock = true;
            samples.push(record(&x, t)?);
            last_sampled = true;
            break;
        }
        last_sampled = steps % every == 0;
        if last_sampled {
            samples.push(record(&x, t)?);
        }
    }
    if !last_sampled {
        samples.push(record(&x, t)?);
    }
    Ok(PdeTrace {
        samples,
        final_state: GridFunction::from_flat(g.nz, g.nt, &x)?,
        steps,
        shock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::monge_minimizer;
    use std::f64::consts::PI;

    fn perturbed(n: usize, amp: f64) -> GridFunction {
        GridFunction::from_fn(n, n, |z, t| z + amp * (2.0 * PI * t).sin() * (PI * z).sin()).unwrap()
    }

    #[test]
    fn theta_independent_is_stationary() {
        let x0 = GridFunction::from_fn(8, 8, |z, _| z * z - 0.3 * z).unwrap();
        for scheme in [Scheme::Centered, Scheme::Conservative] {
            for dir in [Direction::Ascend, Direction::Descend] {
                let mut o = PdeOptions::new(1e-3, 0.05, dir);
                o.scheme = scheme;
                let tr = integrate_pde_with(&x0, &o).unwrap();
                assert_eq!(tr.final_state, x0);
            }
        }
    }

    #[test]
    fn rhs_matches_expanded_form() {
        // both discretizations approach x_θ x_zθ - x_z x_θθ for smooth data
        let f = |z: f64, t: f64| z + 0.1 * (2.0 * PI * t).sin() * (PI * z).sin();
        let exact = |z: f64, t: f64| {
            let (s, c) = ((2.0 * PI * t).sin(), (2.0 * PI * t).cos());
            let xt = 0.1 * 2.0 * PI * c * (PI * z).sin();
            let xzt = 0.1 * 2.0 * PI * c * PI * (PI * z).cos();
            let xz = 1.0 + 0.1 * s * PI * (PI * z).cos();
            let xtt = -0.1 * 4.0 * PI * PI * s * (PI * z).sin();
            xt * xzt - xz * xtt
        };
        for scheme in [Scheme::Centered, Scheme::Conservative] {
            let mut errs = Vec::new();
            for n in [32, 64] {
                let x = GridFunction::from_fn(n, n, f).unwrap();
                let g = grid_of(&x);
                let r = g.rhs(&x.flat(), scheme, 1.0);
                let mut e: f64 = 0.0;
                // interior rows only; the walls use one-sided stencils
                for i in 2..n - 2 {
                    for j in 0..n {
                        e = e.max((r[i * n + j] - exact(x.z(i), x.z(j))).abs());
                    }
                }
                errs.push(e);
            }
            assert!(errs[1] < 0.35 * errs[0], "{scheme:?}: {errs:?}");
        }
    }

    #[test]
    fn converging_direction_relaxes_to_sorted_state() {
        let x0 = perturbed(32, 0.05);
        let mut o = PdeOptions::new(stable_pde_step(&x0), 0.3, Direction::Descend);
        o.scheme = Scheme::Conservative;
        o.sample_every = 50;
        let tr = integrate_pde_with(&x0, &o).unwrap();
        assert!(!tr.shock);
        assert!(tr.last().xtheta_norm <= 1e-3 * tr.first().xtheta_norm);
        assert!((tr.last().moments[0] - tr.first().moments[0]).abs() <= 1e-12);
        assert!((tr.last().moments[1] - tr.first().moments[1]).abs() <= 1e-3);
        let target = monge_minimizer(&x0).minimizer;
        assert!(tr.final_state.l1_distance(&target).unwrap() <= 5e-2);
        // <x, z> grows
        let pair = |x: &GridFunction| -crate::annulus::z_pairing_cost(x);
        assert!(pair(&tr.final_state) > pair(&x0));
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn decreasing_data_develops_a_shock() {
        // x_z < 0 turns the θ-term into backward diffusion
        let x0 = GridFunction::from_fn(16, 16, |z, t| {
            -z + 0.05 * (2.0 * PI * t).sin() * (PI * z).sin()
        })
        .unwrap();
        let tr = integrate_pde(&x0, stable_pde_step(&x0), 1.0, Direction::Descend);
        match tr {
            Ok(tr) => assert!(tr.shock),
            Err(Error::Blowup { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn rejects_small_grids() {
        let x0 = GridFunction::from_fn(4, 8, |z, _| z).unwrap();
        assert!(integrate_pde(&x0, 1e-3, 0.1, Direction::Descend).is_err());
    }
}
