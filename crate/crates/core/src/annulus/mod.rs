//! Functions on the annulus `[0, 1]_z x (R/Z)_θ`, discretized on a cell-centered
//! `nz x ntheta` grid with cells of equal measure.
//!
//! A grid function's value multiset plays the role of its spectrum, its θ-average
//! the role of a diagonal, and cell permutations the role of measure preserving
//! maps.

mod advect;
mod pde;

pub use advect::advect_density;
pub use pde::{
    integrate_pde, integrate_pde_with, stable_pde_step, PdeOptions, PdeSample, PdeTrace, Scheme,
};

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::majorization::{majorizes_step, StepFunction, StepMajorization};
use crate::random::InstanceRng;
use crate::transport::{solve_kantorovich, CostMatrix, MarginalVector, BALANCE_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFunction {
    nz: usize,
    ntheta: usize,
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct GridJson {
    nz: usize,
    ntheta: usize,
    values: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = GridJson::deserialize(d)?;
        Self::new(raw.nz, raw.ntheta, raw.values).map_err(serde::de::Error::custom)
    }
}

impl GridFunction {
    /// `values[i][j]` is the cell at `z_i = (i + 1/2) / nz`, `θ_j = (j + 1/2) / ntheta`.
    pub fn new(nz: usize, ntheta: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if nz == 0 || ntheta == 0 {
            return Err(Error::InvalidInput(
                "grid dimensions must be positive".into(),
            ));
        }
        if values.len() != nz || values.iter().any(|r| r.len() != ntheta) {
            return Err(dim_mismatch(
                format!("{nz}x{ntheta} values"),
                "a different shape",
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        Ok(Self { nz, ntheta, values })
    }

    pub fn from_fn(nz: usize, ntheta: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..nz)
            .map(|i| {
                (0..ntheta)
                    .map(|j| f(z_center(i, nz), z_center(j, ntheta)))
                    .collect()
            })
            .collect();
        Self::new(nz, ntheta, values)
    }

    /// Row-major cell values.
    pub fn from_flat(nz: usize, ntheta: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != nz * ntheta {
            return Err(dim_mismatch(nz * ntheta, flat.len()));
        }
        Self::new(
            nz,
            ntheta,
            flat.chunks(ntheta.max(1)).map(<[f64]>::to_vec).collect(),
        )
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn cells(&self) -> usize {
        self.nz * self.ntheta
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn z(&self, i: usize) -> f64 {
        z_center(i, self.nz)
    }

    pub fn is_theta_independent(&self) -> bool {
        self.values.iter().all(|r| r.iter().all(|&v| v == r[0]))
    }

    /// `∫ |x - y| dm`.
    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        self.require_same_shape(other)?;
        let s: f64 = self
            .values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(s / self.cells() as f64)
    }

    /// Sorted profile values laid row by row (`λ₂`): row `i` holds the `i`-th block
    /// of `ntheta` consecutive values.
    pub fn from_profile_blocks(profile: &StepFunction, nz: usize) -> Result<Self> {
        let m = profile.segments();
        if nz == 0 || !m.is_multiple_of(nz) {
            return Err(dim_mismatch(format!("a multiple of {nz} segments"), m));
        }
        Self::from_flat(nz, m / nz, profile.values())
    }

    fn require_same_shape(&self, other: &GridFunction) -> Result<()> {
        if self.nz != other.nz || self.ntheta != other.ntheta {
            return Err(dim_mismatch(
                format!("{}x{}", self.nz, self.ntheta),
                format!("{}x{}", other.nz, other.ntheta),
            ));
        }
        Ok(())
    }
}

fn z_center(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// Target cell for each source cell (row-major indices).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMap {
    mapping: Vec<usize>,
    invertible: bool,
}

impl CellMap {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        if let Some(&bad) = mapping.iter().find(|&&t| t >= n) {
            return Err(Error::InvalidInput(format!(
                "cell index {bad} out of range for {n} cells"
            )));
        }
        let mut hit = vec![false; n];
        for &t in &mapping {
            hit[t] = true;
        }
        let invertible = hit.iter().all(|&h| h);
        Ok(Self {
            mapping,
            invertible,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
            invertible: true,
        }
    }

    pub fn random_bijection(rng: &mut InstanceRng, n: usize) -> Self {
        use rand::seq::SliceRandom;
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Self {
            mapping,
            invertible: true,
        }
    }

    /// Arbitrary (generally many-to-one) map.
    pub fn random_map(rng: &mut InstanceRng, n: usize) -> Self {
        use rand::Rng;
        Self::new((0..n).map(|_| rng.random_range(0..n)).collect()).expect("in range")
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }

    /// Number of sources landing on each target.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut m = vec![0; self.mapping.len()];
        for &t in &self.mapping {
            m[t] += 1;
        }
        m
    }

    /// `(y ∘ ψ)(c) = y(ψ(c))`.
    pub fn compose(&self, y: &GridFunction) -> Result<GridFunction> {
        let flat = y.flat();
        if flat.len() != self.len() {
            return Err(dim_mismatch(self.len(), flat.len()));
        }
        let out: Vec<f64> = self.mapping.iter().map(|&t| flat[t]).collect();
        GridFunction::from_flat(y.nz, y.ntheta, &out)
    }

    /// Replaces each value by the mean over its fiber `ψ^{-1}(ψ(c))`, each source
    /// weighted once. This is a conditional expectation, hence doubly stochastic.
    pub fn fiber_average(&self, x: &GridFunction) -> Result<GridFunction> {
        let flat = x.flat();
        if flat.len() != self.len() {
            return Err(dim_mismatch(self.len(), flat.len()));
        }
        let mult = self.multiplicities();
        let mut sums = vec![0.0; self.len()];
        for (c, &t) in self.mapping.iter().enumerate() {
            sums[t] += flat[c];
        }
        let out: Vec<f64> = self
            .mapping
            .iter()
            .map(|&t| sums[t] / mult[t] as f64)
            .collect();
        GridFunction::from_flat(x.nz, x.ntheta, &out)
    }
}

/// `I_1 .. I_pmax`, each `(1 / N) Σ x^p` in row-major order.
pub fn moments(x: &GridFunction, p_max: usize) -> Vec<f64> {
    let n = x.cells() as f64;
    (1..=p_max as i32)
        .map(|p| x.values.iter().flatten().map(|v| v.powi(p)).sum::<f64>() / n)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralProfile {
    /// Nonincreasing, one segment of length `1/N` per cell.
    pub profile: StepFunction,
    /// `psi(c)` is the rank of cell `c`, so `x = λ₂ ∘ psi` on the flattened grid.
    pub psi: CellMap,
}

pub fn spectral_profile(x: &GridFunction) -> SpectralProfile {
    let flat = x.flat();
    let mut order: Vec<usize> = (0..flat.len()).collect();
    order.sort_by(|&a, &b| flat[b].total_cmp(&flat[a]));
    let mut rank = vec![0; flat.len()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let values = order.iter().map(|&c| flat[c]).collect();
    SpectralProfile {
        profile: StepFunction::uniform(values).expect("finite grid values"),
        psi: CellMap {
            mapping: rank,
            invertible: true,
        },
    }
}

/// `π(x)(z) = ∫ x(z, θ) dθ` as a step function with one segment per z-row.
pub fn theta_average(x: &GridFunction) -> StepFunction {
    let means = x
        .values
        .iter()
        .map(|r| r.iter().sum::<f64>() / x.ntheta as f64)
        .collect();
    StepFunction::uniform(means).expect("finite grid values")
}

/// `π(x) ≺ λ`, with the cumulative-gap certificate.
pub fn schur_check(x: &GridFunction, tol: f64) -> StepMajorization {
    majorizes_step(&spectral_profile(x).profile, &theta_average(x), tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct HornLift {
    pub grid: GridFunction,
    /// `||π(x) - target||_{L1}`.
    pub residual: f64,
    /// `2 (range of profile) / ntheta`.
    pub bound: f64,
}

/// Lays the profile's values on an `nz x ntheta` grid so that row means follow
/// `target`, keeping the value multiset exact.
///
/// Two starts are refined by pairwise swaps and the better one is kept: a greedy
/// fill that hands each value (largest first) to the row with the largest
/// remaining need per free slot, and the block arrangement with blocks matched to
/// rows by rank of `target`.
pub fn horn_lift(profile: &StepFunction, target: &StepFunction, tol: f64) -> Result<HornLift> {
    let nz = target.segments();
    let total = profile.segments();
    if !total.is_multiple_of(nz) {
        return Err(dim_mismatch(
            format!("a multiple of {nz} profile segments"),
            total,
        ));
    }
    let ntheta = total / nz;
    let cert = majorizes_step(profile, target, tol);
    if !cert.holds {
        let k = cert
            .gaps
            .iter()
            .position(|&g| g < -tol)
            .unwrap_or(cert.gaps.len().saturating_sub(1));
        return Err(Error::MajorizationFailure {
            index: k,
            gap: cert.gaps.get(k).copied().unwrap_or(cert.total_gap),
        });
    }
    let mut values = profile.values().to_vec();
    values.sort_by(|a, b| b.total_cmp(a));
    let need: Vec<f64> = target.values().iter().map(|t| t * ntheta as f64).collect();

    let greedy = refine(greedy_rows(&values, &need, ntheta), &need);
    let blocks = refine(block_rows(&values, target.values(), ntheta), &need);
    let (rg, rb) = (row_residual(&greedy, &need), row_residual(&blocks, &need));
    let mut rows = if rb <= rg { blocks } else { greedy };
    for r in &mut rows {
        r.sort_by(|a, b| b.total_cmp(a));
    }
    let residual = rg.min(rb) / (ntheta * nz) as f64;
    let bound = 2.0 * profile.range() / ntheta as f64;
    if residual > bound + 1e-12 {
        return Err(Error::InfeasibleAssignment { residual, bound });
    }
    Ok(HornLift {
        grid: GridFunction::new(nz, ntheta, rows)?,
        residual,
        bound,
    })
}

fn row_residual(rows: &[Vec<f64>], need: &[f64]) -> f64 {
    rows.iter()
        .zip(need)
        .map(|(r, s)| (r.iter().sum::<f64>() - s).abs())
        .sum()
}

fn greedy_rows(values: &[f64], need: &[f64], ntheta: usize) -> Vec<Vec<f64>> {
    let nz = need.len();
    let mut rows: Vec<Vec<f64>> = vec![Vec::with_capacity(ntheta); nz];
    let mut sums = vec![0.0; nz];
    for &v in values {
        let mut best = usize::MAX;
        let mut best_need = f64::NEG_INFINITY;
        for i in 0..nz {
            let free = ntheta - rows[i].len();
            if free == 0 {
                continue;
            }
            let per_slot = (need[i] - sums[i]) / free as f64;
            if per_slot > best_need {
                best_need = per_slot;
                best = i;
            }
        }
        rows[best].push(v);
        sums[best] += v;
    }
    rows
}

fn block_rows(values: &[f64], target: &[f64], ntheta: usize) -> Vec<Vec<f64>> {
    let mut order: Vec<usize> = (0..target.len()).collect();
    order.sort_by(|&a, &b| target[b].total_cmp(&target[a]));
    let mut rows = vec![Vec::new(); target.len()];
    for (k, &row) in order.iter().enumerate() {
        rows[row] = values[k * ntheta..(k + 1) * ntheta].to_vec();
    }
    rows
}

/// Repeatedly applies the best single swap between a surplus row and a deficit
/// row, as long as it lowers the total absolute residual.
fn refine(mut rows: Vec<Vec<f64>>, need: &[f64]) -> Vec<Vec<f64>> {
    let nz = rows.len();
    for r in &mut rows {
        r.sort_by(f64::total_cmp);
    }
    let mut res: Vec<f64> = rows
        .iter()
        .zip(need)
        .map(|(r, s)| r.iter().sum::<f64>() - s)
        .collect();
    let cap = 4 * rows.iter().map(Vec::len).sum::<usize>() + 16;
    for _ in 0..cap {
        // best (gain, a, ia, b, ib) over all surplus/deficit pairs
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..nz {
            if res[a] <= 0.0 {
                continue;
            }
            for b in 0..nz {
                if res[b] >= 0.0 {
                    continue;
                }
                let before = res[a].abs() + res[b].abs();
                let ideal = 0.5 * (res[a] - res[b]);
                for (ia, &u) in rows[a].iter().enumerate() {
                    // rows[b] is ascending; look for v near u - ideal
                    let want = u - ideal;
                    let pos = rows[b].partition_point(|&v| v < want);
                    for ib in [pos.wrapping_sub(1), pos] {
                        let Some(&v) = rows[b].get(ib) else { continue };
                        let d = u - v;
                        if d <= 0.0 {
                            continue;
                        }
                        let gain = before - (res[a] - d).abs() - (res[b] + d).abs();
                        if gain > 1e-14 * before.max(1e-300) && best.is_none_or(|bst| gain > bst.0)
                        {
                            best = Some((gain, a, ia, b, ib));
                        }
                    }
                }
            }
        }
        let Some((_, a, ia, b, ib)) = best else { break };
        let (u, v) = (rows[a][ia], rows[b][ib]);
        rows[a][ia] = v;
        rows[b][ib] = u;
        rows[a].sort_by(f64::total_cmp);
        rows[b].sort_by(f64::total_cmp);
        res[a] = rows[a].iter().sum::<f64>() - need[a];
        res[b] = rows[b].iter().sum::<f64>() - need[b];
    }
    rows
}

#[derive(Clone, Debug, Serialize)]
pub struct MongeMinimizer {
    pub minimizer: GridFunction,
    /// `-<minimizer, z>`.
    pub cost: f64,
}

/// Values sorted ascending and laid row by row, so larger values sit at larger
/// `z`; this minimizes `-<x, z>` over all cell permutations.
pub fn monge_minimizer(x: &GridFunction) -> MongeMinimizer {
    let mut flat = x.flat();
    flat.sort_by(f64::total_cmp);
    let minimizer = GridFunction::from_flat(x.nz, x.ntheta, &flat).expect("same shape");
    let cost = z_pairing_cost(&minimizer);
    MongeMinimizer { minimizer, cost }
}

/// `-(1/N) Σ x_c z_c`.
pub fn z_pairing_cost(x: &GridFunction) -> f64 {
    let s: f64 = x
        .values
        .iter()
        .enumerate()
        .map(|(i, r)| x.z(i) * r.iter().sum::<f64>())
        .sum();
    -s / x.cells() as f64
}

/// `u(z) = -z α(z)`: piecewise linear, carried by `α`.
#[derive(Clone, Debug, Serialize)]
pub struct DualCandidate {
    pub alpha: StepFunction,
}

impl DualCandidate {
    pub fn eval(&self, z: f64) -> f64 {
        -z * self.alpha.eval(z)
    }

    /// `∫ u`.
    pub fn integral(&self) -> f64 {
        -self.alpha.first_moment()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusDual {
    pub u: DualCandidate,
    /// `v ≡ 0`, so the composed term `∫ v(α(z)) dz` vanishes.
    pub v_value: f64,
    /// `-∫ z α(z) dz`.
    pub d_value: f64,
    /// `-∫ z λ(z) dz` with `λ` nonincreasing.
    pub k_value: f64,
    /// `k_value - d_value`.
    pub gap: f64,
    pub weak_duality_holds: bool,
    /// `-∫ z λ(1 - z) dz`: the least `-<·, z>` over rearrangements of `λ`.
    pub monge_minimum: f64,
}

/// Saturating dual candidate for a rearrangement `alpha` of `profile`.
pub fn annulus_dual(profile: &StepFunction, alpha: &StepFunction) -> Result<AnnulusDual> {
    let (dp, da) = (profile.distribution(), alpha.distribution());
    let same = dp.len() == da.len()
        && dp
            .iter()
            .zip(&da)
            .all(|(p, a)| (p.0 - a.0).abs() <= 1e-12 && (p.1 - a.1).abs() <= 1e-12);
    if !same {
        return Err(Error::NotRearrangement(
            "alpha and the profile have different value distributions".into(),
        ));
    }
    let lam = crate::majorization::rearrangement_step(profile);
    let k_value = -lam.first_moment();
    let u = DualCandidate {
        alpha: alpha.clone(),
    };
    let d_value = u.integral();
    // ascending arrangement: reflect the breakpoints of λ
    let asc_bp: Vec<f64> = lam.breakpoints().iter().rev().map(|b| 1.0 - b).collect();
    let asc_vals: Vec<f64> = lam.values().iter().rev().copied().collect();
    let monge_minimum = -StepFunction::new(asc_bp, asc_vals)?.first_moment();
    Ok(AnnulusDual {
        u,
        v_value: 0.0,
        d_value,
        k_value,
        gap: k_value - d_value,
        weak_duality_holds: d_value <= k_value + 1e-10,
        monge_minimum,
    })
}

/// Squared quadratic Wasserstein distance with cost `(z - y)^2 / 2`, on atoms at
/// segment midpoints carrying each segment's mass.
pub fn w2_distance(f_plus: &StepFunction, f_minus: &StepFunction) -> Result<f64> {
    let atoms = |f: &StepFunction| -> Result<(Vec<f64>, Vec<f64>)> {
        if f.values().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("densities must be nonnegative".into()));
        }
        let pos = f
            .breakpoints()
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        let mass = f
            .values()
            .iter()
            .zip(f.lengths())
            .map(|(v, l)| v * l)
            .collect();
        Ok((pos, mass))
    };
    let (zp, mp) = atoms(f_plus)?;
    let (zm, mm) = atoms(f_minus)?;
    let (sp, sm) = (mp.iter().sum::<f64>(), mm.iter().sum::<f64>());
    if (sp - sm).abs() > BALANCE_TOL {
        return Err(Error::Unbalanced {
            supply: sp,
            demand: sm,
            gap: sp - sm,
        });
    }
    let cost = CostMatrix::from_fn(zp.len(), zm.len(), |i, j| 0.5 * (zp[i] - zm[j]).powi(2))?;
    let k = solve_kantorovich(&cost, &MarginalVector::new(mp)?, &MarginalVector::new(mm)?)?;
    Ok(k.value)
}
