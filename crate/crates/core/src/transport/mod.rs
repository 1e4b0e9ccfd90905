//! Discrete optimal transport.
//!
//! * Monge: cheapest bijection, by the Hungarian method.
//! * Kantorovich: the transportation LP (square or rectangular), by the
//!   transportation simplex.
//! * Dual: potentials `u_i + v_j <= c_ij` read off the optimal simplex basis.
//!
//! Harnesses compare the three values and replay the weak-duality chain.

mod hungarian;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::majorization::{DoublyStochasticMatrix, PermutationMap};

/// Marginal balance tolerance.
pub const BALANCE_TOL: f64 = 1e-9;
/// Feasibility slack accepted for dual potentials.
pub const DUAL_FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "Vec<Vec<f64>>")]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput(
                "cost matrix must be at least 1x1".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("ragged cost matrix".into()));
        }
        if rows.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("cost entries must be finite".into()));
        }
        Ok(Self {
            rows: n,
            cols: m,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(
            (0..rows)
                .map(|i| (0..cols).map(|j| f(i, j)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.cols)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `sum_i c[i][sigma(i)]`, accumulated in row order.
    pub fn assignment_cost(&self, sigma: &PermutationMap) -> f64 {
        sigma
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &j)| self.get(i, j))
            .sum()
    }

    fn require_square(&self) -> Result<usize> {
        if !self.is_square() {
            return Err(dim_mismatch(
                format!("square cost ({} rows)", self.rows),
                format!("{} columns", self.cols),
            ));
        }
        Ok(self.rows)
    }
}

impl From<CostMatrix> for Vec<Vec<f64>> {
    fn from(c: CostMatrix) -> Self {
        c.to_rows()
    }
}

impl<'de> Deserialize<'de> for CostMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Self::new(Vec::<Vec<f64>>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "Vec<f64>")]
pub struct MarginalVector(Vec<f64>);

impl MarginalVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidInput("marginal must be non-empty".into()));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidInput(
                "marginal masses must be finite and >= 0".into(),
            ));
        }
        if !(masses.iter().sum::<f64>() > 0.0) {
            return Err(Error::InvalidInput(
                "marginal total must be positive".into(),
            ));
        }
        Ok(Self(masses))
    }

    /// `n` atoms of mass `1/n`.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl From<MarginalVector> for Vec<f64> {
    fn from(m: MarginalVector) -> Self {
        m.0
    }
}

impl<'de> Deserialize<'de> for MarginalVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Self::new(Vec::<f64>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    mu_plus: Vec<f64>,
    mu_minus: Vec<f64>,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.cols)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn cost(&self, cost: &CostMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&cost.entries)
            .map(|(f, c)| f * c)
            .sum()
    }

    /// Largest deviation of a row or column sum from its marginal.
    pub fn marginal_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for (i, row) in self.entries.chunks(self.cols).enumerate() {
            r = r.max((row.iter().sum::<f64>() - self.mu_plus[i]).abs());
        }
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self.get(i, j)).sum();
            r = r.max((s - self.mu_minus[j]).abs());
        }
        r
    }

    /// For a square plan with marginals `c/n`, the plan scaled to unit row and column sums.
    pub fn to_doubly_stochastic(&self) -> Result<DoublyStochasticMatrix> {
        if self.rows != self.cols {
            return Err(dim_mismatch(self.rows, self.cols));
        }
        let total: f64 = self.mu_plus.iter().sum();
        let scale = self.rows as f64 / total;
        DoublyStochasticMatrix::new(
            self.to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(|v| v * scale).collect())
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualConvention {
    /// `u_i + v_j <= c_ij`.
    Sum,
    /// `phi_i - psi_j <= c_ij`; stored as `u = phi`, `v = psi`.
    Difference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualPotentials {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub convention: DualConvention,
}

impl DualPotentials {
    pub fn sum_form(u: Vec<f64>, v: Vec<f64>) -> Self {
        Self {
            u,
            v,
            convention: DualConvention::Sum,
        }
    }

    pub fn difference_form(phi: Vec<f64>, psi: Vec<f64>) -> Self {
        Self {
            u: phi,
            v: psi,
            convention: DualConvention::Difference,
        }
    }

    /// `(u, v)` with `u_i + v_j <= c_ij`.
    pub fn to_sum_form(&self) -> (Vec<f64>, Vec<f64>) {
        match self.convention {
            DualConvention::Sum => (self.u.clone(), self.v.clone()),
            DualConvention::Difference => (self.u.clone(), self.v.iter().map(|x| -x).collect()),
        }
    }

    /// `(phi, psi)` with `phi_i - psi_j <= c_ij`.
    pub fn to_difference_form(&self) -> (Vec<f64>, Vec<f64>) {
        match self.convention {
            DualConvention::Difference => (self.u.clone(), self.v.clone()),
            DualConvention::Sum => (self.u.clone(), self.v.iter().map(|x| -x).collect()),
        }
    }

    /// `max_ij (u_i + v_j - c_ij)`; feasible when this is `<= DUAL_FEAS_TOL`.
    pub fn max_violation(&self, cost: &CostMatrix) -> Result<f64> {
        let (u, v) = self.to_sum_form();
        if u.len() != cost.rows() || v.len() != cost.cols() {
            return Err(dim_mismatch(
                format!("{}x{}", cost.rows(), cost.cols()),
                format!("{}x{}", u.len(), v.len()),
            ));
        }
        let mut worst = f64::NEG_INFINITY;
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                worst = worst.max(ui + vj - cost.get(i, j));
            }
        }
        Ok(worst)
    }

    /// `sum u_i mu+_i + sum v_j mu-_j` in sum form.
    pub fn objective(&self, mu_plus: &[f64], mu_minus: &[f64]) -> f64 {
        let (u, v) = self.to_sum_form();
        u.iter().zip(mu_plus).map(|(a, b)| a * b).sum::<f64>()
            + v.iter().zip(mu_minus).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MongeSolution {
    pub assignment: PermutationMap,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KantorovichSolution {
    pub plan: TransportPlan,
    pub value: f64,
    /// Optimal-basis potentials (sum form, `u_0 = 0`).
    pub potentials: DualPotentials,
    pub pivots: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualSolution {
    pub potentials: DualPotentials,
    pub value: f64,
}

pub fn solve_monge(cost: &CostMatrix) -> Result<MongeSolution> {
    let n = cost.require_square()?;
    let assignment = PermutationMap::new(hungarian::hungarian(&cost.entries, n))?;
    let value = cost.assignment_cost(&assignment);
    Ok(MongeSolution { assignment, value })
}

/// Exhaustive search over all `n!` permutations (lexicographic order, first
/// minimum kept). Intended as an oracle for `n <= 10`.
pub fn brute_force_monge(cost: &CostMatrix) -> Result<MongeSolution> {
    let n = cost.require_square()?;
    if n > 10 {
        return Err(Error::SizeLimit(format!(
            "brute force limited to n <= 10, got {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_value = f64::INFINITY;
    loop {
        let value: f64 = perm.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum();
        if value < best_value {
            best_value = value;
            best.clone_from(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(MongeSolution {
        assignment: PermutationMap::new(best)?,
        value: best_value,
    })
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..n)
        .rev()
        .find(|&j| p[j] > p[i])
        .expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

fn check_balance(
    cost: &CostMatrix,
    mu_plus: &MarginalVector,
    mu_minus: &MarginalVector,
) -> Result<()> {
    if mu_plus.len() != cost.rows() || mu_minus.len() != cost.cols() {
        return Err(dim_mismatch(
            format!("marginals of length {} and {}", cost.rows(), cost.cols()),
            format!("{} and {}", mu_plus.len(), mu_minus.len()),
        ));
    }
    let (supply, demand) = (mu_plus.total(), mu_minus.total());
    if (supply - demand).abs() > BALANCE_TOL {
        return Err(Error::Unbalanced {
            supply,
            demand,
            gap: supply - demand,
        });
    }
    Ok(())
}

pub fn solve_kantorovich(
    cost: &CostMatrix,
    mu_plus: &MarginalVector,
    mu_minus: &MarginalVector,
) -> Result<KantorovichSolution> {
    check_balance(cost, mu_plus, mu_minus)?;
    let sol = simplex::transportation_simplex(
        &cost.entries,
        cost.rows(),
        cost.cols(),
        mu_plus.as_slice(),
        mu_minus.as_slice(),
    )?;
    let plan = TransportPlan {
        rows: cost.rows(),
        cols: cost.cols(),
        entries: sol.flows,
        mu_plus: mu_plus.as_slice().to_vec(),
        mu_minus: mu_minus.as_slice().to_vec(),
    };
    let value = plan.cost(cost);
    Ok(KantorovichSolution {
        plan,
        value,
        potentials: DualPotentials::sum_form(sol.u, sol.v),
        pivots: sol.pivots,
    })
}

pub fn solve_dual(
    cost: &CostMatrix,
    mu_plus: &MarginalVector,
    mu_minus: &MarginalVector,
) -> Result<DualSolution> {
    let primal = solve_kantorovich(cost, mu_plus, mu_minus)?;
    let value = primal
        .potentials
        .objective(mu_plus.as_slice(), mu_minus.as_slice());
    Ok(DualSolution {
        potentials: primal.potentials,
        value,
    })
}

/// Largest `|c_ij - u_i - v_j|` over cells carrying more than `tol` mass.
pub fn complementary_slackness_residual(
    cost: &CostMatrix,
    plan: &TransportPlan,
    potentials: &DualPotentials,
    tol: f64,
) -> f64 {
    let (u, v) = potentials.to_sum_form();
    let mut worst: f64 = 0.0;
    for i in 0..cost.rows() {
        for j in 0..cost.cols() {
            if plan.get(i, j) > tol {
                worst = worst.max((cost.get(i, j) - u[i] - v[j]).abs());
            }
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct TripleEqualityReport {
    pub n: usize,
    pub monge: f64,
    /// `n` times the uniform-marginal Kantorovich value.
    pub kantorovich_scaled: f64,
    /// `n` times the uniform-marginal dual value.
    pub dual_scaled: f64,
    pub gap_monge_kantorovich: f64,
    pub gap_kantorovich_dual: f64,
    pub assignment: PermutationMap,
}

/// Solves M, K and D on a square cost and reports the gaps.
pub fn verify_triple_equality(cost: &CostMatrix) -> Result<TripleEqualityReport> {
    let n = cost.require_square()?;
    let monge = solve_monge(cost)?;
    let uniform = MarginalVector::uniform(n);
    let k = solve_kantorovich(cost, &uniform, &uniform)?;
    let d = k
        .potentials
        .objective(uniform.as_slice(), uniform.as_slice());
    let kantorovich_scaled = n as f64 * k.value;
    let dual_scaled = n as f64 * d;
    Ok(TripleEqualityReport {
        n,
        monge: monge.value,
        kantorovich_scaled,
        dual_scaled,
        gap_monge_kantorovich: (monge.value - kantorovich_scaled).abs(),
        gap_kantorovich_dual: (kantorovich_scaled - dual_scaled).abs(),
        assignment: monge.assignment,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitInstance {
    pub cost: CostMatrix,
    /// `u_i = lambda_i n_i`, `v = 0`.
    pub candidate: DualPotentials,
    pub feasible: bool,
    pub max_violation: f64,
    /// Cells `(i, j, u_i + v_j - c_ij)` where the candidate breaks the constraint.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Cost `c_ij = lambda_i n_j` of the adjoint-orbit problem with the closed-form
/// dual candidate and an entrywise feasibility report.
pub fn orbit_cost_instance(lambda: &[f64], n_diag: &[f64]) -> Result<OrbitInstance> {
    if lambda.len() != n_diag.len() {
        return Err(dim_mismatch(lambda.len(), n_diag.len()));
    }
    if lambda.is_empty() {
        return Err(Error::InvalidInput("empty orbit data".into()));
    }
    let cost = CostMatrix::from_fn(lambda.len(), n_diag.len(), |i, j| lambda[i] * n_diag[j])?;
    let u: Vec<f64> = lambda.iter().zip(n_diag).map(|(l, n)| l * n).collect();
    let v = vec![0.0; n_diag.len()];
    let mut violations = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    for (i, ui) in u.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            let excess = ui + vj - cost.get(i, j);
            max_violation = max_violation.max(excess);
            if excess > DUAL_FEAS_TOL {
                violations.push((i, j, excess));
            }
        }
    }
    Ok(OrbitInstance {
        cost,
        candidate: DualPotentials::sum_form(u, v),
        feasible: violations.is_empty(),
        max_violation,
        violations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakDualityReport {
    /// `sum_ij a_ij (phi_i - psi_j)`.
    pub weighted_left: f64,
    /// `sum_i phi_i - sum_j psi_j`.
    pub collapsed_left: f64,
    /// `sum_ij a_ij c_ij`.
    pub right: f64,
    pub potentials_feasible: bool,
    pub max_violation: f64,
    /// `collapsed_left <= right + 1e-10`.
    pub holds: bool,
}

/// Replays the weak-duality chain: weight the constraint `phi_i - psi_j <= c_ij`
/// by a doubly stochastic `a_ij`, sum, and collapse the left side with the unit
/// row and column sums.
pub fn k_ge_d_certificate(
    plan: &DoublyStochasticMatrix,
    potentials: &DualPotentials,
    cost: &CostMatrix,
) -> Result<WeakDualityReport> {
    let n = cost.require_square()?;
    if plan.n() != n {
        return Err(dim_mismatch(n, plan.n()));
    }
    let max_violation = potentials.max_violation(cost)?;
    let (phi, psi) = potentials.to_difference_form();
    let mut weighted_left = 0.0;
    let mut right = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = plan.get(i, j);
            weighted_left += a * (phi[i] - psi[j]);
            right += a * cost.get(i, j);
        }
    }
    let collapsed_left = phi.iter().sum::<f64>() - psi.iter().sum::<f64>();
    Ok(WeakDualityReport {
        weighted_left,
        collapsed_left,
        right,
        potentials_feasible: max_violation <= DUAL_FEAS_TOL,
        max_violation,
        holds: collapsed_left <= right + 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_doubly_stochastic, rng_from_seed, uniform_matrix, uniform_vec};
    use rand::Rng;

    fn cost(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn monge_zero_cost_is_identity() {
        let c = CostMatrix::new(vec![vec![0.0; 4]; 4]).unwrap();
        let s = solve_monge(&c).unwrap();
        assert!(s.assignment.is_identity());
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn monge_orbit_value() {
        let inst = orbit_cost_instance(&[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        let s = solve_monge(&inst.cost).unwrap();
        // enumeration: min over the 6 pairings is 3*1 + 2*2 + 1*3
        let bf = brute_force_monge(&inst.cost).unwrap();
        assert_eq!(bf.value, 10.0);
        assert_eq!(s.value, 10.0);
    }

    #[test]
    fn monge_matches_enumeration() {
        let mut rng = rng_from_seed(1);
        for n in 1..=7 {
            for _ in 0..5 {
                let c = CostMatrix::new(uniform_matrix(&mut rng, n, n)).unwrap();
                let h = solve_monge(&c).unwrap();
                let b = brute_force_monge(&c).unwrap();
                assert_eq!(h.value, b.value, "n={n}");
            }
        }
    }

    #[test]
    fn monge_rejects_rectangular() {
        let c = CostMatrix::new(vec![vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            solve_monge(&c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kantorovich_single_cell() {
        let c = cost(&[&[2.5]]);
        let mu = MarginalVector::new(vec![3.0]).unwrap();
        let s = solve_kantorovich(&c, &mu, &mu).unwrap();
        assert_eq!(s.value, 7.5);
        let d = solve_dual(&c, &mu, &mu).unwrap();
        assert_eq!(d.potentials.u, vec![0.0]);
        assert_eq!(d.potentials.v, vec![2.5]);
        assert_eq!(d.value, 7.5);
    }

    #[test]
    fn kantorovich_rectangular_example() {
        // enumerating the basic feasible solutions gives value 1
        let c = cost(&[&[0.0, 1.0, 2.0], &[2.0, 1.0, 0.0]]);
        let mp = MarginalVector::new(vec![2.0, 1.0]).unwrap();
        let mm = MarginalVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let s = solve_kantorovich(&c, &mp, &mm).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        let p = s.plan.to_rows();
        assert_eq!(p, vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let d = solve_dual(&c, &mp, &mm).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
        assert!(d.potentials.max_violation(&c).unwrap() <= 1e-12);
    }

    #[test]
    fn kantorovich_uniform_equals_scaled_monge() {
        let mut rng = rng_from_seed(50);
        for _ in 0..50 {
            let c = CostMatrix::new(uniform_matrix(&mut rng, 6, 6)).unwrap();
            let u = MarginalVector::uniform(6);
            let k = solve_kantorovich(&c, &u, &u).unwrap();
            let m = solve_monge(&c).unwrap();
            assert!((6.0 * k.value - m.value).abs() <= 1e-8);
            assert!(k.plan.marginal_residual() <= 1e-9);
            assert!(complementary_slackness_residual(&c, &k.plan, &k.potentials, 1e-9) <= 1e-8);
        }
    }

    #[test]
    fn kantorovich_random_rectangular_duality() {
        let mut rng = rng_from_seed(51);
        for _ in 0..30 {
            let n = rng.random_range(1..7);
            let m = rng.random_range(1..7);
            let c = CostMatrix::new(uniform_matrix(&mut rng, n, m)).unwrap();
            let mut mp = uniform_vec(&mut rng, n, 0.0, 1.0);
            let mut mm = uniform_vec(&mut rng, m, 0.0, 1.0);
            // zero entries exercise degenerate pivots
            mp[0] = 0.0;
            if m > 1 {
                mm[m - 1] = 0.0;
            }
            let tp: f64 = mp.iter().sum();
            let tm: f64 = mm.iter().sum();
            if tp == 0.0 || tm == 0.0 {
                continue;
            }
            let mm: Vec<f64> = mm.iter().map(|x| x * tp / tm).collect();
            let mp = MarginalVector::new(mp).unwrap();
            let mm = MarginalVector::new(mm).unwrap();
            let k = solve_kantorovich(&c, &mp, &mm).unwrap();
            assert!(k.plan.marginal_residual() <= 1e-9);
            let d = solve_dual(&c, &mp, &mm).unwrap();
            assert!(d.potentials.max_violation(&c).unwrap() <= 1e-9);
            assert!((d.value - k.value).abs() <= 1e-8);
        }
    }

    #[test]
    fn unbalanced_is_rejected() {
        let c = cost(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let a = MarginalVector::new(vec![1.0, 1.0]).unwrap();
        let b = MarginalVector::new(vec![1.0, 2.0]).unwrap();
        match solve_kantorovich(&c, &a, &b) {
            Err(Error::Unbalanced { gap, .. }) => assert_eq!(gap, -1.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(solve_dual(&c, &a, &b).is_err());
    }

    #[test]
    fn orbit_dual_value() {
        let inst = orbit_cost_instance(&[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        let u = MarginalVector::uniform(3);
        let d = solve_dual(&inst.cost, &u, &u).unwrap();
        assert!((d.value - 10.0 / 3.0).abs() <= 1e-9);
        let k = solve_kantorovich(&inst.cost, &u, &u).unwrap();
        assert!((k.value - 10.0 / 3.0).abs() <= 1e-9);
    }

    #[test]
    fn orbit_candidate_feasibility() {
        let one = orbit_cost_instance(&[1.0], &[1.0]).unwrap();
        assert_eq!(one.cost.to_rows(), vec![vec![1.0]]);
        assert!(one.feasible);

        let inst = orbit_cost_instance(&[2.0, 1.0], &[2.0, 1.0]).unwrap();
        assert_eq!(inst.cost.to_rows(), vec![vec![4.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(inst.candidate.u, vec![4.0, 1.0]);
        assert!(!inst.feasible);
        assert!(inst.violations.contains(&(0, 1, 2.0)));

        // entrywise oracle on the 3x3 instance
        let lam = [3.0, 2.0, 1.0];
        let nd = [1.0, 2.0, 3.0];
        let inst = orbit_cost_instance(&lam, &nd).unwrap();
        let mut expect_feasible = true;
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(inst.cost.get(i, j), lam[i] * nd[j]);
                if lam[i] * nd[i] > lam[i] * nd[j] + 1e-9 {
                    expect_feasible = false;
                }
            }
        }
        assert_eq!(inst.feasible, expect_feasible);
    }

    #[test]
    fn triple_equality_examples() {
        let r = verify_triple_equality(&cost(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(r.monge, 0.0);
        assert!(r.kantorovich_scaled.abs() < 1e-15);
        assert!(r.dual_scaled.abs() < 1e-15);
    }

    #[test]
    fn weak_duality_chain() {
        let c = cost(&[&[1.0, 2.0], &[0.5, 3.0]]);
        let zero = DualPotentials::difference_form(vec![0.0; 2], vec![0.0; 2]);
        let r = k_ge_d_certificate(&DoublyStochasticMatrix::identity(2), &zero, &c).unwrap();
        assert_eq!(r.collapsed_left, 0.0);
        assert_eq!(r.right, 4.0);
        assert!(r.holds && r.potentials_feasible);

        let mut rng = rng_from_seed(9);
        for _ in 0..50 {
            let c = CostMatrix::new(uniform_matrix(&mut rng, 5, 5)).unwrap();
            // feasible by construction: phi_i = min_j (c_ij + psi_j)
            let psi = uniform_vec(&mut rng, 5, -1.0, 1.0);
            let phi: Vec<f64> = (0..5)
                .map(|i| {
                    (0..5)
                        .map(|j| c.get(i, j) + psi[j])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            let pot = DualPotentials::difference_form(phi, psi);
            let a = random_doubly_stochastic(&mut rng, 5, 4);
            let r = k_ge_d_certificate(&a, &pot, &c).unwrap();
            assert!(r.potentials_feasible);
            assert!(r.weighted_left <= r.right + 1e-10);
            assert!((r.weighted_left - r.collapsed_left).abs() <= 1e-12);
            assert!(r.holds);
        }

        // optimal pair closes the chain
        let c = CostMatrix::new(uniform_matrix(&mut rng, 6, 6)).unwrap();
        let u = MarginalVector::uniform(6);
        let k = solve_kantorovich(&c, &u, &u).unwrap();
        let a = k.plan.to_doubly_stochastic().unwrap();
        let r = k_ge_d_certificate(&a, &k.potentials, &c).unwrap();
        assert!((r.collapsed_left - r.right).abs() <= 1e-8);

        // infeasible potentials are flagged, not rejected
        let bad = DualPotentials::sum_form(vec![10.0; 6], vec![0.0; 6]);
        let r = k_ge_d_certificate(&a, &bad, &c).unwrap();
        assert!(!r.potentials_feasible);
    }

    #[test]
    fn rearrangement_inequality_optimum() {
        let mut rng = rng_from_seed(14);
        for n in 2..=8 {
            let mut lam = uniform_vec(&mut rng, n, -1.0, 1.0);
            let mut nd = uniform_vec(&mut rng, n, -1.0, 1.0);
            lam.sort_by(|a, b| b.total_cmp(a));
            nd.sort_by(|a, b| b.total_cmp(a));
            let inst = orbit_cost_instance(&lam, &nd).unwrap();
            let bf = brute_force_monge(&inst.cost).unwrap();
            let reversing: Vec<usize> = (0..n).rev().collect();
            assert_eq!(bf.assignment.as_slice(), reversing.as_slice());
        }
    }
}
