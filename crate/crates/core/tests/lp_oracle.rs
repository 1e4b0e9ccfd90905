//! Transport solvers against an independent vertex-enumeration LP oracle.

use orbit_transport::random::{rng_from_seed, uniform_matrix, uniform_vec};
use orbit_transport::transport::{
    complementary_slackness_residual, solve_dual, solve_kantorovich, solve_monge, CostMatrix,
    MarginalVector,
};

/// Solves `a x = b` by Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let pivot = a[c].clone();
            for (x, p) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * p;
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Minimum of the transportation LP over all basic feasible solutions.
fn vertex_oracle(cost: &[Vec<f64>], mu_plus: &[f64], mu_minus: &[f64]) -> f64 {
    let (m, n) = (mu_plus.len(), mu_minus.len());
    // row constraints plus all column constraints but the last (which is implied)
    let k = m + n - 1;
    let mut subsets = Vec::new();
    combinations(m * n, k, 0, &mut Vec::new(), &mut subsets);
    let mut best = f64::INFINITY;
    for cells in subsets {
        let mut a = vec![vec![0.0; k]; k];
        for (col, &cell) in cells.iter().enumerate() {
            let (i, j) = (cell / n, cell % n);
            a[i][col] = 1.0;
            if j < n - 1 {
                a[m + j][col] = 1.0;
            }
        }
        let b: Vec<f64> = mu_plus.iter().chain(&mu_minus[..n - 1]).copied().collect();
        let Some(x) = solve_dense(a, b) else { continue };
        if x.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let value: f64 = cells
            .iter()
            .zip(&x)
            .map(|(&c, v)| cost[c / n][c % n] * v)
            .sum();
        best = best.min(value);
    }
    best
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

#[test]
fn kantorovich_and_dual_match_vertex_enumeration() {
    for seed in 0..40u64 {
        let mut rng = rng_from_seed(seed);
        let (m, n) = (2 + (seed as usize % 3), 2 + (seed as usize / 3 % 3));
        let cost = uniform_matrix(&mut rng, m, n);
        let mp = normalized(uniform_vec(&mut rng, m, 0.1, 1.0));
        let mm = normalized(uniform_vec(&mut rng, n, 0.1, 1.0));
        let oracle = vertex_oracle(&cost, &mp, &mm);

        let c = CostMatrix::new(cost).unwrap();
        let (p, q) = (
            MarginalVector::new(mp).unwrap(),
            MarginalVector::new(mm).unwrap(),
        );
        let k = solve_kantorovich(&c, &p, &q).unwrap();
        let d = solve_dual(&c, &p, &q).unwrap();
        assert!(
            (k.value - oracle).abs() <= 1e-10,
            "seed {seed}: {} vs {oracle}",
            k.value
        );
        assert!(
            (d.value - oracle).abs() <= 1e-10,
            "seed {seed}: dual {} vs {oracle}",
            d.value
        );
        assert!(d.potentials.max_violation(&c).unwrap() <= 1e-9);
        assert!(k.plan.marginal_residual() <= 1e-12);
        assert!(complementary_slackness_residual(&c, &k.plan, &k.potentials, 1e-12) <= 1e-9);
    }
}

#[test]
fn square_uniform_lp_equals_assignment_over_n() {
    for seed in 100..120u64 {
        let mut rng = rng_from_seed(seed);
        let n = 2 + seed as usize % 3;
        let cost = uniform_matrix(&mut rng, n, n);
        let uni = vec![1.0 / n as f64; n];
        let oracle = vertex_oracle(&cost, &uni, &uni);
        let monge = solve_monge(&CostMatrix::new(cost).unwrap()).unwrap();
        assert!((monge.value / n as f64 - oracle).abs() <= 1e-10);
    }
}
