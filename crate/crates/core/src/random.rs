//! Seeded instance generators.
//!
//! All randomness flows through ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with a
//! `u64`, so every instance is reproducible across platforms. Batch harnesses
//! derive per-instance generators as `seed + index`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Complex, ComplexMatrix, HermitianMatrix, SkewHermitianMatrix, UnitaryMatrix};
use crate::majorization::{DoublyStochasticMatrix, PermutationMap};

pub type InstanceRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut InstanceRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn uniform_matrix(rng: &mut InstanceRng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| uniform_vec(rng, cols, 0.0, 1.0))
        .collect()
}

fn gaussian(rng: &mut InstanceRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Hermitian matrix with entries of magnitude about `scale`.
pub fn random_hermitian(rng: &mut InstanceRng, n: usize, scale: f64) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(n, n, |_, _| {
        Complex::new(gaussian(rng) * scale, gaussian(rng) * scale)
    });
    HermitianMatrix::symmetrized(&m).expect("square")
}

pub fn random_skew_hermitian(rng: &mut InstanceRng, n: usize) -> SkewHermitianMatrix {
    let m = ComplexMatrix::from_fn(n, n, |_, _| Complex::new(gaussian(rng), gaussian(rng)));
    SkewHermitianMatrix::skew_symmetrized(&m).expect("square")
}

/// Unitary matrix from modified Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(rng: &mut InstanceRng, n: usize) -> UnitaryMatrix {
    loop {
        let mut cols: Vec<Vec<Complex>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| Complex::new(gaussian(rng), gaussian(rng)))
                    .collect()
            })
            .collect();
        let mut ok = true;
        for j in 0..n {
            for k in 0..j {
                let mut dot = Complex::ZERO;
                for i in 0..n {
                    dot += cols[k][i].conj() * cols[j][i];
                }
                for i in 0..n {
                    let v = cols[k][i] * dot;
                    cols[j][i] -= v;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for z in cols[j].iter_mut() {
                *z = z.scale(1.0 / norm);
            }
        }
        if ok {
            let m = ComplexMatrix::from_fn(n, n, |i, j| cols[j][i]);
            return UnitaryMatrix::new(m).expect("orthonormalized columns");
        }
    }
}

pub fn random_permutation(rng: &mut InstanceRng, n: usize) -> PermutationMap {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    PermutationMap::new(p).expect("shuffled identity is a bijection")
}

/// Random convex combination of `terms` random permutation matrices.
pub fn random_doubly_stochastic(
    rng: &mut InstanceRng,
    n: usize,
    terms: usize,
) -> DoublyStochasticMatrix {
    let weights: Vec<f64> = (0..terms.max(1))
        .map(|_| rng.random_range(0.05..1.0))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut m = vec![vec![0.0; n]; n];
    for w in &weights {
        let p = random_permutation(rng, n);
        for (i, &j) in p.as_slice().iter().enumerate() {
            m[i][j] += w / total;
        }
    }
    DoublyStochasticMatrix::new(m).expect("convex combination of permutations")
}

/// Product of `count` random T-transforms `t I + (1 - t) Q_(jk)`.
pub fn random_t_transform_product(
    rng: &mut InstanceRng,
    n: usize,
    count: usize,
) -> DoublyStochasticMatrix {
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if n < 2 {
        return DoublyStochasticMatrix::new(m).expect("identity");
    }
    for _ in 0..count {
        let j = rng.random_range(0..n);
        let mut k = rng.random_range(0..n - 1);
        if k >= j {
            k += 1;
        }
        let t: f64 = rng.random_range(0.0..1.0);
        // left-multiply: rows j and k mix
        for c in 0..n {
            let (a, b) = (m[j][c], m[k][c]);
            m[j][c] = t * a + (1.0 - t) * b;
            m[k][c] = t * b + (1.0 - t) * a;
        }
    }
    DoublyStochasticMatrix::new(m).expect("product of T-transforms")
}

/// `Q (i diag(spectrum)) Q^dagger` for a random unitary `Q`.
pub fn random_orbit_point(rng: &mut InstanceRng, spectrum: &[f64]) -> SkewHermitianMatrix {
    let q = random_unitary(rng, spectrum.len());
    SkewHermitianMatrix::from_imaginary_diagonal(spectrum)
        .conjugate_by(&q)
        .expect("square")
}

/// Vector of `n` values with consecutive gaps of at least `min_gap`, shuffled.
pub fn separated_values(rng: &mut InstanceRng, n: usize, min_gap: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    let mut x = rng.random_range(-1.0..0.0);
    for _ in 0..n {
        v.push(x);
        x += min_gap + rng.random_range(0.0..min_gap);
    }
    v.shuffle(rng);
    v
}
