use super::{Complex, ComplexMatrix, HermitianMatrix, UnitaryMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = Q diag(values) Q^dagger` with `values` nonincreasing.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: UnitaryMatrix,
}

impl Eigh {
    /// `Q diag(values) Q^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let q = self.vectors.as_matrix();
        let n = self.values.len();
        ComplexMatrix::from_fn(n, n, |i, j| {
            let mut s = Complex::ZERO;
            for (k, &lam) in self.values.iter().enumerate() {
                s += q[(i, k)] * q[(j, k)].conj() * lam;
            }
            s
        })
    }
}

pub fn jacobi_eigh(a: &HermitianMatrix) -> Result<Eigh> {
    jacobi_eigh_with(a, DEFAULT_MAX_SWEEPS)
}

/// Cyclic Jacobi on a Hermitian matrix.
///
/// Each pivot `(p, q)` is annihilated by the unitary `D R`, where `D` strips the
/// phase of `a_pq` (making the 2x2 block real symmetric) and `R` is the classical
/// real Jacobi rotation for that block. Eigenvalue ties are broken by original
/// index so the column order of `Q` is deterministic.
pub fn jacobi_eigh_with(a: &HermitianMatrix, max_sweeps: usize) -> Result<Eigh> {
    let n = a.n();
    let mut m = a.as_matrix().clone();
    for i in 0..n {
        m[(i, i)] = Complex::real(m[(i, i)].re);
    }
    let mut v = ComplexMatrix::identity(n);
    let scale_sqr = m.frobenius_norm().powi(2);
    // off(A)^2 relative to ||A||_F^2; Jacobi converges quadratically so this is reached
    // within a couple of sweeps of the asymptotic regime.
    let target = (f64::EPSILON * 1e-2).powi(2) * scale_sqr;

    let mut converged = n < 2 || m.off_diagonal_norm_sqr() <= target;
    let mut sweeps = 0;
    while !converged && sweeps < max_sweeps {
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        converged = m.off_diagonal_norm_sqr() <= target;
        if !converged && sweeps >= 3 {
            // rounding floor: entries below ulp of the diagonal cannot be reduced further
            let floor = max_negligible(&m);
            if floor {
                converged = true;
            }
        }
    }
    if !converged {
        return Err(Error::EigenNonConvergence {
            sweeps,
            residual: m.off_diagonal_norm_sqr().sqrt(),
        });
    }

    let raw: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep original index order
    order.sort_by(|&i, &j| raw[j].partial_cmp(&raw[i]).expect("finite eigenvalues"));
    let values = order.iter().map(|&k| raw[k]).collect();
    let q = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(Eigh {
        values,
        vectors: UnitaryMatrix::from_trusted(q),
    })
}

fn max_negligible(m: &ComplexMatrix) -> bool {
    let n = m.rows();
    for p in 0..n {
        for q in p + 1..n {
            let off = m[(p, q)].abs();
            let d = m[(p, p)].re.abs() + m[(q, q)].re.abs();
            if off > 0.0 && d + off != d {
                return false;
            }
        }
    }
    true
}

fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.abs();
    if r == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let n = m.rows();

    // real Jacobi rotation for [[app, r], [r, aqq]]
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau.is_infinite() {
        0.0
    } else {
        let t = 1.0 / (tau.abs() + (1.0 + tau * tau).sqrt());
        if tau < 0.0 {
            -t
        } else {
            t
        }
    };
    if t == 0.0 {
        // |a_pq| is negligible against the diagonal gap
        m[(p, q)] = Complex::ZERO;
        m[(q, p)] = Complex::ZERO;
        return;
    }
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let phase = Complex::new(apq.re / r, -apq.im / r); // e^{-i phi}

    // U = D R restricted to (p, q):
    // [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    let u_pp = Complex::real(c);
    let u_pq = Complex::real(s);
    let u_qp = phase.scale(-s);
    let u_qq = phase.scale(c);

    // A <- A U
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * u_pp + akq * u_qp;
        m[(k, q)] = akp * u_pq + akq * u_qq;
    }
    // A <- U^dagger A
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        m[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    m[(p, p)] = Complex::real(app - t * r);
    m[(q, q)] = Complex::real(aqq + t * r);
    m[(p, q)] = Complex::ZERO;
    m[(q, p)] = Complex::ZERO;
    // V <- V U
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_unitary, rng_from_seed};

    fn reconstruction_residual(a: &HermitianMatrix, e: &Eigh) -> f64 {
        (a.as_matrix() - &e.reconstruct()).max_abs()
    }

    #[test]
    fn diagonal_input_is_fixed() {
        let a = HermitianMatrix::from_real_diagonal(&[3.0, 1.0]);
        let e = jacobi_eigh(&a).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors.as_matrix(), &ComplexMatrix::identity(2));
    }

    #[test]
    fn two_by_two_closed_form() {
        // lambda = a +/- |b|
        let a = HermitianMatrix::new(
            ComplexMatrix::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap(),
        )
        .unwrap();
        let e = jacobi_eigh(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
        let q = e.vectors.as_matrix();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // columns (1,1)/sqrt2 and (1,-1)/sqrt2 up to a phase
        let c0 = (q[(0, 0)].conj() * q[(1, 0)]).re / (q[(0, 0)].abs() * q[(1, 0)].abs());
        let c1 = (q[(0, 1)].conj() * q[(1, 1)]).re / (q[(0, 1)].abs() * q[(1, 1)].abs());
        assert!((c0 - 1.0).abs() < 1e-14);
        assert!((c1 + 1.0).abs() < 1e-14);
        for i in 0..2 {
            for j in 0..2 {
                assert!((q[(i, j)].abs() - h).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn complex_two_by_two_phase() {
        let b = Complex::new(0.6, -0.8);
        let m = ComplexMatrix::from_vec(
            2,
            2,
            vec![Complex::real(1.0), b, b.conj(), Complex::real(-1.0)],
        )
        .unwrap();
        let a = HermitianMatrix::new(m).unwrap();
        let e = jacobi_eigh(&a).unwrap();
        let expect = 2f64.sqrt();
        assert!((e.values[0] - expect).abs() < 1e-14);
        assert!((e.values[1] + expect).abs() < 1e-14);
        assert!(reconstruction_residual(&a, &e) < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = rng_from_seed(42);
        for n in [1, 2, 3, 6, 12, 32] {
            let a = random_hermitian(&mut rng, n, 10.0);
            let e = jacobi_eigh(&a).unwrap();
            let scale = a.as_matrix().max_abs().max(1.0);
            assert!(reconstruction_residual(&a, &e) <= 1e-10 * scale);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            assert!(e.vectors.as_matrix().unitarity_residual() < 1e-12);
        }
    }

    #[test]
    fn repeated_eigenvalues_and_ties() {
        let mut rng = rng_from_seed(7);
        let q = random_unitary(&mut rng, 5);
        let d = HermitianMatrix::from_real_diagonal(&[2.0, -1.0, 2.0, 0.5, -1.0]);
        let a = d.conjugate_by(&q).unwrap();
        let e = jacobi_eigh(&a).unwrap();
        let expect = [2.0, 2.0, 0.5, -1.0, -1.0];
        for (x, y) in e.values.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(reconstruction_residual(&a, &e) < 1e-12);

        let tie = HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 1.0]);
        let e = jacobi_eigh(&tie).unwrap();
        assert_eq!(e.vectors.as_matrix(), &ComplexMatrix::identity(3));
    }

    #[test]
    fn unitary_invariance_of_spectrum() {
        let mut rng = rng_from_seed(9);
        for _ in 0..10 {
            let a = random_hermitian(&mut rng, 6, 100.0);
            let q = random_unitary(&mut rng, 6);
            let b = a.conjugate_by(&q).unwrap();
            let ea = jacobi_eigh(&a).unwrap();
            let eb = jacobi_eigh(&b).unwrap();
            for (x, y) in ea.values.iter().zip(&eb.values) {
                assert!((x - y).abs() <= 1e-10 * 100.0);
            }
        }
    }

    #[test]
    fn sweep_cap_reports_residual() {
        let mut rng = rng_from_seed(1);
        let a = random_hermitian(&mut rng, 8, 1.0);
        match jacobi_eigh_with(&a, 1) {
            Err(Error::EigenNonConvergence { sweeps, residual }) => {
                assert_eq!(sweeps, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
