//! Dense complex linear algebra shared by the finite-dimensional modules.
//!
//! Everything here is small-matrix, dependency-free code: a cyclic Jacobi
//! eigensolver for Hermitian matrices, commutators, the trace pairing and a
//! pivoted solve used by the Cayley transform.

mod complex;
mod eigen;
mod matrix;

pub use complex::Complex;
pub use eigen::{jacobi_eigh, jacobi_eigh_with, Eigh, DEFAULT_MAX_SWEEPS};
pub use matrix::{ComplexMatrix, MatrixJson};

use crate::error::{dim_mismatch, Error, Result};

/// Tolerance used to accept a matrix as (skew-)Hermitian at construction.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Tolerance used to accept a matrix as unitary at construction.
pub const UNITARY_TOL: f64 = 1e-10;

macro_rules! structured_matrix {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(ComplexMatrix);

        impl $name {
            pub fn as_matrix(&self) -> &ComplexMatrix {
                &self.0
            }

            pub fn into_matrix(self) -> ComplexMatrix {
                self.0
            }

            pub fn n(&self) -> usize {
                self.0.rows()
            }
        }

        impl AsRef<ComplexMatrix> for $name {
            fn as_ref(&self) -> &ComplexMatrix {
                &self.0
            }
        }

        impl std::ops::Index<(usize, usize)> for $name {
            type Output = Complex;
            fn index(&self, idx: (usize, usize)) -> &Complex {
                &self.0[idx]
            }
        }
    };
}

structured_matrix!(
    /// `A = A^dagger`.
    HermitianMatrix
);
structured_matrix!(
    /// `A = -A^dagger`; the Lie algebra u(n).
    SkewHermitianMatrix
);
structured_matrix!(
    /// `Q^dagger Q = I`.
    UnitaryMatrix
);

fn require_square(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(dim_mismatch(
            format!("square matrix, {} rows", m.rows()),
            format!("{} columns", m.cols()),
        ));
    }
    Ok(())
}

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        require_square(&m)?;
        let residual = m.hermitian_residual();
        if residual > STRUCTURE_TOL {
            return Err(Error::StructureViolation {
                kind: "Hermitian",
                residual,
                tol: STRUCTURE_TOL,
            });
        }
        Ok(Self(m))
    }

    /// Replaces `m` by `(m + m^dagger) / 2`, which is Hermitian exactly.
    pub fn symmetrized(m: &ComplexMatrix) -> Result<Self> {
        require_square(m)?;
        let n = m.rows();
        Ok(Self(ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex::real(m[(i, i)].re)
            } else {
                (m[(i, j)] + m[(j, i)].conj()).scale(0.5)
            }
        })))
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        let d: Vec<Complex> = values.iter().map(|&v| Complex::real(v)).collect();
        Self(ComplexMatrix::diagonal(&d))
    }

    /// The (real) diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diag().iter().map(|z| z.re).collect()
    }

    /// `U A U^dagger`, re-symmetrized.
    pub fn conjugate_by(&self, u: &UnitaryMatrix) -> Result<Self> {
        let m = u
            .as_matrix()
            .matmul(&self.0)?
            .matmul(&u.as_matrix().adjoint())?;
        Self::symmetrized(&m)
    }
}

impl SkewHermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        require_square(&m)?;
        let residual = m.skew_hermitian_residual();
        if residual > STRUCTURE_TOL {
            return Err(Error::StructureViolation {
                kind: "skew-Hermitian",
                residual,
                tol: STRUCTURE_TOL,
            });
        }
        Ok(Self(m))
    }

    /// Replaces `m` by `(m - m^dagger) / 2`.
    pub fn skew_symmetrized(m: &ComplexMatrix) -> Result<Self> {
        require_square(m)?;
        let n = m.rows();
        Ok(Self(ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(0.0, m[(i, i)].im)
            } else {
                (m[(i, j)] - m[(j, i)].conj()).scale(0.5)
            }
        })))
    }

    /// `i * diag(values)`.
    pub fn from_imaginary_diagonal(values: &[f64]) -> Self {
        let d: Vec<Complex> = values.iter().map(|&v| Complex::new(0.0, v)).collect();
        Self(ComplexMatrix::diagonal(&d))
    }

    /// `i * H`.
    pub fn from_hermitian(h: &HermitianMatrix) -> Self {
        Self(h.as_matrix().scale(Complex::I))
    }

    /// `-i * L`, the Hermitian matrix whose spectrum is the spectrum of `L / i`.
    pub fn to_hermitian(&self) -> HermitianMatrix {
        let m = self.0.scale(Complex::new(0.0, -1.0));
        HermitianMatrix::symmetrized(&m).expect("square by construction")
    }

    /// Sorted (nonincreasing) eigenvalues of `L / i`.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(jacobi_eigh(&self.to_hermitian())?.values)
    }

    /// `U L U^dagger`, re-skew-symmetrized.
    pub fn conjugate_by(&self, u: &UnitaryMatrix) -> Result<Self> {
        let m = u
            .as_matrix()
            .matmul(&self.0)?
            .matmul(&u.as_matrix().adjoint())?;
        Self::skew_symmetrized(&m)
    }
}

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        require_square(&m)?;
        let residual = m.unitarity_residual();
        if residual > UNITARY_TOL {
            return Err(Error::StructureViolation {
                kind: "unitary",
                residual,
                tol: UNITARY_TOL,
            });
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, other: &UnitaryMatrix) -> Result<Self> {
        Ok(Self(self.0.matmul(&other.0)?))
    }

    /// Cayley transform `(I - A)^{-1} (I + A)` of a skew-Hermitian generator.
    pub fn cayley(generator: &SkewHermitianMatrix) -> Result<Self> {
        let n = generator.n();
        let id = ComplexMatrix::identity(n);
        let a = generator.as_matrix();
        let minus = id.try_sub(a)?;
        let plus = id.try_add(a)?;
        let q = minus.solve(&plus).map_err(|_| Error::Singular {
            context: "Cayley denominator",
        })?;
        if !q.is_finite() {
            return Err(Error::Singular {
                context: "Cayley denominator",
            });
        }
        Ok(Self(q))
    }

    /// `P_ij = |Q_ij|^2`.
    pub fn squared_moduli(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)].norm_sqr()).collect())
            .collect()
    }

    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self(m)
    }
}

/// `AB - BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(a)?;
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(dim_mismatch(
            format!("{}x{}", a.rows(), a.cols()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    a.matmul(b)?.try_sub(&b.matmul(a)?)
}

/// Commutator of two skew-Hermitian matrices, which is again skew-Hermitian.
pub fn skew_commutator(
    a: &SkewHermitianMatrix,
    b: &SkewHermitianMatrix,
) -> Result<SkewHermitianMatrix> {
    SkewHermitianMatrix::skew_symmetrized(&commutator(a.as_matrix(), b.as_matrix())?)
}

/// `Re Tr(AB)`, the Killing-form pairing.
pub fn trace_pairing(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.cols() != b.rows() || a.rows() != b.cols() {
        return Err(dim_mismatch(
            format!("{}x{}", a.cols(), a.rows()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    // Tr(AB) = sum_ij A_ij B_ji without forming the product.
    let mut s = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let (x, y) = (a[(i, j)], b[(j, i)]);
            s += x.re * y.re - x.im * y.im;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_skew_hermitian, random_unitary, rng_from_seed};

    #[test]
    fn commutator_basic_identities() {
        let mut rng = rng_from_seed(3);
        let a = random_skew_hermitian(&mut rng, 4);
        let b = random_skew_hermitian(&mut rng, 4);
        let aa = commutator(a.as_matrix(), a.as_matrix()).unwrap();
        assert!(aa.max_abs() < 1e-15);

        let d1 = ComplexMatrix::diagonal(&[Complex::new(1.0, 2.0), Complex::real(3.0)]);
        let d2 = ComplexMatrix::diagonal(&[Complex::real(-1.0), Complex::new(0.0, 4.0)]);
        assert_eq!(commutator(&d1, &d2).unwrap().max_abs(), 0.0);

        let ab = commutator(a.as_matrix(), b.as_matrix()).unwrap();
        assert!(ab.skew_hermitian_residual() <= 1e-12);
        let ba = commutator(b.as_matrix(), a.as_matrix()).unwrap();
        assert!((&ab + &ba).max_abs() < 1e-14);
    }

    #[test]
    fn commutator_rejects_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(
            commutator(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(trace_pairing(&a, &b).is_err());
    }

    #[test]
    fn trace_pairing_examples() {
        let id = ComplexMatrix::identity(3);
        assert_eq!(trace_pairing(&id, &id).unwrap(), 3.0);

        let lam = [1.5, -2.0, 0.25];
        let nd = [3.0, 1.0, -4.0];
        let l = SkewHermitianMatrix::from_imaginary_diagonal(&lam);
        let n = SkewHermitianMatrix::from_imaginary_diagonal(&nd);
        let expected = -lam.iter().zip(&nd).map(|(a, b)| a * b).sum::<f64>();
        assert_eq!(
            trace_pairing(l.as_matrix(), n.as_matrix()).unwrap(),
            expected
        );
    }

    #[test]
    fn trace_pairing_matches_naive_product_and_is_symmetric() {
        let mut rng = rng_from_seed(11);
        for n in 1..7 {
            let a = random_skew_hermitian(&mut rng, n);
            let b = random_skew_hermitian(&mut rng, n);
            // naive: full product then trace
            let mut naive = Complex::ZERO;
            for i in 0..n {
                for k in 0..n {
                    naive += a[(i, k)] * b[(k, i)];
                }
            }
            let t = trace_pairing(a.as_matrix(), b.as_matrix()).unwrap();
            assert!((t - naive.re).abs() <= 1e-13);
            assert!(naive.im.abs() <= 1e-13, "Tr(AB) real for skew pair");
            let u = trace_pairing(b.as_matrix(), a.as_matrix()).unwrap();
            assert!((t - u).abs() <= 1e-13);
        }
    }

    #[test]
    fn cayley_is_unitary() {
        let mut rng = rng_from_seed(5);
        let a = random_skew_hermitian(&mut rng, 5);
        let q = UnitaryMatrix::cayley(&a).unwrap();
        assert!(q.as_matrix().unitarity_residual() < 1e-12);
    }

    #[test]
    fn structured_constructors_validate() {
        let m = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(HermitianMatrix::new(m.clone()).is_err());
        assert!(SkewHermitianMatrix::new(m.clone()).is_err());
        assert!(UnitaryMatrix::new(m).is_err());
        let mut rng = rng_from_seed(1);
        let q = random_unitary(&mut rng, 4);
        assert!(UnitaryMatrix::new(q.into_matrix()).is_ok());
    }
}
