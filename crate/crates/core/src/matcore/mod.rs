//! Dense complex linear algebra and functional calculus.

mod eigen;
mod hermitian;
mod matrix;
mod svd;

pub use eigen::{herm_eig, matrix_function, SpectralDecomposition, JACOBI_MAX_SWEEPS, JACOBI_REL_TOL};
pub use hermitian::{imaginary_power, HermitianMatrix, PositiveDefiniteMatrix, PD_RELATIVE_FLOOR};
pub use matrix::ComplexMatrix;
pub use svd::{polar_decompose, singular_values, svd, Polar, Svd, SINGULAR_ZERO_REL};

use crate::error::Result;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 64;

/// `dx + xd`.
pub fn anticommutator(d: &ComplexMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    d.check_same_dim(x)?;
    Ok(&(d * x) + &(x * d))
}

/// `dx − xd`.
pub fn commutator(d: &ComplexMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    d.check_same_dim(x)?;
    Ok(&(d * x) - &(x * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn identity_anticommutes_to_double() {
        let x = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let i = ComplexMatrix::identity(2);
        assert_eq!(anticommutator(&i, &x).unwrap(), x.scale(2.0));
        assert_eq!(commutator(&i, &x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn diagonal_against_matrix_unit() {
        let d = ComplexMatrix::from_real_diagonal(&[2.0, 5.0]);
        let e12 = ComplexMatrix::unit(2, 0, 1);
        assert_eq!(anticommutator(&d, &e12).unwrap(), e12.scale(7.0));
    }

    #[test]
    fn commuting_diagonals() {
        let d = ComplexMatrix::from_real_diagonal(&[2.0, 5.0, 1.0]);
        let x = ComplexMatrix::from_real_diagonal(&[-1.0, 0.5, 3.0]);
        assert_eq!(commutator(&d, &x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert_eq!(
            anticommutator(&a, &b),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        );
    }
}
