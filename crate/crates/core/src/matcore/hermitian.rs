use num_complex::Complex64;

use crate::error::{Error, Result};

use super::eigen::{herm_eig, SpectralDecomposition};
use super::ComplexMatrix;

/// Smallest admissible `λ_min / λ_max` for a positive definite matrix.
pub const PD_RELATIVE_FLOOR: f64 = 1e-12;

/// A matrix satisfying `max |A_ij − conj(A_ji)| ≤ 1e-12 (1 + max |A_ij|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        m.check_finite()?;
        let asymmetry = m.hermitian_asymmetry();
        if asymmetry > 1e-12 * (1.0 + m.max_abs()) {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diagonal(values))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn eig(&self) -> Result<SpectralDecomposition> {
        herm_eig(self)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

impl From<HermitianMatrix> for ComplexMatrix {
    fn from(h: HermitianMatrix) -> Self {
        h.0
    }
}

impl AsRef<ComplexMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// A Hermitian matrix with strictly positive spectrum, carrying its
/// spectral decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveDefiniteMatrix {
    matrix: HermitianMatrix,
    spectral: SpectralDecomposition,
}

impl PositiveDefiniteMatrix {
    /// Validates positivity through the eigensolver: `λ_min > 1e-12 λ_max`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let matrix = HermitianMatrix::new(m)?;
        let spectral = herm_eig(&matrix)?;
        check_spectrum(spectral.eigenvalues())?;
        Ok(Self { matrix, spectral })
    }

    pub fn from_hermitian(h: HermitianMatrix) -> Result<Self> {
        let spectral = herm_eig(&h)?;
        check_spectrum(spectral.eigenvalues())?;
        Ok(Self {
            matrix: h,
            spectral,
        })
    }

    /// Builds `U diag(λ) U*` from a spectrum and a unitary without running
    /// the eigensolver.
    pub fn from_spectrum(eigenvalues: Vec<f64>, unitary: ComplexMatrix) -> Result<Self> {
        let spectral = SpectralDecomposition::from_parts(eigenvalues, unitary)?;
        check_spectrum(spectral.eigenvalues())?;
        let matrix = HermitianMatrix::new_unchecked(spectral.reconstruct().hermitian_part());
        Ok(Self { matrix, spectral })
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        Self::from_spectrum(values.to_vec(), ComplexMatrix::identity(values.len()))
    }

    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        Self::from_diagonal(&vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        self.matrix.as_matrix()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectral.eigenvalues()
    }

    /// `d^t` through the stored decomposition.
    pub fn power(&self, t: f64) -> HermitianMatrix {
        // Positive spectrum: every real power is finite.
        self.spectral
            .apply(|x| x.powf(t))
            .expect("power of a positive definite matrix")
    }

    /// `d^t` as a positive definite matrix sharing the eigenvectors of `d`.
    pub fn powered(&self, t: f64) -> Result<Self> {
        let values = self.eigenvalues().iter().map(|x| x.powf(t)).collect();
        Self::from_spectrum(values, self.spectral.vectors().clone())
    }

    /// `λ d` for `λ > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if factor <= 0.0 || !factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let values = self.eigenvalues().iter().map(|x| x * factor).collect();
        Self::from_spectrum(values, self.spectral.vectors().clone())
    }
}

fn check_spectrum(values: &[f64]) -> Result<()> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) || !(min > PD_RELATIVE_FLOOR * max) {
        return Err(Error::NotPositiveDefinite { min, max });
    }
    Ok(())
}

/// The unitary `d^{ih} = V diag(exp(i h log λ)) V*`.
pub fn imaginary_power(d: &PositiveDefiniteMatrix, h: f64) -> ComplexMatrix {
    d.spectral()
        .apply_complex(|lambda| Complex64::from_polar(1.0, h * lambda.ln()))
        .expect("imaginary power of a positive definite matrix")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_singular_and_indefinite() {
        let singular = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            PositiveDefiniteMatrix::new(singular),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let indefinite = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(PositiveDefiniteMatrix::new(indefinite).is_err());
        assert!(PositiveDefiniteMatrix::from_diagonal(&[1.0, 1e-13]).is_err());
    }

    #[test]
    fn imaginary_power_of_scalar() {
        let lambda: f64 = 3.5;
        let h = 0.7;
        let d = PositiveDefiniteMatrix::scalar(2, lambda).unwrap();
        let u = imaginary_power(&d, h);
        let expected = Complex64::from_polar(1.0, h * lambda.ln());
        assert!((u[(0, 0)] - expected).norm() < 1e-15);
        assert!(u[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn imaginary_power_at_zero_is_identity() {
        let d = PositiveDefiniteMatrix::from_diagonal(&[0.5, 2.0, 7.0]).unwrap();
        let u = imaginary_power(&d, 0.0);
        assert!(u.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    }
}
