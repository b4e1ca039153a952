//! Hermitian eigendecomposition by cyclic Jacobi rotations and the
//! functional calculus built on it.

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::{ComplexMatrix, HermitianMatrix};

/// Sweep budget for the cyclic Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius mass, relative to `‖A‖_F`.
pub const JACOBI_REL_TOL: f64 = 1e-13;

/// `A = V diag(λ) V*` with ascending eigenvalues and unitary `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    vectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from explicit spectral data, sorting the
    /// eigenvalues ascending and permuting the columns of `vectors` to match.
    pub fn from_parts(eigenvalues: Vec<f64>, vectors: ComplexMatrix) -> Result<Self> {
        if eigenvalues.len() != vectors.dim() {
            return Err(Error::DimensionMismatch {
                left: eigenvalues.len(),
                right: vectors.dim(),
            });
        }
        if let Some(bad) = eigenvalues.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: bad, col: bad });
        }
        let residual = vectors.unitarity_residual();
        if residual > 1e-10 {
            return Err(Error::NotUnitary { residual });
        }
        Ok(sorted(eigenvalues, vectors))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `V diag(λ) V*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let diag: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.from_eigenbasis(&ComplexMatrix::from_diagonal(&diag))
    }

    /// `V* X V`: expresses `X` in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &(&self.vectors.adjoint() * x) * &self.vectors
    }

    /// `V Y V*`: maps an eigenbasis representation back.
    pub fn from_eigenbasis(&self, y: &ComplexMatrix) -> ComplexMatrix {
        &(&self.vectors * y) * &self.vectors.adjoint()
    }

    /// Real functional calculus `f(A) = V diag(f(λ)) V*`.
    ///
    /// Fails with a domain error when `f` is not finite at some eigenvalue.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        let mut values = Vec::with_capacity(self.dim());
        for &lambda in &self.eigenvalues {
            let v = f(lambda);
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "function is undefined at eigenvalue {lambda:e}"
                )));
            }
            values.push(Complex64::new(v, 0.0));
        }
        let m = self.from_eigenbasis(&ComplexMatrix::from_diagonal(&values));
        Ok(HermitianMatrix::new_unchecked(m.hermitian_part()))
    }

    /// Complex-valued functional calculus; the result is normal but in
    /// general not Hermitian.
    pub fn apply_complex(&self, f: impl Fn(f64) -> Complex64) -> Result<ComplexMatrix> {
        let mut values = Vec::with_capacity(self.dim());
        for &lambda in &self.eigenvalues {
            let v = f(lambda);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Domain(format!(
                    "function is undefined at eigenvalue {lambda:e}"
                )));
            }
            values.push(v);
        }
        Ok(self.from_eigenbasis(&ComplexMatrix::from_diagonal(&values)))
    }
}

fn sorted(eigenvalues: Vec<f64>, vectors: ComplexMatrix) -> SpectralDecomposition {
    let n = eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    let values = order.iter().map(|&k| eigenvalues[k]).collect();
    let vecs = ComplexMatrix::from_fn(n, |i, j| vectors[(i, order[j])]);
    SpectralDecomposition {
        eigenvalues: values,
        vectors: vecs,
    }
}

/// Diagonalizes a Hermitian matrix with cyclic two-sided Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary and then applies a real plane rotation, so the iteration stays in
/// complex arithmetic without forming a real embedding.
pub fn herm_eig(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let n = a.dim();
    let mut m = a.as_matrix().hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    let scale = m.frobenius();
    if scale == 0.0 {
        return Ok(SpectralDecomposition {
            eigenvalues: vec![0.0; n],
            vectors: v,
        });
    }
    let tol = (JACOBI_REL_TOL * scale).max(1e-300);

    let mut converged = n == 1;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m) <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > tol {
        return Err(Error::NoConvergence {
            routine: "jacobi eigensolver",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let eigenvalues = (0..n).map(|i| m[(i, i)].re).collect();
    Ok(sorted(eigenvalues, v))
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let g = m[(p, q)];
    let r = g.norm();
    if r == 0.0 {
        return;
    }
    let n = m.dim();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let phase = g / r;
    let phase_conj = phase.conj();

    let zeta = (aqq - app) / (2.0 * r);
    let t = if zeta == 0.0 {
        1.0
    } else {
        zeta.signum() / (zeta.abs() + zeta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;

    // A <- A G with G = [[c, s], [-s conj(e), c conj(e)]] on (p, q).
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - akq * phase_conj * s;
        m[(k, q)] = akp * s + akq * phase_conj * c;
    }
    // A <- G* A.
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - aqk * phase * s;
        m[(q, k)] = apk * s + aqk * phase * c;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(app - t * r, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * r, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * phase_conj * s;
        v[(k, q)] = vkp * s + vkq * phase_conj * c;
    }
}

/// `f(A)` for Hermitian `A`; convenience wrapper over [`herm_eig`].
pub fn matrix_function(
    s: &SpectralDecomposition,
    f: impl Fn(f64) -> f64,
) -> Result<HermitianMatrix> {
    s.apply(f)
}
