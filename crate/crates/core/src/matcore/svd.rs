//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations,
//! and the polar decomposition derived from it.
//!
//! Column orthogonalization acts on `A` directly rather than on `A*A`, so
//! small singular values keep their relative accuracy. Quasi-norms with
//! exponents below one are sensitive to exactly those values.

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::{ComplexMatrix, HermitianMatrix};

const SVD_MAX_SWEEPS: usize = 100;

/// Singular values below this fraction of the largest are treated as zero.
pub const SINGULAR_ZERO_REL: f64 = 1e-14;

/// `A = W diag(σ) V*`, singular values descending.
///
/// Columns of `left` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub right: ComplexMatrix,
}

impl Svd {
    pub fn dim(&self) -> usize {
        self.singular_values.len()
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `SINGULAR_ZERO_REL · σ_max`.
    pub fn numerical_rank(&self) -> usize {
        let cutoff = SINGULAR_ZERO_REL * self.max_singular_value();
        self.singular_values
            .iter()
            .filter(|&&s| s > cutoff && s > 0.0)
            .count()
    }

    /// `Σ_i w_i f(σ_i) v_i*` over the numerical support.
    pub fn map_support(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let rank = self.numerical_rank();
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..rank {
            let fk = f(self.singular_values[k]);
            for i in 0..n {
                let wik = self.left[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += wik * self.right[(j, k)].conj();
                }
            }
        }
        out
    }

    /// `V diag(f(σ)) V*`, a function of `|A| = (A*A)^{1/2}`.
    pub fn map_modulus(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let cutoff = SINGULAR_ZERO_REL * self.max_singular_value();
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let s = self.singular_values[k];
            let fk = if s > cutoff && s > 0.0 { f(s) } else { 0.0 };
            if fk == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.right[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += vik * self.right[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::new_unchecked(out.hermitian_part())
    }
}

/// One-sided Jacobi SVD.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let n = a.dim();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    let tol = (f64::EPSILON * n as f64).max(1e-15);
    let mut converged = n <= 1;
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for j in 0..n {
            for k in j + 1..n {
                rotated |= orthogonalize_pair(&mut cols, &mut vcols, j, k, tol);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "one-sided jacobi svd",
            iterations: SVD_MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let mut left = ComplexMatrix::zeros(n);
    let mut right = ComplexMatrix::zeros(n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        if s > 0.0 {
            let w: Vec<Complex64> = cols[src].iter().map(|z| z / s).collect();
            left.set_column(dst, &w);
        }
        right.set_column(dst, &vcols[src]);
    }
    Ok(Svd {
        left,
        singular_values,
        right,
    })
}

fn norm(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize_pair(
    cols: &mut [Vec<Complex64>],
    vcols: &mut [Vec<Complex64>],
    j: usize,
    k: usize,
    tol: f64,
) -> bool {
    let alpha: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
    let beta: f64 = cols[k].iter().map(|z| z.norm_sqr()).sum();
    if alpha == 0.0 || beta == 0.0 {
        return false;
    }
    let g: Complex64 = cols[j]
        .iter()
        .zip(&cols[k])
        .map(|(a, b)| a.conj() * b)
        .sum();
    let r = g.norm();
    if r <= tol * (alpha * beta).sqrt() {
        return false;
    }
    let phase_conj = (g / r).conj();
    let zeta = (beta - alpha) / (2.0 * r);
    let t = if zeta == 0.0 {
        1.0
    } else {
        zeta.signum() / (zeta.abs() + zeta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = c * t;

    for (vecs, (jj, kk)) in [(cols, (j, k)), (vcols, (j, k))] {
        let (lo, hi) = vecs.split_at_mut(kk);
        let cj = &mut lo[jj];
        let ck = &mut hi[0];
        for (x, y) in cj.iter_mut().zip(ck.iter_mut()) {
            let yk = *y * phase_conj;
            let xj = *x;
            *x = xj * c - yk * s;
            *y = xj * s + yk * c;
        }
    }
    true
}

/// Descending singular values of `A`.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.singular_values)
}

/// Polar decomposition `A = U P` with `P = (A*A)^{1/2}` and `U` a partial
/// isometry whose initial space is the range of `P`.
#[derive(Debug, Clone)]
pub struct Polar {
    pub isometry: ComplexMatrix,
    pub modulus: HermitianMatrix,
}

pub fn polar_decompose(a: &ComplexMatrix) -> Result<Polar> {
    let s = svd(a)?;
    Ok(Polar {
        isometry: s.map_support(|_| 1.0),
        modulus: s.map_modulus(|x| x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_with_sign() {
        let a = ComplexMatrix::from_real_diagonal(&[3.0, -4.0]);
        assert_eq!(singular_values(&a).unwrap(), vec![4.0, 3.0]);
    }

    #[test]
    fn rank_one_nilpotent() {
        let a = ComplexMatrix::from_real_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let s = svd(&a).unwrap();
        assert_eq!(s.singular_values, vec![2.0, 0.0]);
        let p = polar_decompose(&a).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[0.0, 2.0]);
        assert!(p.modulus.as_matrix().max_abs_diff(&expected) <= 1e-12);
        assert!((&p.isometry * p.modulus.as_matrix()).max_abs_diff(&a) <= 1e-12);
        // U*U is the projection onto range(P) = span(e_2).
        let uu = &p.isometry.adjoint() * &p.isometry;
        assert!(uu.max_abs_diff(&ComplexMatrix::unit(2, 1, 1)) <= 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_polar_parts() {
        let p = polar_decompose(&ComplexMatrix::zeros(3)).unwrap();
        assert_eq!(p.isometry.max_abs(), 0.0);
        assert_eq!(p.modulus.as_matrix().max_abs(), 0.0);
    }

    #[test]
    fn polar_of_positive_is_trivial() {
        let a = ComplexMatrix::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let p = polar_decompose(&a).unwrap();
        assert!(p.isometry.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
        assert!(p.modulus.as_matrix().max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn polar_of_unitary() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = ComplexMatrix::from_rows(&[
            vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            vec![Complex64::new(0.0, h), Complex64::new(h, 0.0)],
        ])
        .unwrap();
        let p = polar_decompose(&u).unwrap();
        assert!(p.modulus.as_matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
        assert!(p.isometry.max_abs_diff(&u) < 1e-14);
    }
}
