//! Seeded random matrix ensembles.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::matcore::{ComplexMatrix, HermitianMatrix, PositiveDefiniteMatrix};

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| complex_normal(rng))
}

/// `(G + G*)/2` for a complex Gaussian `G`.
pub fn hermitian_gaussian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    HermitianMatrix::new(gaussian_complex(rng, dim).hermitian_part())
        .expect("hermitian part is Hermitian")
}

/// Rank-one `u v*` with Gaussian vectors.
pub fn rank_one<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let u: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
    let v: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
    ComplexMatrix::from_fn(dim, |i, j| u[i] * v[j].conj())
}

/// Orthonormalizes the columns of `m` in place order with two passes of
/// modified Gram–Schmidt. The triangular factor has a positive diagonal, so
/// a Gaussian input yields a Haar-distributed unitary.
pub fn orthonormalize(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| m.column(j)).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj: Complex64 = done[k]
                    .iter()
                    .zip(rest[0].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (x, y) in rest[0].iter_mut().zip(done[k].iter()) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    let mut out = ComplexMatrix::zeros(n);
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    orthonormalize(&gaussian_complex(rng, dim))
}

/// Spectrum drawn log-uniformly from `[lo, hi]`.
pub fn log_uniform_spectrum<R: Rng + ?Sized>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..dim).map(|_| rng.random_range(a..=b).exp()).collect()
}

/// `U diag(λ) U*` with Haar `U` and log-uniform `λ ∈ [lo, hi]`.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> PositiveDefiniteMatrix {
    let values = log_uniform_spectrum(rng, dim, lo, hi);
    let u = haar_unitary(rng, dim);
    PositiveDefiniteMatrix::from_spectrum(values, u).expect("valid random positive matrix")
}
