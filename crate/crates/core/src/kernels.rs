//! Divided-difference (Loewner) kernels and the Schur multipliers they
//! define on spectral projections.
//!
//! A kernel `k` acts on `δ` through `Σ_ij k(d_i, d_j) P_i δ P_j`. All maps
//! here are evaluated in the eigenbasis: `δ` is conjugated into the basis of
//! eigenvectors, multiplied entrywise by the kernel lifted to eigenvector
//! indices, and conjugated back. This equals the projection sum exactly,
//! since each `P_i` is the sum of rank-one projectors of its group.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{
    herm_eig, ComplexMatrix, HermitianMatrix, PositiveDefiniteMatrix, SpectralDecomposition,
};

/// Default relative tolerance for merging eigenvalues into one group.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-9;
/// Relative gap below which a divided difference uses the derivative.
pub const DEGENERATE_GAP_REL: f64 = 1e-8;

/// Eigenvalues clustered into groups with their spectral projections.
#[derive(Debug, Clone)]
pub struct EigenGrouping {
    representatives: Vec<f64>,
    members: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    vectors: ComplexMatrix,
}

impl EigenGrouping {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn representatives(&self) -> &[f64] {
        &self.representatives
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// Group index of each eigenvector column.
    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    /// Orthogonal projection onto the eigenspace of group `i`.
    pub fn projection(&self, i: usize) -> HermitianMatrix {
        let n = self.dim();
        let mut p = ComplexMatrix::zeros(n);
        for &col in &self.members[i] {
            for a in 0..n {
                let va = self.vectors[(a, col)];
                for b in 0..n {
                    p[(a, b)] += va * self.vectors[(b, col)].conj();
                }
            }
        }
        HermitianMatrix::new(p.hermitian_part()).expect("projection is Hermitian")
    }
}

/// Merges eigenvalues whose relative distance is at most `tol`.
///
/// Clustering is single-linkage along the sorted spectrum; each group is
/// represented by the mean of its members.
pub fn group_spectrum(s: &SpectralDecomposition, tol: f64) -> Result<EigenGrouping> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "clustering tolerance must be positive, got {tol}"
        )));
    }
    let values = s.eigenvalues();
    let floor = 1e-14 * s.max_abs_eigenvalue();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![0; values.len()];
    for (k, &v) in values.iter().enumerate() {
        let merge = match members.last() {
            Some(group) => {
                let prev = values[*group.last().unwrap()];
                (v - prev).abs() <= (tol * v.abs().max(prev.abs())).max(floor)
            }
            None => false,
        };
        if merge {
            members.last_mut().unwrap().push(k);
        } else {
            members.push(vec![k]);
        }
        group_of[k] = members.len() - 1;
    }
    let representatives = members
        .iter()
        .map(|g| g.iter().map(|&k| values[k]).sum::<f64>() / g.len() as f64)
        .collect();
    Ok(EigenGrouping {
        representatives,
        members,
        group_of,
        vectors: s.vectors().clone(),
    })
}

/// Exponents of the weighted Loewner multiplier `T^d_{β,γ}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TMapParams {
    pub beta: f64,
    pub gamma: f64,
}

impl TMapParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be nonnegative, got {beta}"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(Self { beta, gamma })
    }

    /// `α = 2β + γ − 1`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.beta + self.gamma - 1.0
    }
}

/// `(a^e − b^e)/(a − b)` for `a, b > 0`, with the derivative `e·m^{e−1}` at
/// the midpoint `m` once the relative gap drops to `DEGENERATE_GAP_REL`.
///
/// Off the diagonal the quotient is evaluated as
/// `a^{e−1}·expm1(e L)/expm1(L)` with `L = ln(b/a)` so that it keeps full
/// relative accuracy for close arguments.
pub fn power_divided_difference(a: f64, b: f64, exponent: f64) -> f64 {
    let gap = (a - b).abs();
    if gap <= DEGENERATE_GAP_REL * a.max(b) {
        let m = 0.5 * (a + b);
        return exponent * m.powf(exponent - 1.0);
    }
    let log_ratio = ((b - a) / a).ln_1p();
    a.powf(exponent - 1.0) * (exponent * log_ratio).exp_m1() / log_ratio.exp_m1()
}

/// Real symmetric kernel matrix indexed by spectral groups.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, |i, j| Complex64::new(self.get(i, j), 0.0))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
        Some(bad) => Err(Error::Domain(format!(
            "kernel values must be positive, got {bad}"
        ))),
        None => Ok(()),
    }
}

/// `k_ij = (d_i^γ − d_j^γ)/(d_i − d_j) · d_i^β d_j^β`.
pub fn divided_difference_kernel(values: &[f64], params: TMapParams) -> Result<KernelMatrix> {
    check_positive(values)?;
    let weights: Vec<f64> = values.iter().map(|v| v.powf(params.beta)).collect();
    Ok(KernelMatrix::from_fn(values.len(), |i, j| {
        power_divided_difference(values[i], values[j], params.gamma) * weights[i] * weights[j]
    }))
}

/// Smallest eigenvalue of the unweighted Loewner matrix of `t ↦ t^γ`.
pub fn loewner_min_eig(values: &[f64], gamma: f64) -> Result<f64> {
    let k = divided_difference_kernel(values, TMapParams::new(0.0, gamma)?)?;
    let h = HermitianMatrix::new(k.to_complex())?;
    Ok(herm_eig(&h)?.eigenvalues()[0])
}

/// `Σ_ij k(i, j) P_i δ Q_j` where `P` groups the left spectrum and `Q` the
/// right one.
fn apply_grouped_kernel(
    left: &EigenGrouping,
    right: &EigenGrouping,
    kernel: impl Fn(usize, usize) -> f64,
    delta: &ComplexMatrix,
) -> ComplexMatrix {
    let vl = left.vectors();
    let vr = right.vectors();
    let mut inner = &(&vl.adjoint() * delta) * vr;
    let n = delta.dim();
    for a in 0..n {
        let ga = left.group_of[a];
        for b in 0..n {
            inner[(a, b)] *= kernel(ga, right.group_of[b]);
        }
    }
    &(vl * &inner) * &vr.adjoint()
}

/// The weighted Loewner Schur multiplier `T^d_{β,γ}(δ)`.
pub fn t_map(
    d: &PositiveDefiniteMatrix,
    params: TMapParams,
    delta: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    t_map_with_tol(d, params, delta, DEFAULT_CLUSTER_TOL)
}

pub fn t_map_with_tol(
    d: &PositiveDefiniteMatrix,
    params: TMapParams,
    delta: &ComplexMatrix,
    tol: f64,
) -> Result<ComplexMatrix> {
    d.as_matrix().check_same_dim(delta)?;
    let groups = group_spectrum(d.spectral(), tol)?;
    let k = divided_difference_kernel(groups.representatives(), params)?;
    Ok(apply_grouped_kernel(&groups, &groups, |i, j| k.get(i, j), delta))
}

/// `S(y) = v⁻¹ T^{d^γ}_{(1−v)/2, v}(y)` with `v = 1/(2γ)`: a unital, trace
/// preserving, completely positive map for `γ ∈ (1/2, 1)`.
pub fn unital_cp_map(
    d: &PositiveDefiniteMatrix,
    gamma: f64,
    y: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    if !(gamma > 0.5 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "unital map needs gamma in (1/2, 1), got {gamma}"
        )));
    }
    let v = 1.0 / (2.0 * gamma);
    let dg = d.powered(gamma)?;
    let out = t_map(&dg, TMapParams::new((1.0 - v) / 2.0, v)?, y.as_matrix())?;
    HermitianMatrix::new(out.scale(1.0 / v).hermitian_part())
}

/// `Σ_ij k(x_i, y_j) P_i δ Q_j` for the spectral projections `P_i` of `x`
/// and `Q_j` of `y`. The caller's kernel must already encode its
/// diagonal-limit convention.
pub fn mixed_kernel_map(
    x: &PositiveDefiniteMatrix,
    y: &PositiveDefiniteMatrix,
    kernel: impl Fn(f64, f64) -> f64,
    delta: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    x.as_matrix().check_same_dim(y.as_matrix())?;
    x.as_matrix().check_same_dim(delta)?;
    let gx = group_spectrum(x.spectral(), DEFAULT_CLUSTER_TOL)?;
    let gy = group_spectrum(y.spectral(), DEFAULT_CLUSTER_TOL)?;
    let mut k_values = Vec::with_capacity(gx.len() * gy.len());
    for i in 0..gx.len() {
        for j in 0..gy.len() {
            let v = kernel(gx.representatives()[i], gy.representatives()[j]);
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "kernel is not finite at ({:e}, {:e})",
                    gx.representatives()[i],
                    gy.representatives()[j]
                )));
            }
            k_values.push(v);
        }
    }
    let cols = gy.len();
    Ok(apply_grouped_kernel(
        &gx,
        &gy,
        |i, j| k_values[i * cols + j],
        delta,
    ))
}

/// `(d_i^{1+α} + d_j^{1+α}) / ((d_i + d_j)(d_i^α + d_j^α))`.
pub fn rx_kernel(values: &[f64], alpha: f64) -> Result<KernelMatrix> {
    check_positive(values)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    // Scale-free: normalize by the largest value to keep powers in range.
    let top = values.iter().copied().fold(0.0, f64::max);
    let v: Vec<f64> = values.iter().map(|x| x / top).collect();
    Ok(KernelMatrix::from_fn(v.len(), |i, j| {
        let (a, b) = (v[i], v[j]);
        (a.powf(1.0 + alpha) + b.powf(1.0 + alpha)) / ((a + b) * (a.powf(alpha) + b.powf(alpha)))
    }))
}

/// Entrywise product of a kernel with a matrix of the same size.
pub fn schur_multiply(kernel: &KernelMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if kernel.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: kernel.dim(),
            right: x.dim(),
        });
    }
    Ok(ComplexMatrix::from_fn(x.dim(), |i, j| x[(i, j)] * kernel.get(i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_complex, random_positive};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_decomp(values: &[f64]) -> SpectralDecomposition {
        SpectralDecomposition::from_parts(values.to_vec(), ComplexMatrix::identity(values.len()))
            .unwrap()
    }

    #[test]
    fn grouping_examples() {
        let g = group_spectrum(&diag_decomp(&[1.0, 1.0, 2.0]), 1e-9).unwrap();
        assert_eq!(g.ranks(), vec![2, 1]);
        let g = group_spectrum(&diag_decomp(&[0.5, 1.0, 3.0, 7.0]), 1e-9).unwrap();
        assert_eq!(g.ranks(), vec![1, 1, 1, 1]);
        let g = group_spectrum(&diag_decomp(&[1.0, 1.0 + 1e-12, 5.0]), 1e-9).unwrap();
        assert_eq!(g.ranks(), vec![2, 1]);
        assert!(group_spectrum(&diag_decomp(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn projections_resolve_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = PositiveDefiniteMatrix::from_spectrum(
            vec![1.0, 1.0, 2.0, 2.0 + 1e-11, 9.0],
            crate::random::haar_unitary(&mut rng, 5),
        )
        .unwrap();
        let g = group_spectrum(d.spectral(), 1e-9).unwrap();
        assert_eq!(g.ranks(), vec![2, 2, 1]);
        let mut sum = ComplexMatrix::zeros(5);
        let projections: Vec<_> = (0..g.len()).map(|i| g.projection(i)).collect();
        for (i, p) in projections.iter().enumerate() {
            let pm = p.as_matrix();
            assert!((pm * pm).max_abs_diff(pm) < 1e-12);
            for (j, q) in projections.iter().enumerate() {
                if i != j {
                    assert!((pm * q.as_matrix()).max_abs() < 1e-12);
                }
            }
            sum += pm;
        }
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(5)) < 1e-12);
        let reps = g.representatives();
        assert!(reps.windows(2).all(|w| w[1] - w[0] > 1e-9 * w[1]));
    }

    #[test]
    fn kernel_examples() {
        let k = divided_difference_kernel(&[3.0], TMapParams::new(0.0, 0.4).unwrap()).unwrap();
        assert!((k.get(0, 0) - 0.4 * 3f64.powf(-0.6)).abs() < 1e-15);

        let k = divided_difference_kernel(&[1.0, 2.0], TMapParams::new(0.0, 0.5).unwrap()).unwrap();
        let s2 = 2f64.sqrt();
        assert!((k.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((k.get(0, 1) - (s2 - 1.0)).abs() < 1e-15);
        assert!((k.get(1, 0) - (s2 - 1.0)).abs() < 1e-15);
        assert!((k.get(1, 1) - 1.0 / (2.0 * s2)).abs() < 1e-15);

        let k = divided_difference_kernel(&[1.0, 2.0], TMapParams::new(0.0, 1.0).unwrap()).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((k.get(i, j) - 1.0).abs() < 1e-15);
        }
        assert!(divided_difference_kernel(&[1.0, 0.0], TMapParams::new(0.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn divided_difference_near_diagonal_is_continuous() {
        for gamma in [0.3, 0.5, 0.9, 1.7] {
            let a: f64 = 2.5;
            // Midpoint derivative is exact up to O(h²) ~ 1e-16 at these gaps.
            for h in [0.99e-8, 1.01e-8, 1e-6] {
                let b = a * (1.0 + h);
                let mid = 0.5 * (a + b);
                let got = power_divided_difference(a, b, gamma);
                let expected = gamma * mid.powf(gamma - 1.0);
                assert!((got - expected).abs() <= 1e-12 * expected.abs(), "gamma={gamma} h={h}");
            }
            let far = power_divided_difference(a, 7.0, gamma);
            let naive = (a.powf(gamma) - 7f64.powf(gamma)) / (a - 7.0);
            assert!((far - naive).abs() <= 1e-14 * naive.abs());
        }
    }

    #[test]
    fn loewner_two_point_closed_form() {
        // [[a, b], [b, c]] with a = 1/2, b = √2 − 1, c = 1/(2√2).
        let s2 = 2f64.sqrt();
        let (a, b, c) = (0.5, s2 - 1.0, 1.0 / (2.0 * s2));
        let expected = 0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let got = loewner_min_eig(&[1.0, 2.0], 0.5).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!(got > 0.0061 && got < 0.0062);
        assert!(loewner_min_eig(&[1.0, 2.0], 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn t_map_on_diagonal_input() {
        let values = [0.5, 2.0, 3.0];
        let d = PositiveDefiniteMatrix::from_diagonal(&values).unwrap();
        let delta = ComplexMatrix::from_real_diagonal(&[1.0, -2.0, 0.5]);
        let params = TMapParams::new(0.3, 0.6).unwrap();
        let out = t_map(&d, params, &delta).unwrap();
        for (i, &di) in values.iter().enumerate() {
            let expected = params.gamma * di.powf(params.gamma - 1.0 + 2.0 * params.beta) * delta[(i, i)].re;
            assert!((out[(i, i)].re - expected).abs() < 1e-14);
        }
        assert!((&out - &ComplexMatrix::from_real_diagonal(&[out[(0, 0)].re, out[(1, 1)].re, out[(2, 2)].re])).max_abs() < 1e-14);

        let one = PositiveDefiniteMatrix::from_diagonal(&[4.0]).unwrap();
        let x = ComplexMatrix::from_rows(&[vec![Complex64::new(1.0, 2.0)]]).unwrap();
        let out = t_map(&one, params, &x).unwrap();
        let factor = params.gamma * 4f64.powf(params.gamma - 1.0 + 2.0 * params.beta);
        assert!((out[(0, 0)] - x[(0, 0)] * factor).norm() < 1e-14);
    }

    #[test]
    fn t_map_matches_projection_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = random_positive(&mut rng, 5, 1e-2, 1e2);
        let delta = gaussian_complex(&mut rng, 5);
        let params = TMapParams::new(0.2, 0.7).unwrap();
        let fast = t_map(&d, params, &delta).unwrap();

        let g = group_spectrum(d.spectral(), DEFAULT_CLUSTER_TOL).unwrap();
        let reps = g.representatives();
        let mut slow = ComplexMatrix::zeros(5);
        for i in 0..g.len() {
            for j in 0..g.len() {
                let k = (reps[i].powf(0.7) - reps[j].powf(0.7)) / (reps[i] - reps[j]);
                let k = if i == j { 0.7 * reps[i].powf(-0.3) } else { k };
                let k = k * (reps[i] * reps[j]).powf(0.2);
                let term = &(g.projection(i).as_matrix() * &delta) * g.projection(j).as_matrix();
                slow += &term.scale(k);
            }
        }
        assert!(fast.max_abs_diff(&slow) <= 1e-12 * (1.0 + slow.max_abs()));
    }

    #[test]
    fn unital_map_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = random_positive(&mut rng, 4, 1e-2, 1e2);
        let s_one = unital_cp_map(&d, 0.8, &HermitianMatrix::identity(4)).unwrap();
        assert!(s_one.as_matrix().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);

        let scalar = PositiveDefiniteMatrix::scalar(3, 2.5).unwrap();
        let y = crate::random::hermitian_gaussian(&mut rng, 3);
        let sy = unital_cp_map(&scalar, 0.7, &y).unwrap();
        assert!(sy.as_matrix().max_abs_diff(y.as_matrix()) < 1e-13);

        assert!(unital_cp_map(&d, 0.5, &HermitianMatrix::identity(4)).is_err());
        assert!(unital_cp_map(&d, 1.0, &HermitianMatrix::identity(4)).is_err());
    }

    #[test]
    fn mixed_kernel_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = PositiveDefiniteMatrix::from_diagonal(&[1.0, 3.0]).unwrap();
        let delta = gaussian_complex(&mut rng, 2);
        let same = mixed_kernel_map(&x, &x, |_, _| 1.0, &delta).unwrap();
        assert!(same.max_abs_diff(&delta) < 1e-15);

        let a = random_positive(&mut rng, 4, 0.1, 10.0);
        let b = random_positive(&mut rng, 4, 0.1, 10.0);
        let delta = gaussian_complex(&mut rng, 4);
        let left = mixed_kernel_map(&a, &b, |s, _| s, &delta).unwrap();
        assert!(left.max_abs_diff(&(a.as_matrix() * &delta)) < 1e-10 * (1.0 + left.max_abs()));

        let err = mixed_kernel_map(&a, &b, |_, _| f64::NAN, &delta).unwrap_err();
        assert!(matches!(err, Error::Domain(msg) if msg.contains("not finite")));
    }

    #[test]
    fn rx_kernel_examples() {
        let k = rx_kernel(&[2.0, 2.0], 0.7).unwrap();
        assert!((k.get(0, 1) - 0.5).abs() < 1e-15);
        let k = rx_kernel(&[1.0, 2.0], 1.0).unwrap();
        assert!((k.get(0, 1) - 5.0 / 9.0).abs() < 1e-15);
        assert!(rx_kernel(&[1.0, -1.0], 1.0).is_err());
    }
}
