//! Boundary analysis on the unit strip `0 ≤ Re z ≤ 1`: Poisson densities,
//! boundary measures, dilation and doubling, and the convexity defect of
//! the analytic family `F(z) = d^{(1+α)z} x d^{(1+α)(1−z)}`.
//!
//! Points of the boundary line `∂_k = {Re z = k}` are written `k + it` and
//! identified with their real coordinate `t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{singular_values, ComplexMatrix, PositiveDefiniteMatrix};
use crate::schatten::schatten_norm_of;

/// Unbounded boundary lines are truncated to `|t| ≤ TRUNCATION`.
pub const TRUNCATION: f64 = 40.0;
/// Absolute quadrature tolerance per interval.
pub const QUAD_TOL: f64 = 1e-10;
const MAX_BISECTIONS: u32 = 60;

fn check_gamma(gamma0: f64) -> Result<()> {
    if !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "interior point must lie in (0, 1), got {gamma0}"
        )));
    }
    Ok(())
}

fn check_side(k: u8) -> Result<()> {
    if k > 1 {
        return Err(Error::InvalidParameter(format!("boundary index must be 0 or 1, got {k}")));
    }
    Ok(())
}

/// Density of harmonic measure seen from `γ₀` at the boundary point `k + it`.
pub fn poisson_density(gamma0: f64, k: u8, t: f64) -> Result<f64> {
    check_gamma(gamma0)?;
    check_side(k)?;
    Ok(density_unchecked(gamma0, k, t))
}

fn density_unchecked(gamma0: f64, k: u8, t: f64) -> f64 {
    let sign = if k == 0 { 1.0 } else { -1.0 };
    let c = (PI * t).cosh();
    if !c.is_finite() {
        return 0.0;
    }
    (gamma0 * PI).sin() / (2.0 * (c - sign * (gamma0 * PI).cos()))
}

/// Density `1/cosh(πt)` of the reference measure on either boundary line.
pub fn reference_density(t: f64) -> f64 {
    1.0 / (PI * t).cosh()
}

/// Finite unions of closed intervals on `∂₀` and `∂₁`, kept sorted and
/// disjoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySet {
    intervals0: Vec<(f64, f64)>,
    intervals1: Vec<(f64, f64)>,
}

fn normalize(mut intervals: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>> {
    for &(a, b) in &intervals {
        if !a.is_finite() || !b.is_finite() || a > b {
            return Err(Error::InvalidParameter(format!(
                "invalid boundary interval [{a}, {b}]"
            )));
        }
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (a, b) in intervals {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    Ok(merged)
}

impl BoundarySet {
    pub fn new(intervals0: Vec<(f64, f64)>, intervals1: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self {
            intervals0: normalize(intervals0)?,
            intervals1: normalize(intervals1)?,
        })
    }

    /// The whole (truncated) line `∂_k`.
    pub fn side(k: u8) -> Result<Self> {
        check_side(k)?;
        let all = vec![(-TRUNCATION, TRUNCATION)];
        Ok(if k == 0 {
            Self::new(all, vec![])?
        } else {
            Self::new(vec![], all)?
        })
    }

    /// Both (truncated) boundary lines.
    pub fn full() -> Self {
        let all = vec![(-TRUNCATION, TRUNCATION)];
        Self {
            intervals0: all.clone(),
            intervals1: all,
        }
    }

    pub fn intervals(&self, k: u8) -> &[(f64, f64)] {
        if k == 0 {
            &self.intervals0
        } else {
            &self.intervals1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals0.is_empty() && self.intervals1.is_empty()
    }
}

/// `2.A`: every interval `[a, b]` becomes `[2a, 2b]`.
pub fn dilate(a: &BoundarySet) -> BoundarySet {
    let double = |v: &[(f64, f64)]| v.iter().map(|&(l, r)| (2.0 * l, 2.0 * r)).collect();
    BoundarySet::new(double(&a.intervals0), double(&a.intervals1))
        .expect("dilation of a valid set is valid")
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its distance from the embedded 7-point
/// Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * GAUSS7_WEIGHTS[3];
    for i in 0..7 {
        let pair = f(c - h * GK_NODES[i]) + f(c + h * GK_NODES[i]);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
        let (value, err) = gk15(f, a, b);
        if err <= tol || err <= 1e-15 * value.abs() {
            return Ok(value);
        }
        if depth >= MAX_BISECTIONS {
            return Err(Error::NoConvergence {
                routine: "adaptive quadrature",
                iterations: depth as usize,
            });
        }
        let m = 0.5 * (a + b);
        Ok(recurse(f, a, m, 0.5 * tol, depth + 1)? + recurse(f, m, b, 0.5 * tol, depth + 1)?)
    }
    if a >= b {
        return Ok(0.0);
    }
    recurse(f, a, b, tol, 0)
}

fn measure_with(a: &BoundarySet, density: impl Fn(u8, f64) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..2u8 {
        for &(l, r) in a.intervals(k) {
            let (l, r) = (l.max(-TRUNCATION), r.min(TRUNCATION));
            total += integrate(&|t| density(k, t), l, r, QUAD_TOL)?;
        }
    }
    Ok(total)
}

/// Harmonic measure `P^γ(A)` from the interior point `γ₀`.
pub fn boundary_measure(gamma0: f64, a: &BoundarySet) -> Result<f64> {
    check_gamma(gamma0)?;
    measure_with(a, |k, t| density_unchecked(gamma0, k, t))
}

/// `μ(A)` for the reference density `1/cosh(πt)` on both lines.
pub fn reference_measure(a: &BoundarySet) -> Result<f64> {
    measure_with(a, |_, t| reference_density(t))
}

/// The doubling constant `4/(1 − |cos γ₀π|)`.
pub fn doubling_bound(gamma0: f64) -> f64 {
    4.0 / (1.0 - (gamma0 * PI).cos().abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Doubling {
    pub ratio: f64,
    pub bound: f64,
}

/// `P^γ(2.A)/P^γ(A)` together with the doubling constant.
pub fn doubling_ratio(gamma0: f64, a: &BoundarySet) -> Result<Doubling> {
    let base = boundary_measure(gamma0, a)?;
    if !(base > 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "set is nearly null (measure {base:e})"
        )));
    }
    Ok(Doubling {
        ratio: boundary_measure(gamma0, &dilate(a))? / base,
        bound: doubling_bound(gamma0),
    })
}

/// `F(z) = d^{(1+α)z} x d^{(1+α)(1−z)}`.
#[derive(Debug, Clone)]
pub struct AnalyticFamily {
    d: PositiveDefiniteMatrix,
    x: ComplexMatrix,
    alpha: f64,
}

impl AnalyticFamily {
    pub fn new(d: PositiveDefiniteMatrix, x: ComplexMatrix, alpha: f64) -> Result<Self> {
        d.as_matrix().check_same_dim(&x)?;
        x.check_finite()?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self { d, x, alpha })
    }

    pub fn d(&self) -> &PositiveDefiniteMatrix {
        &self.d
    }

    pub fn x(&self) -> &ComplexMatrix {
        &self.x
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn complex_power(&self, w: Complex64) -> Result<ComplexMatrix> {
        self.d.spectral().apply_complex(|l| (w * l.ln()).exp())
    }
}

/// Evaluates `F(z)` for `0 ≤ Re z ≤ 1`.
pub fn family_eval(f: &AnalyticFamily, z: Complex64) -> Result<ComplexMatrix> {
    if !(z.re >= 0.0 && z.re <= 1.0) || !z.im.is_finite() {
        return Err(Error::Domain(format!("point {z} lies outside the closed strip")));
    }
    let e = 1.0 + f.alpha;
    let left = f.complex_power(z * e)?;
    let right = f.complex_power((Complex64::new(1.0, 0.0) - z) * e)?;
    Ok(&(&left * &f.x) * &right)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryProfile {
    pub t: Vec<f64>,
    /// `‖F(it)‖_q`.
    pub norms0: Vec<f64>,
    /// `‖F(1+it)‖_q`.
    pub norms1: Vec<f64>,
}

/// Schatten `q`-norms of `F` along both boundary lines at the given heights.
pub fn boundary_norm_profile(f: &AnalyticFamily, q: f64, grid: &[f64]) -> Result<BoundaryProfile> {
    let q = crate::schatten::Exponent::finite(q)?;
    let side = |k: f64| -> Result<Vec<f64>> {
        grid.par_iter()
            .map(|&t| {
                let sv = singular_values(&family_eval(f, Complex64::new(k, t))?)?;
                schatten_norm_of(&sv, q)
            })
            .collect()
    };
    Ok(BoundaryProfile {
        t: grid.to_vec(),
        norms0: side(0.0)?,
        norms1: side(1.0)?,
    })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = p1;
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed boundary grid for the `L_q^γ` integrals: composite Gauss–Legendre,
/// fine panels near the origin and coarse ones out to the truncation.
#[derive(Debug, Clone)]
pub struct DefectGrid {
    /// `(k, t, weight)` with the Poisson density folded into the weight.
    points: Vec<(u8, f64, f64)>,
}

pub const DEFECT_FINE_HALF_WIDTH: f64 = 16.0;
pub const DEFECT_FINE_PANEL: f64 = 0.125;
pub const DEFECT_COARSE_PANEL: f64 = 2.0;
pub const DEFECT_NODES: usize = 8;

impl DefectGrid {
    pub fn new(gamma0: f64) -> Result<Self> {
        check_gamma(gamma0)?;
        let (nodes, weights) = gauss_legendre(DEFECT_NODES);
        let mut edges = Vec::new();
        let mut t = -TRUNCATION;
        while t < -DEFECT_FINE_HALF_WIDTH - 1e-9 {
            edges.push(t);
            t += DEFECT_COARSE_PANEL;
        }
        let fine = (2.0 * DEFECT_FINE_HALF_WIDTH / DEFECT_FINE_PANEL).round() as usize;
        for i in 0..fine {
            edges.push(-DEFECT_FINE_HALF_WIDTH + i as f64 * DEFECT_FINE_PANEL);
        }
        let mut t = DEFECT_FINE_HALF_WIDTH;
        while t < TRUNCATION + 1e-9 {
            edges.push(t);
            t += DEFECT_COARSE_PANEL;
        }
        let mut points = Vec::new();
        for k in 0..2u8 {
            for pair in edges.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                for (x, w) in nodes.iter().zip(&weights) {
                    let t = c + h * x;
                    points.push((k, t, h * w * density_unchecked(gamma0, k, t)));
                }
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.2).sum()
    }
}

/// Singular values of `F` and of `F − F(γ₀)` over a [`DefectGrid`], from
/// which the convexity defect is read off for any `q`.
#[derive(Debug, Clone)]
pub struct DefectSamples {
    weights: Vec<f64>,
    family: Vec<Vec<f64>>,
    deviation: Vec<Vec<f64>>,
    center: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectTerms {
    /// `‖F(γ₀)‖_q`.
    pub center: f64,
    /// `‖F‖_{L_q^γ}`.
    pub family: f64,
    /// `‖F − F(γ₀)‖_{L_q^γ}`.
    pub deviation: f64,
}

impl DefectTerms {
    /// `(‖F‖² − ‖F(γ₀)‖²)/‖F − F(γ₀)‖²`, or `None` when the deviation is
    /// negligible.
    pub fn defect(&self) -> Option<f64> {
        if self.deviation <= 1e-12 * self.family.max(f64::MIN_POSITIVE) {
            return None;
        }
        Some((self.family.powi(2) - self.center.powi(2)) / self.deviation.powi(2))
    }
}

impl DefectSamples {
    pub fn new(f: &AnalyticFamily, gamma0: f64) -> Result<Self> {
        let grid = DefectGrid::new(gamma0)?;
        let center_matrix = family_eval(f, Complex64::new(gamma0, 0.0))?;
        let center = singular_values(&center_matrix)?;
        let sampled: Vec<(Vec<f64>, Vec<f64>)> = grid
            .points
            .par_iter()
            .map(|&(k, t, _)| {
                let value = family_eval(f, Complex64::new(k as f64, t))?;
                let dev = &value - &center_matrix;
                Ok((singular_values(&value)?, singular_values(&dev)?))
            })
            .collect::<Result<_>>()?;
        let (family, deviation) = sampled.into_iter().unzip();
        Ok(Self {
            weights: grid.points.iter().map(|p| p.2).collect(),
            family,
            deviation,
            center,
        })
    }

    pub fn terms(&self, q: f64) -> Result<DefectTerms> {
        let qe = crate::schatten::Exponent::finite(q)?;
        let lq = |samples: &[Vec<f64>]| -> Result<f64> {
            let mut acc = 0.0;
            for (sv, w) in samples.iter().zip(&self.weights) {
                acc += w * schatten_norm_of(sv, qe)?.powf(q);
            }
            Ok(acc.powf(1.0 / q))
        };
        Ok(DefectTerms {
            center: schatten_norm_of(&self.center, qe)?,
            family: lq(&self.family)?,
            deviation: lq(&self.deviation)?,
        })
    }
}

/// Upper-bound sample for the convexity modulus `δ_q`; `None` for a
/// (numerically) constant family.
pub fn convexity_defect(f: &AnalyticFamily, gamma0: f64, q: f64) -> Result<Option<f64>> {
    if !(q > 0.0 && q <= 2.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 2], got {q}")));
    }
    Ok(DefectSamples::new(f, gamma0)?.terms(q)?.defect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{hermitian_gaussian, random_positive};
    use crate::schatten::schatten_norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Closed-form `P^γ(∂_k ∩ [l, r])`.
    fn exact_measure(gamma0: f64, k: u8, l: f64, r: f64) -> f64 {
        let a = if k == 1 { gamma0 * PI } else { PI - gamma0 * PI };
        let g = |t: f64| (1.0 / PI) * ((a / 2.0).tan() * (PI * t / 2.0).tanh()).atan();
        g(r) - g(l)
    }

    #[test]
    fn density_examples() {
        assert!((poisson_density(0.5, 0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((poisson_density(0.5, 1, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let v = poisson_density(0.25, 1, 1.0).unwrap();
        let expected = (PI / 4.0).sin() / (2.0 * (PI.cosh() + (PI / 4.0).cos()));
        assert!((v - expected).abs() < 1e-16);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let d = poisson_density(0.3, 0, i as f64 * 0.5).unwrap();
            assert!(d < prev);
            prev = d;
        }
        assert!(poisson_density(0.0, 0, 0.0).is_err());
        assert!(poisson_density(0.5, 2, 0.0).is_err());
    }

    #[test]
    fn measure_matches_closed_form() {
        for &g in &[0.1, 0.37, 0.5, 0.9] {
            for &(l, r) in &[(-1.0, 2.0), (0.0, 0.3), (-7.5, -3.0)] {
                for k in 0..2u8 {
                    let set = if k == 0 {
                        BoundarySet::new(vec![(l, r)], vec![]).unwrap()
                    } else {
                        BoundarySet::new(vec![], vec![(l, r)]).unwrap()
                    };
                    let got = boundary_measure(g, &set).unwrap();
                    assert!((got - exact_measure(g, k, l, r)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn side_masses() {
        for &g in &[0.1, 0.5, 0.9] {
            let one = boundary_measure(g, &BoundarySet::side(1).unwrap()).unwrap();
            assert!((one - g).abs() < 1e-9);
            let all = boundary_measure(g, &BoundarySet::full()).unwrap();
            assert!((all - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_at_half() {
        let a0 = BoundarySet::new(vec![(-2.0, 2.0)], vec![]).unwrap();
        let a1 = BoundarySet::new(vec![], vec![(-2.0, 2.0)]).unwrap();
        let m0 = boundary_measure(0.5, &a0).unwrap();
        let m1 = boundary_measure(0.5, &a1).unwrap();
        assert!((m0 - m1).abs() < 1e-12);
    }

    #[test]
    fn interval_normalization() {
        let s = BoundarySet::new(vec![(3.0, 4.0), (0.0, 1.0), (0.5, 2.0)], vec![]).unwrap();
        assert_eq!(s.intervals(0), &[(0.0, 2.0), (3.0, 4.0)]);
        assert!(BoundarySet::new(vec![(1.0, 0.0)], vec![]).is_err());
        assert!(BoundarySet::new(vec![(0.0, f64::INFINITY)], vec![]).is_err());
    }

    #[test]
    fn dilation_examples() {
        let s = BoundarySet::new(vec![(1.0, 2.0)], vec![(-1.0, 1.0)]).unwrap();
        let d = dilate(&s);
        assert_eq!(d.intervals(0), &[(2.0, 4.0)]);
        assert_eq!(d.intervals(1), &[(-2.0, 2.0)]);
        let s = BoundarySet::new(vec![(0.0, 1.0), (3.0, 4.0)], vec![]).unwrap();
        assert_eq!(dilate(&s).intervals(0), &[(0.0, 2.0), (6.0, 8.0)]);
    }

    #[test]
    fn doubling_full_boundary() {
        let d = doubling_ratio(0.3, &BoundarySet::full()).unwrap();
        assert!((d.ratio - 1.0).abs() < 1e-12);
        assert!(d.ratio <= d.bound);
        assert_eq!(d.bound, 4.0 / (1.0 - (0.3 * PI).cos().abs()));
        let null = BoundarySet::new(vec![(39.0, 39.5)], vec![]).unwrap();
        assert!(doubling_ratio(0.5, &null).is_err());
    }

    #[test]
    fn reference_measure_closed_form() {
        let s = BoundarySet::new(vec![(-0.5, 1.5)], vec![]).unwrap();
        let g = |t: f64| (2.0 / PI) * (PI * t / 2.0).tanh().atan();
        let got = reference_measure(&s).unwrap();
        assert!((got - (g(1.5) - g(-0.5))).abs() < 1e-10);
        assert!(reference_measure(&dilate(&s)).unwrap() <= 2.0 * got + 1e-9);
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((m14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn defect_grid_mass() {
        for &g in &[0.2, 0.5, 0.8] {
            assert!((DefectGrid::new(g).unwrap().total_weight() - 1.0).abs() < 1e-12);
        }
    }

    fn family(seed: u64, n: usize, alpha: f64) -> AnalyticFamily {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_positive(&mut rng, n, 0.1, 10.0);
        let x = hermitian_gaussian(&mut rng, n).into_matrix();
        AnalyticFamily::new(d, x, alpha).unwrap()
    }

    #[test]
    fn family_endpoints_and_center() {
        let f = family(2, 4, 0.8);
        let e = 1.0 + f.alpha();
        let de = f.d().power(e).into_matrix();
        let f0 = family_eval(&f, Complex64::new(0.0, 0.0)).unwrap();
        assert!(f0.max_abs_diff(&(f.x() * &de)) < 1e-10 * de.max_abs());
        let f1 = family_eval(&f, Complex64::new(1.0, 0.0)).unwrap();
        assert!(f1.max_abs_diff(&(&de * f.x())) < 1e-10 * de.max_abs());
        let g = f.alpha() / e;
        let fg = family_eval(&f, Complex64::new(g, 0.0)).unwrap();
        let expected = &(f.d().power(f.alpha()).as_matrix() * f.x()) * f.d().as_matrix();
        assert!(fg.max_abs_diff(&expected) < 1e-9 * (1.0 + expected.max_abs()));
        assert!(family_eval(&f, Complex64::new(1.1, 0.0)).is_err());
    }

    #[test]
    fn hermitian_profile_is_constant() {
        let f = family(3, 5, 1.0);
        let q = 0.7;
        let grid: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let profile = boundary_norm_profile(&f, q, &grid).unwrap();
        let target = schatten_norm(&(f.x() * f.d().power(2.0).as_matrix()), q).unwrap();
        for (a, b) in profile.norms0.iter().zip(&profile.norms1) {
            assert!((a - target).abs() < 1e-9 * target);
            assert!((b - target).abs() < 1e-9 * target);
        }
    }

    #[test]
    fn constant_family_is_skipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = PositiveDefiniteMatrix::scalar(3, 1.0).unwrap();
        let x = hermitian_gaussian(&mut rng, 3).into_matrix();
        let f = AnalyticFamily::new(d, x, 1.0).unwrap();
        assert_eq!(convexity_defect(&f, 0.5, 1.0).unwrap(), None);
    }

    #[test]
    fn near_commuting_family_has_positive_defect() {
        let d = PositiveDefiniteMatrix::from_diagonal(&[0.5, 1.0, 2.0]).unwrap();
        let mut x = ComplexMatrix::from_real_diagonal(&[1.0, -0.5, 2.0]);
        x[(0, 2)] = Complex64::new(0.05, 0.0);
        x[(2, 0)] = Complex64::new(0.05, 0.0);
        let f = AnalyticFamily::new(d, x, 1.0).unwrap();
        for q in [0.5, 1.0, 2.0] {
            let v = convexity_defect(&f, 0.5, q).unwrap().unwrap();
            assert!(v > 0.0 && v.is_finite(), "q={q}: {v}");
        }
    }
}
