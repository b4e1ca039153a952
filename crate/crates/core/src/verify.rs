//! Randomized invariant suite behind the `verify` experiment. Every
//! property reports the worst residual it measured next to its tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::{draw_spectrum, SpectrumLaw};
use crate::kernels::{loewner_min_eig, rx_kernel, schur_multiply, t_map, unital_cp_map, TMapParams};
use crate::matcore::{
    herm_eig, imaginary_power, polar_decompose, ComplexMatrix, HermitianMatrix,
    PositiveDefiniteMatrix,
};
use crate::mazur::{decomposition_residual, main_ratio, mazur_map, powers_diff_ratio};
use crate::random::{
    gaussian_complex, haar_unitary, hermitian_gaussian, log_uniform_spectrum, random_positive,
};
use crate::schatten::{schatten_norm, Exponent, ExponentConfig};
use crate::strip::{
    boundary_measure, boundary_norm_profile, convexity_defect, dilate, doubling_ratio,
    reference_measure, AnalyticFamily, BoundarySet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyModule {
    Matcore,
    Schatten,
    Kernels,
    Mazur,
    Strip,
}

impl VerifyModule {
    pub const ALL: [VerifyModule; 5] = [
        VerifyModule::Matcore,
        VerifyModule::Schatten,
        VerifyModule::Kernels,
        VerifyModule::Mazur,
        VerifyModule::Strip,
    ];
}

/// How a property's residual is compared to its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// Pass iff `residual ≤ tolerance`.
    AtMost,
    /// Pass iff `residual ≥ tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub module: VerifyModule,
    pub property: &'static str,
    pub trials: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_trials() -> usize {
    20
}

fn default_max_dim() -> usize {
    6
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { trials: default_trials(), max_dim: default_max_dim() }
    }
}

struct Probe {
    module: VerifyModule,
    property: &'static str,
    tolerance: f64,
    comparison: Comparison,
    worst: f64,
    trials: usize,
}

impl Probe {
    fn at_most(module: VerifyModule, property: &'static str, tolerance: f64) -> Self {
        Self { module, property, tolerance, comparison: Comparison::AtMost, worst: 0.0, trials: 0 }
    }

    fn at_least(module: VerifyModule, property: &'static str, tolerance: f64) -> Self {
        Self {
            module,
            property,
            tolerance,
            comparison: Comparison::AtLeast,
            worst: f64::INFINITY,
            trials: 0,
        }
    }

    fn record(&mut self, v: f64) {
        self.trials += 1;
        self.worst = match self.comparison {
            Comparison::AtMost if v.is_nan() => f64::INFINITY,
            Comparison::AtLeast if v.is_nan() => f64::NEG_INFINITY,
            Comparison::AtMost => self.worst.max(v),
            Comparison::AtLeast => self.worst.min(v),
        };
    }

    fn finish(self) -> PropertyResult {
        let passed = match self.comparison {
            Comparison::AtMost => self.worst <= self.tolerance,
            Comparison::AtLeast => self.worst >= self.tolerance,
        };
        PropertyResult {
            module: self.module,
            property: self.property,
            trials: self.trials,
            residual: self.worst,
            tolerance: self.tolerance,
            comparison: self.comparison,
            passed,
        }
    }
}

fn rel_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(a.max_abs()).max(f64::MIN_POSITIVE)
}

fn dim<R: Rng>(rng: &mut R, max_dim: usize) -> usize {
    rng.random_range(1..=max_dim.max(1))
}

/// Runs the properties of the selected modules with one seeded stream per
/// module.
pub fn run_suite(
    modules: &[VerifyModule],
    settings: &VerifySettings,
    seed: u64,
) -> Result<Vec<PropertyResult>> {
    let mut out = Vec::new();
    for (i, &m) in VerifyModule::ALL.iter().enumerate() {
        if !modules.contains(&m) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let results = match m {
            VerifyModule::Matcore => matcore_properties(&mut rng, settings)?,
            VerifyModule::Schatten => schatten_properties(&mut rng, settings)?,
            VerifyModule::Kernels => kernel_properties(&mut rng, settings)?,
            VerifyModule::Mazur => mazur_properties(&mut rng, settings)?,
            VerifyModule::Strip => strip_properties(&mut rng, settings)?,
        };
        out.extend(results);
    }
    Ok(out)
}

fn matcore_properties(rng: &mut ChaCha8Rng, s: &VerifySettings) -> Result<Vec<PropertyResult>> {
    let m = VerifyModule::Matcore;
    let mut recon = Probe::at_most(m, "eigen-reconstruction", 1e-12);
    let mut unitary = Probe::at_most(m, "eigenvector-unitarity", 1e-12);
    let mut polar = Probe::at_most(m, "polar-reconstruction", 1e-12);
    let mut powers = Probe::at_most(m, "power-composition", 1e-10);
    let mut imag = Probe::at_most(m, "imaginary-power-unitary", 1e-10);
    for _ in 0..s.trials {
        let n = dim(rng, s.max_dim);
        let h = hermitian_gaussian(rng, n);
        let e = herm_eig(&h)?;
        recon.record(rel_diff(&e.reconstruct(), h.as_matrix()));
        unitary.record(e.vectors().unitarity_residual());

        let a = gaussian_complex(rng, n);
        let p = polar_decompose(&a)?;
        polar.record(rel_diff(&(&p.isometry * p.modulus.as_matrix()), &a));

        let d = random_positive(rng, n, 0.1, 10.0);
        let prod = d.power(0.3).into_matrix();
        powers.record(rel_diff(&(&prod * d.power(0.7).as_matrix()), d.as_matrix()));
        imag.record(imaginary_power(&d, 1.7).unitarity_residual());
    }
    Ok(vec![recon.finish(), unitary.finish(), polar.finish(), powers.finish(), imag.finish()])
}

fn schatten_properties(rng: &mut ChaCha8Rng, s: &VerifySettings) -> Result<Vec<PropertyResult>> {
    let m = VerifyModule::Schatten;
    let mut invariance = Probe::at_most(m, "unitary-invariance", 1e-10);
    let mut holder = Probe::at_most(m, "holder-inequality", 1e-12);
    let mut quasi = Probe::at_most(m, "p-triangle-inequality", 1e-12);
    let mut monotone = Probe::at_most(m, "monotone-in-p", 1e-12);
    let pairs = [(0.5, 1.0), (1.0, 2.0), (2.0, 0.5), (1.5, 3.0)];
    for t in 0..s.trials {
        let n = dim(rng, s.max_dim);
        let a = gaussian_complex(rng, n);
        let b = gaussian_complex(rng, n);
        let u = haar_unitary(rng, n);
        let v = haar_unitary(rng, n);
        for p in [0.5, 1.0, 3.0] {
            let base = schatten_norm(&a, p)?;
            let moved = schatten_norm(&(&(&u * &a) * &v), p)?;
            invariance.record((moved - base).abs() / base);
        }
        let (p, q) = pairs[t % pairs.len()];
        let r = 1.0 / (1.0 / p + 1.0 / q);
        let lhs = schatten_norm(&(&a * &b), r)?;
        holder.record(lhs / (schatten_norm(&a, p)? * schatten_norm(&b, q)?) - 1.0);
        let p = 0.5;
        let sum = schatten_norm(&(&a + &b), p)?.powf(p);
        quasi.record(sum / (schatten_norm(&a, p)?.powf(p) + schatten_norm(&b, p)?.powf(p)) - 1.0);
        let small = schatten_norm(&a, 0.7)?;
        let large = schatten_norm(&a, 2.5)?;
        monotone.record(large / small - 1.0);
    }
    Ok(vec![invariance.finish(), holder.finish(), quasi.finish(), monotone.finish()])
}

/// `T^{d^γ}_{(1−v)/2, v} ∘ T^d_{β,γ}` against `T^d_{β+(2γ−1)/4, 1/2}`.
pub fn composition_residual(
    d: &PositiveDefiniteMatrix,
    beta: f64,
    gamma: f64,
    delta: &ComplexMatrix,
) -> Result<f64> {
    let v = 1.0 / (2.0 * gamma);
    let inner = t_map(d, TMapParams::new(beta, gamma)?, delta)?;
    let lhs = t_map(&d.powered(gamma)?, TMapParams::new((1.0 - v) / 2.0, v)?, &inner)?;
    let rhs = t_map(d, TMapParams::new(beta + (2.0 * gamma - 1.0) / 4.0, 0.5)?, delta)?;
    Ok(rel_diff(&lhs, &rhs))
}

/// Smallest eigenvalue of `S(y)^q − S(y^q)` for positive `y`.
pub fn hansen_pedersen_gap(
    d: &PositiveDefiniteMatrix,
    gamma: f64,
    y: &PositiveDefiniteMatrix,
    q: f64,
) -> Result<f64> {
    let sy = unital_cp_map(d, gamma, y.as_hermitian())?;
    let sy_q = herm_eig(&sy)?.apply(|l| l.max(0.0).powf(q))?;
    let s_yq = unital_cp_map(d, gamma, &y.power(q))?;
    let gap = HermitianMatrix::new((sy_q.as_matrix() - s_yq.as_matrix()).hermitian_part())?;
    let scale = sy_q.as_matrix().max_abs().max(f64::MIN_POSITIVE);
    Ok(herm_eig(&gap)?.eigenvalues()[0] / scale)
}

fn kernel_properties(rng: &mut ChaCha8Rng, s: &VerifySettings) -> Result<Vec<PropertyResult>> {
    let m = VerifyModule::Kernels;
    let mut loewner = Probe::at_least(m, "loewner-positivity", -1e-10);
    let mut compose = Probe::at_most(m, "composition-identity", 1e-9);
    let mut unital = Probe::at_most(m, "unitality", 1e-9);
    let mut trace = Probe::at_most(m, "trace-preservation", 1e-9);
    let mut hp = Probe::at_least(m, "hansen-pedersen", -1e-8);
    let mut rx = Probe::at_most(m, "rx-bound", 2.5 * (1.0 + 1e-8));
    for t in 0..s.trials {
        let n = dim(rng, s.max_dim);
        let law = if t % 2 == 0 { SpectrumLaw::LogUniform } else { SpectrumLaw::ClusteredPairs };
        let values = draw_spectrum(rng, law, n);
        let gamma_l = 0.1 * (1 + t % 10) as f64;
        loewner.record(loewner_min_eig(&values, gamma_l)?);

        let d = PositiveDefiniteMatrix::from_spectrum(values.clone(), haar_unitary(rng, n))?;
        let delta = gaussian_complex(rng, n);
        let gamma = rng.random_range(0.55..0.95);
        let beta = rng.random_range(0.0..1.0);
        compose.record(composition_residual(&d, beta, gamma, &delta)?);

        let s_one = unital_cp_map(&d, gamma, &HermitianMatrix::identity(n))?;
        unital.record(s_one.as_matrix().max_abs_diff(&ComplexMatrix::identity(n)));
        let y = hermitian_gaussian(rng, n);
        let sy = unital_cp_map(&d, gamma, &y)?;
        trace.record((sy.trace() - y.trace()).abs() / y.as_matrix().frobenius().max(f64::MIN_POSITIVE));

        let ypos = random_positive(rng, n, 1e-2, 1e2);
        for q in [0.3, 0.5, 0.8] {
            hp.record(hansen_pedersen_gap(&d, gamma, &ypos, q)?);
        }

        let alpha = [0.5, 1.0, 3.0][t % 3];
        let x = gaussian_complex(rng, n);
        let k = rx_kernel(&values, alpha)?;
        rx.record(
            schatten_norm(&schur_multiply(&k, &x)?, Exponent::Infinite)?
                / schatten_norm(&x, Exponent::Infinite)?,
        );
    }
    Ok(vec![
        loewner.finish(),
        compose.finish(),
        unital.finish(),
        trace.finish(),
        hp.finish(),
        rx.finish(),
    ])
}

fn mazur_properties(rng: &mut ChaCha8Rng, s: &VerifySettings) -> Result<Vec<PropertyResult>> {
    let m = VerifyModule::Mazur;
    let mut norm = Probe::at_most(m, "norm-preservation", 1e-9);
    let mut compose = Probe::at_most(m, "map-composition", 1e-8);
    let mut decomp = Probe::at_most(m, "decomposition-residual", 1e-9);
    let mut z_paths = Probe::at_most(m, "decomposition-z-agreement", 1e-9);
    let mut homog = Probe::at_most(m, "main-ratio-homogeneity", 1e-9);
    let mut ceiling = Probe::at_most(m, "diagonal-eq2-ceiling", 0.0);
    let cfg = ExponentConfig::new(1.0, 4.0 / 3.0, Exponent::Infinite)?;
    for t in 0..s.trials {
        let n = dim(rng, s.max_dim);
        let f = gaussian_complex(rng, n);
        let (p, q, r) = (2.0, 0.75, 0.5);
        let mf = mazur_map(&f, p, q)?;
        let lhs = schatten_norm(&mf, q)?.powf(q);
        let rhs = schatten_norm(&f, p)?.powf(p);
        norm.record((lhs - rhs).abs() / rhs);
        compose.record(rel_diff(&mazur_map(&mf, q, r)?, &mazur_map(&f, p, r)?));

        let x = random_positive(rng, n, 1e-2, 1e2);
        let y = random_positive(rng, n, 1e-2, 1e2);
        let tt = [0.1, 0.3, 0.45][t % 3];
        let check = decomposition_residual(&x, &y, tt)?;
        decomp.record(check.relative_residual());
        z_paths.record(check.relative_z_agreement());

        let d = random_positive(rng, n, 1e-2, 1e2);
        let xm = gaussian_complex(rng, n);
        if let (Some(a), Some(b)) = (
            main_ratio(&d, &xm, &cfg)?.value(),
            main_ratio(&d.scaled(7.5)?, &xm.scale(0.2), &cfg)?.value(),
        ) {
            homog.record((a - b).abs() / a);
        }

        let (p, q) = (1.0, 2.0 / 3.0);
        let xs = PositiveDefiniteMatrix::from_diagonal(&log_uniform_spectrum(rng, n, 1e-3, 1e3))?;
        let ys = PositiveDefiniteMatrix::from_diagonal(&log_uniform_spectrum(rng, n, 1e-3, 1e3))?;
        if let Some(v) = powers_diff_ratio(&xs, &ys, p, q)?.value() {
            ceiling.record(v - (p / q + 1e-9));
        }
    }
    Ok(vec![
        norm.finish(),
        compose.finish(),
        decomp.finish(),
        z_paths.finish(),
        homog.finish(),
        ceiling.finish(),
    ])
}

/// Random union of up to four intervals on each boundary line.
pub fn random_boundary_set<R: Rng + ?Sized>(rng: &mut R) -> Result<BoundarySet> {
    let side = |rng: &mut R| -> Vec<(f64, f64)> {
        let count = rng.random_range(0..=4);
        (0..count)
            .map(|_| {
                let c: f64 = rng.random_range(-6.0..6.0);
                let w: f64 = rng.random_range(0.01..3.0);
                (c - w / 2.0, c + w / 2.0)
            })
            .collect()
    };
    let a = side(rng);
    let mut b = side(rng);
    if a.is_empty() && b.is_empty() {
        b.push((-0.5, 0.5));
    }
    BoundarySet::new(a, b)
}

fn strip_properties(rng: &mut ChaCha8Rng, s: &VerifySettings) -> Result<Vec<PropertyResult>> {
    let m = VerifyModule::Strip;
    let mut side = Probe::at_most(m, "poisson-mass-on-side-one", 1e-6);
    let mut total = Probe::at_most(m, "poisson-total-mass", 1e-6);
    let mut doubling = Probe::at_most(m, "doubling-within-bound", 0.0);
    let mut reference = Probe::at_most(m, "reference-doubling", 1e-9);
    let mut constancy = Probe::at_most(m, "boundary-norm-constancy", 1e-8);
    let mut defect = Probe::at_least(m, "convexity-defect-positive", f64::MIN_POSITIVE);
    for g in 1..10 {
        let g = g as f64 / 10.0;
        side.record((boundary_measure(g, &BoundarySet::side(1)?)? - g).abs());
        total.record((boundary_measure(g, &BoundarySet::full())? - 1.0).abs());
    }
    for t in 0..s.trials {
        let g = [0.2, 0.5, 0.8][t % 3];
        let a = random_boundary_set(rng)?;
        let dr = doubling_ratio(g, &a)?;
        doubling.record(dr.ratio - dr.bound);
        reference.record(reference_measure(&dilate(&a))? - 2.0 * reference_measure(&a)?);
    }
    let families = s.trials.min(4);
    for t in 0..families {
        let n = dim(rng, s.max_dim.min(4)).max(2);
        let alpha = [0.5, 1.0, 2.0][t % 3];
        let d = random_positive(rng, n, 0.1, 10.0);
        let x = hermitian_gaussian(rng, n).into_matrix();
        let family = AnalyticFamily::new(d, x, alpha)?;
        let q = 1.0;
        let grid: Vec<f64> = (0..20).map(|i| -3.0 + 6.0 * i as f64 / 19.0).collect();
        let target = schatten_norm(
            &(family.x() * family.d().power(1.0 + alpha).as_matrix()),
            q,
        )?;
        let profile = boundary_norm_profile(&family, q, &grid)?;
        for v in profile.norms0.iter().chain(&profile.norms1) {
            constancy.record((v - target).abs() / target);
        }
        let gamma0 = alpha / (1.0 + alpha);
        if let Some(v) = convexity_defect(&family, gamma0, [0.5, 1.0, 2.0][t % 3])? {
            defect.record(v);
        }
    }
    Ok(vec![
        side.finish(),
        total.finish(),
        doubling.finish(),
        reference.finish(),
        constancy.finish(),
        defect.finish(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let settings = VerifySettings { trials: 6, max_dim: 4 };
        let results = run_suite(&VerifyModule::ALL, &settings, 3).unwrap();
        for r in &results {
            assert!(r.passed, "{r:?}");
        }
        assert!(results.len() >= 25);
    }

    #[test]
    fn module_selection() {
        let settings = VerifySettings { trials: 2, max_dim: 3 };
        let results = run_suite(&[VerifyModule::Schatten], &settings, 1).unwrap();
        assert!(results.iter().all(|r| r.module == VerifyModule::Schatten));
    }
}
