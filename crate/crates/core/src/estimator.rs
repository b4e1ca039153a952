//! Seeded random instances and multi-start hill climbing on the ratio
//! objectives.
//!
//! Each start owns a ChaCha8 stream selected by its index, so a start's
//! trajectory depends only on `(seed, index)` and results can be merged in
//! index order regardless of how starts were scheduled.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::TMapParams;
use crate::matcore::{ComplexMatrix, PositiveDefiniteMatrix, MAX_DIM};
use crate::mazur::{
    eq1_ratio, interp_corollary_ratio, main_ratio, mazur_lipschitz_ratio, powers_diff_ratio,
    rx_ratio, tmap_ratio, triangular_ratio, MazurVariant, RatioOutcome, Sign,
};
use crate::random::{
    gaussian_complex, haar_unitary, hermitian_gaussian, log_uniform_spectrum, orthonormalize,
    rank_one,
};
use crate::schatten::{Exponent, ExponentConfig};
use crate::strip::{AnalyticFamily, DefectSamples};

pub const MIN_STARTS: usize = 16;
/// Spectra are clamped to this dynamic range after every move.
pub const MAX_SPECTRAL_RANGE: f64 = 1e8;
pub const SPECTRUM_LO: f64 = 1e-3;
pub const SPECTRUM_HI: f64 = 1e3;
/// Relative spread inside a clustered pair.
pub const CLUSTER_SPREAD: f64 = 1e-10;
const MAX_INITIAL_DRAWS: usize = 64;
const MAX_KEPT_FLAGGED: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumLaw {
    LogUniform,
    ClusteredPairs,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XLaw {
    GaussianComplex,
    HermitianGaussian,
    RankOne,
    Unitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub dim: usize,
    pub spectrum_law: SpectrumLaw,
    pub x_law: XLaw,
    pub seed: u64,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::DimensionOutOfRange(dim));
    }
    Ok(())
}

pub fn draw_spectrum<R: Rng + ?Sized>(rng: &mut R, law: SpectrumLaw, dim: usize) -> Vec<f64> {
    match law {
        SpectrumLaw::LogUniform => log_uniform_spectrum(rng, dim, SPECTRUM_LO, SPECTRUM_HI),
        SpectrumLaw::ClusteredPairs => {
            let centers = log_uniform_spectrum(rng, dim.div_ceil(2), SPECTRUM_LO, SPECTRUM_HI);
            let mut out = Vec::with_capacity(dim);
            for c in centers {
                out.push(c);
                if out.len() < dim {
                    out.push(c * (1.0 + rng.random_range(0.0..CLUSTER_SPREAD)));
                }
            }
            out
        }
        SpectrumLaw::Geometric => {
            let top = (1e6f64).ln() / (dim.max(2) - 1) as f64;
            let ratio = (rng.random_range(0.1..=1.0) * top).exp();
            let base = log_uniform_spectrum(rng, 1, SPECTRUM_LO, 1.0)[0];
            (0..dim).map(|i| base * ratio.powi(i as i32)).collect()
        }
    }
}

pub fn draw_x<R: Rng + ?Sized>(rng: &mut R, law: XLaw, dim: usize) -> ComplexMatrix {
    match law {
        XLaw::GaussianComplex => gaussian_complex(rng, dim),
        XLaw::HermitianGaussian => hermitian_gaussian(rng, dim).into_matrix(),
        XLaw::RankOne => rank_one(rng, dim),
        XLaw::Unitary => haar_unitary(rng, dim),
    }
}

/// `(d, x)` drawn from the spec; `d` is conjugated by a Haar unitary.
pub fn random_instance(spec: &InstanceSpec) -> Result<(PositiveDefiniteMatrix, ComplexMatrix)> {
    check_dim(spec.dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = draw_spectrum(&mut rng, spec.spectrum_law, spec.dim);
    let u = haar_unitary(&mut rng, spec.dim);
    let d = PositiveDefiniteMatrix::from_spectrum(values, u)?;
    let x = draw_x(&mut rng, spec.x_law, spec.dim);
    Ok((d, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveId {
    Main,
    Interp,
    Eq1Plus,
    Eq1Minus,
    Eq2,
    Mazur,
    AbsPower,
    Tmap,
    TriangularProbe,
    RxProbe,
    ConvexityDefectMin,
}

impl ObjectiveId {
    pub const ALL: [ObjectiveId; 11] = [
        ObjectiveId::Main,
        ObjectiveId::Interp,
        ObjectiveId::Eq1Plus,
        ObjectiveId::Eq1Minus,
        ObjectiveId::Eq2,
        ObjectiveId::Mazur,
        ObjectiveId::AbsPower,
        ObjectiveId::Tmap,
        ObjectiveId::TriangularProbe,
        ObjectiveId::RxProbe,
        ObjectiveId::ConvexityDefectMin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveId::Main => "main",
            ObjectiveId::Interp => "interp",
            ObjectiveId::Eq1Plus => "eq1-plus",
            ObjectiveId::Eq1Minus => "eq1-minus",
            ObjectiveId::Eq2 => "eq2",
            ObjectiveId::Mazur => "mazur",
            ObjectiveId::AbsPower => "abs-power",
            ObjectiveId::Tmap => "tmap",
            ObjectiveId::TriangularProbe => "triangular-probe",
            ObjectiveId::RxProbe => "rx-probe",
            ObjectiveId::ConvexityDefectMin => "convexity-defect-min",
        }
    }
}

impl fmt::Display for ObjectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown objective {s:?}")))
    }
}

/// Exponents as they appear in a config grid point; which ones are needed
/// depends on the objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentBundle {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

fn need(value: Option<f64>, key: &str, id: ObjectiveId) -> Result<f64> {
    let v = value.ok_or_else(|| Error::InvalidParameter(format!("objective {id} needs `{key}`")))?;
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("`{key}` must be finite, got {v}")));
    }
    Ok(v)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// An objective with validated exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "objective", rename_all = "kebab-case")]
pub enum Objective {
    Main { config: ExponentConfig },
    Interp { eps: f64, s: f64, r: Exponent, p: f64 },
    Eq1Plus { p: f64, q: f64 },
    Eq1Minus { p: f64, q: f64 },
    Eq2 { p: f64, q: f64 },
    Mazur { p: f64, q: f64 },
    AbsPower { p: f64, q: f64 },
    Tmap { beta: f64, gamma: f64, config: ExponentConfig },
    TriangularProbe { p: f64 },
    RxProbe { alpha: f64 },
    ConvexityDefectMin { alpha: f64, q: f64, gamma0: f64 },
}

/// How the search moves and normalizes instance blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    /// `(d, x)` with `d` positive.
    Operator,
    /// `(x, y)`, both positive.
    PositivePair,
    /// `(x, y)`, general.
    MatrixPair,
    /// A bare spectrum and `x`.
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Objective {
    pub fn new(id: ObjectiveId, e: &ExponentBundle) -> Result<Self> {
        let pq = || -> Result<(f64, f64)> {
            let p = need(e.p, "p", id)?;
            let q = need(e.q, "q", id)?;
            if !(q > 0.0 && q < p) {
                return Err(Error::InvalidParameter(format!(
                    "objective {id} needs 0 < q < p, got p={p}, q={q}"
                )));
            }
            Ok((p, q))
        };
        Ok(match id {
            ObjectiveId::Main => {
                let alpha = need(e.alpha, "alpha", id)?;
                let r = e.r.unwrap_or(Exponent::Infinite);
                let s = match (e.s, e.q) {
                    (Some(s), _) => s,
                    (None, Some(q)) => {
                        let inv = 1.0 / q - r.reciprocal();
                        if !(inv > 0.0) {
                            return Err(Error::InvalidParameter(format!(
                                "objective {id}: q={q} is incompatible with r={r}"
                            )));
                        }
                        (1.0 + alpha) / inv
                    }
                    (None, None) => need(None, "s", id)?,
                };
                let config = ExponentConfig::new(alpha, s, r)?;
                if let Some(q) = e.q {
                    if !close(q, config.q) {
                        return Err(Error::InvalidParameter(format!(
                            "objective {id}: q={q} disagrees with derived q={}",
                            config.q
                        )));
                    }
                }
                Objective::Main { config }
            }
            ObjectiveId::Interp => {
                let eps = need(e.eps, "eps", id)?;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::InvalidParameter(format!("`eps` must lie in (0, 1), got {eps}")));
                }
                let s = Exponent::finite(need(e.s, "s", id)?)?;
                let r = e.r.ok_or_else(|| Error::InvalidParameter(format!("objective {id} needs `r`")))?;
                let p = 1.0 / (s.reciprocal() + r.reciprocal());
                if let Some(given) = e.p {
                    if !close(given, p) {
                        return Err(Error::InvalidParameter(format!(
                            "objective {id}: p={given} violates 1/p = 1/s + 1/r (= {p})"
                        )));
                    }
                }
                Objective::Interp { eps, s: s.value(), r, p }
            }
            ObjectiveId::Eq1Plus => {
                let (p, q) = pq()?;
                Objective::Eq1Plus { p, q }
            }
            ObjectiveId::Eq1Minus => {
                let (p, q) = pq()?;
                Objective::Eq1Minus { p, q }
            }
            ObjectiveId::Eq2 => {
                let (p, q) = pq()?;
                Objective::Eq2 { p, q }
            }
            ObjectiveId::Mazur => {
                let (p, q) = pq()?;
                Objective::Mazur { p, q }
            }
            ObjectiveId::AbsPower => {
                let (p, q) = pq()?;
                Objective::AbsPower { p, q }
            }
            ObjectiveId::Tmap => {
                let beta = need(e.beta, "beta", id)?;
                let gamma = need(e.gamma, "gamma", id)?;
                let params = TMapParams::new(beta, gamma)?;
                let config = ExponentConfig::new(
                    params.alpha(),
                    need(e.s, "s", id)?,
                    e.r.unwrap_or(Exponent::Infinite),
                )?;
                Objective::Tmap { beta, gamma, config }
            }
            ObjectiveId::TriangularProbe => {
                let p = need(e.p, "p", id)?;
                Exponent::finite(p)?;
                Objective::TriangularProbe { p }
            }
            ObjectiveId::RxProbe => {
                let alpha = need(e.alpha, "alpha", id)?;
                if !(alpha > 0.0) {
                    return Err(Error::InvalidParameter(format!("`alpha` must be positive, got {alpha}")));
                }
                Objective::RxProbe { alpha }
            }
            ObjectiveId::ConvexityDefectMin => {
                let alpha = need(e.alpha, "alpha", id)?;
                let q = need(e.q, "q", id)?;
                if !(alpha > 0.0) || !(q > 0.0 && q <= 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "objective {id} needs alpha > 0 and q in (0, 2], got alpha={alpha}, q={q}"
                    )));
                }
                Objective::ConvexityDefectMin { alpha, q, gamma0: alpha / (1.0 + alpha) }
            }
        })
    }

    pub fn id(&self) -> ObjectiveId {
        match self {
            Objective::Main { .. } => ObjectiveId::Main,
            Objective::Interp { .. } => ObjectiveId::Interp,
            Objective::Eq1Plus { .. } => ObjectiveId::Eq1Plus,
            Objective::Eq1Minus { .. } => ObjectiveId::Eq1Minus,
            Objective::Eq2 { .. } => ObjectiveId::Eq2,
            Objective::Mazur { .. } => ObjectiveId::Mazur,
            Objective::AbsPower { .. } => ObjectiveId::AbsPower,
            Objective::Tmap { .. } => ObjectiveId::Tmap,
            Objective::TriangularProbe { .. } => ObjectiveId::TriangularProbe,
            Objective::RxProbe { .. } => ObjectiveId::RxProbe,
            Objective::ConvexityDefectMin { .. } => ObjectiveId::ConvexityDefectMin,
        }
    }

    pub fn sense(&self) -> Sense {
        match self {
            Objective::ConvexityDefectMin { .. } => Sense::Minimize,
            _ => Sense::Maximize,
        }
    }

    fn layout(&self) -> Layout {
        match self {
            Objective::Eq2 { .. } => Layout::PositivePair,
            Objective::Mazur { .. } | Objective::AbsPower { .. } => Layout::MatrixPair,
            Objective::RxProbe { .. } => Layout::Kernel,
            _ => Layout::Operator,
        }
    }

    /// Exponent of the Schatten norm fixed to one on spectra; `None` for
    /// the operator norm.
    fn spectral_normalizer(&self) -> Option<f64> {
        match self {
            Objective::Main { config } | Objective::Tmap { config, .. } => Some(config.s),
            Objective::Interp { s, .. } => Some(*s),
            Objective::Eq1Plus { p, .. } | Objective::Eq1Minus { p, .. } => Some(*p),
            _ => None,
        }
    }

    /// Evaluates the objective on an instance.
    pub fn evaluate(&self, inst: &Instance) -> Result<RatioOutcome> {
        match *self {
            Objective::Main { config } => main_ratio(&inst.positive(0)?, &inst.mats[0], &config),
            Objective::Interp { eps, s, r, .. } => {
                interp_corollary_ratio(&inst.positive(0)?, &inst.mats[0], eps, s, r)
            }
            Objective::Eq1Plus { p, q } => eq1_ratio(&inst.positive(0)?, &inst.mats[0], p, q, Sign::Plus),
            Objective::Eq1Minus { p, q } => eq1_ratio(&inst.positive(0)?, &inst.mats[0], p, q, Sign::Minus),
            Objective::Eq2 { p, q } => powers_diff_ratio(&inst.positive(0)?, &inst.positive(1)?, p, q),
            Objective::Mazur { p, q } => {
                mazur_lipschitz_ratio(&inst.mats[0], &inst.mats[1], p, q, MazurVariant::Map)
            }
            Objective::AbsPower { p, q } => {
                mazur_lipschitz_ratio(&inst.mats[0], &inst.mats[1], p, q, MazurVariant::AbsPower)
            }
            Objective::Tmap { beta, gamma, config } => tmap_ratio(
                &inst.positive(0)?,
                &inst.mats[0],
                TMapParams::new(beta, gamma)?,
                config.s,
                config.r,
            ),
            Objective::TriangularProbe { p } => triangular_ratio(&inst.positive(0)?, &inst.mats[0], p),
            Objective::RxProbe { alpha } => rx_ratio(&inst.spectra[0], alpha, &inst.mats[0]),
            Objective::ConvexityDefectMin { alpha, q, gamma0 } => {
                let family = AnalyticFamily::new(inst.positive(0)?, inst.mats[0].clone(), alpha)?;
                Ok(match DefectSamples::new(&family, gamma0)?.terms(q)?.defect() {
                    Some(v) => RatioOutcome::Finite(v),
                    None => RatioOutcome::Degenerate,
                })
            }
        }
    }
}

/// The blocks a search moves: spectra with their eigenbases, and free
/// matrices. Which blocks are present depends on the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub spectra: Vec<Vec<f64>>,
    pub bases: Vec<ComplexMatrix>,
    pub mats: Vec<ComplexMatrix>,
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.spectra
            .first()
            .map(Vec::len)
            .or_else(|| self.mats.first().map(ComplexMatrix::dim))
            .unwrap_or(0)
    }

    /// Positive matrix `U_i diag(λ_i) U_i*`.
    pub fn positive(&self, i: usize) -> Result<PositiveDefiniteMatrix> {
        PositiveDefiniteMatrix::from_spectrum(self.spectra[i].clone(), self.bases[i].clone())
    }

    pub fn to_witness(&self) -> Witness {
        Witness {
            spectra: self.spectra.iter().map(|s| s.iter().map(|v| hex(*v)).collect()).collect(),
            bases: self.bases.iter().map(HexMatrix::from_matrix).collect(),
            mats: self.mats.iter().map(HexMatrix::from_matrix).collect(),
        }
    }
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| Error::InvalidParameter(format!("bad hex float {s:?}")))
}

/// Row-major matrix stored as hexadecimal IEEE-754 bit patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexMatrix {
    pub dim: usize,
    pub re: Vec<String>,
    pub im: Vec<String>,
}

impl HexMatrix {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            re: m.as_slice().iter().map(|z| hex(z.re)).collect(),
            im: m.as_slice().iter().map(|z| hex(z.im)).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let data = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| Ok(Complex64::new(unhex(r)?, unhex(i)?)))
            .collect::<Result<Vec<_>>>()?;
        ComplexMatrix::from_row_major(self.dim, data)
    }
}

/// Bit-exact serialized [`Instance`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub spectra: Vec<Vec<String>>,
    pub bases: Vec<HexMatrix>,
    pub mats: Vec<HexMatrix>,
}

impl Witness {
    pub fn to_instance(&self) -> Result<Instance> {
        Ok(Instance {
            spectra: self
                .spectra
                .iter()
                .map(|s| s.iter().map(|v| unhex(v)).collect())
                .collect::<Result<_>>()?,
            bases: self.bases.iter().map(HexMatrix::to_matrix).collect::<Result<_>>()?,
            mats: self.mats.iter().map(HexMatrix::to_matrix).collect::<Result<_>>()?,
        })
    }
}

/// Geometric step decay from `initial` to `last` over the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSchedule {
    pub initial: f64,
    #[serde(rename = "final")]
    pub last: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self { initial: 0.5, last: 1e-3 }
    }
}

impl StepSchedule {
    pub fn step(&self, iteration: usize, budget: usize) -> f64 {
        if budget <= 1 {
            return self.initial;
        }
        let frac = iteration as f64 / (budget - 1) as f64;
        self.initial * (self.last / self.initial).powf(frac)
    }

    fn validate(&self) -> Result<()> {
        if !(self.initial > 0.0 && self.last > 0.0 && self.initial.is_finite() && self.last.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step schedule must be positive, got {} -> {}",
                self.initial, self.last
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_dim: usize,
    pub spectrum_law: SpectrumLaw,
    pub x_law: XLaw,
    pub seed: u64,
    pub starts: usize,
    /// Iterations per start.
    pub budget: usize,
    pub schedule: StepSchedule,
    /// Keep every block simultaneously diagonal.
    pub diagonal: bool,
}

impl SearchConfig {
    pub fn new(max_dim: usize, seed: u64, budget: usize) -> Self {
        Self {
            max_dim,
            spectrum_law: SpectrumLaw::LogUniform,
            x_law: XLaw::GaussianComplex,
            seed,
            starts: MIN_STARTS,
            budget,
            schedule: StepSchedule::default(),
            diagonal: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.max_dim)?;
        if self.starts < MIN_STARTS {
            return Err(Error::InvalidParameter(format!(
                "at least {MIN_STARTS} starts are required, got {}",
                self.starts
            )));
        }
        self.schedule.validate()
    }

    /// Dimension of start `index`: cycles through `2..=max_dim`.
    pub fn start_dim(&self, index: usize) -> usize {
        if self.max_dim <= 2 {
            return self.max_dim;
        }
        2 + index % (self.max_dim - 1)
    }
}

fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn keep_diagonal(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&m.diagonal())
}

fn schatten_of_values(values: &[f64], p: Option<f64>) -> f64 {
    match p {
        None => values.iter().copied().fold(0.0, f64::max),
        Some(p) => {
            let top = values.iter().copied().fold(0.0, f64::max);
            top * values.iter().map(|v| (v / top).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// Clamps the dynamic range, then rescales to unit norm.
fn normalize_spectrum(values: &mut [f64], p: Option<f64>) {
    let top = values.iter().copied().fold(0.0, f64::max);
    let floor = top / MAX_SPECTRAL_RANGE;
    for v in values.iter_mut() {
        *v = v.max(floor);
    }
    let norm = schatten_of_values(values, p);
    for v in values.iter_mut() {
        *v /= norm;
    }
}

fn normalize_frobenius(m: &ComplexMatrix) -> ComplexMatrix {
    let f = m.frobenius();
    if f > 0.0 {
        m.scale(1.0 / f)
    } else {
        m.clone()
    }
}

struct Mover<'a> {
    objective: &'a Objective,
    config: &'a SearchConfig,
}

impl Mover<'_> {
    fn fresh(&self, rng: &mut ChaCha8Rng, dim: usize) -> Instance {
        let law = self.config.spectrum_law;
        let basis = |rng: &mut ChaCha8Rng| {
            if self.config.diagonal {
                ComplexMatrix::identity(dim)
            } else {
                haar_unitary(rng, dim)
            }
        };
        let matrix = |rng: &mut ChaCha8Rng| {
            let m = draw_x(rng, self.config.x_law, dim);
            if self.config.diagonal {
                keep_diagonal(&m)
            } else {
                m
            }
        };
        let mut inst = match self.objective.layout() {
            Layout::Operator => {
                let spectrum = draw_spectrum(rng, law, dim);
                let u = basis(rng);
                Instance { spectra: vec![spectrum], bases: vec![u], mats: vec![matrix(rng)] }
            }
            Layout::PositivePair => {
                let (a, u) = (draw_spectrum(rng, law, dim), basis(rng));
                let (b, v) = (draw_spectrum(rng, law, dim), basis(rng));
                Instance { spectra: vec![a, b], bases: vec![u, v], mats: vec![] }
            }
            Layout::MatrixPair => {
                let x = matrix(rng);
                let y = matrix(rng);
                Instance { spectra: vec![], bases: vec![], mats: vec![x, y] }
            }
            Layout::Kernel => Instance {
                spectra: vec![draw_spectrum(rng, law, dim)],
                bases: vec![],
                mats: vec![matrix(rng)],
            },
        };
        self.normalize(&mut inst);
        inst
    }

    fn normalize(&self, inst: &mut Instance) {
        match self.objective.layout() {
            Layout::PositivePair => {
                // Joint scaling keeps the ratio; fix the larger spectrum's top.
                let top = inst.spectra.iter().flatten().copied().fold(0.0, f64::max);
                let floor = top / MAX_SPECTRAL_RANGE;
                for s in inst.spectra.iter_mut() {
                    for v in s.iter_mut() {
                        *v = v.max(floor) / top;
                    }
                }
            }
            Layout::MatrixPair => {
                let top = inst.mats.iter().map(ComplexMatrix::frobenius).fold(0.0, f64::max);
                if top > 0.0 {
                    for m in inst.mats.iter_mut() {
                        *m = m.scale(1.0 / top);
                    }
                }
            }
            Layout::Operator | Layout::Kernel => {
                normalize_spectrum(&mut inst.spectra[0], self.objective.spectral_normalizer());
                inst.mats[0] = normalize_frobenius(&inst.mats[0]);
            }
        }
    }

    fn perturb(&self, rng: &mut ChaCha8Rng, inst: &Instance, step: f64) -> Instance {
        let mut next = inst.clone();
        let n = inst.dim();
        let moves_bases = !self.config.diagonal;
        let blocks = inst.spectra.len() + if moves_bases { inst.bases.len() } else { 0 } + inst.mats.len();
        let mut pick = rng.random_range(0..blocks);
        if pick < inst.spectra.len() {
            let s = &mut next.spectra[pick];
            if rng.random_bool(0.5) {
                let i = rng.random_range(0..n);
                s[i] *= (step * rng.sample::<f64, _>(StandardNormal)).exp();
            } else {
                for v in s.iter_mut() {
                    *v *= (step * rng.sample::<f64, _>(StandardNormal)).exp();
                }
            }
        } else {
            pick -= inst.spectra.len();
            let nb = if moves_bases { inst.bases.len() } else { 0 };
            if pick < nb {
                let g = gaussian_complex(rng, n).scale(step / n as f64);
                next.bases[pick] = orthonormalize(&(&inst.bases[pick] + &g));
            } else {
                let i = pick - nb;
                let scale = step * inst.mats[i].frobenius().max(1e-300) / n as f64;
                let mut g = match self.config.x_law {
                    XLaw::HermitianGaussian => hermitian_gaussian(rng, n).into_matrix(),
                    _ => gaussian_complex(rng, n),
                };
                if self.config.diagonal {
                    g = keep_diagonal(&g);
                }
                if rng.random_bool(0.5) {
                    // Single entry, at the full step.
                    let (r, c) = if self.config.diagonal {
                        let k = rng.random_range(0..n);
                        (k, k)
                    } else {
                        (rng.random_range(0..n), rng.random_range(0..n))
                    };
                    let mut e = ComplexMatrix::zeros(n);
                    e[(r, c)] = g[(r, c)] * n as f64;
                    g = e;
                }
                let g = g.scale(scale);
                if inst.mats.len() > 1 && rng.random_bool(0.5) {
                    // Common mode: the difference between the matrices is kept.
                    for m in next.mats.iter_mut() {
                        *m = &*m + &g;
                    }
                } else {
                    next.mats[i] = &inst.mats[i] + &g;
                }
            }
        }
        self.normalize(&mut next);
        next
    }

    /// Repeats the displacement `prev -> cur` once more from `cur`.
    fn extrapolate(&self, prev: &Instance, cur: &Instance) -> Instance {
        let mut next = cur.clone();
        for (s, (a, b)) in next.spectra.iter_mut().zip(prev.spectra.iter().zip(&cur.spectra)) {
            for (v, (x, y)) in s.iter_mut().zip(a.iter().zip(b)) {
                *v = y * (y / x);
            }
        }
        if !self.config.diagonal {
            for (u, (a, b)) in next.bases.iter_mut().zip(prev.bases.iter().zip(&cur.bases)) {
                *u = orthonormalize(&(b + &(b - a)));
            }
        }
        for (m, (a, b)) in next.mats.iter_mut().zip(prev.mats.iter().zip(&cur.mats)) {
            *m = b + &(b - a);
        }
        self.normalize(&mut next);
        next
    }
}

fn better(sense: Sense, candidate: f64, incumbent: f64) -> bool {
    match sense {
        Sense::Maximize => candidate > incumbent,
        Sense::Minimize => candidate < incumbent,
    }
}

#[derive(Debug, Clone)]
struct StartOutcome {
    trace: Vec<f64>,
    best: Instance,
    flagged: usize,
    degenerate: usize,
    kept_flagged: Vec<Instance>,
}

fn run_start(objective: &Objective, config: &SearchConfig, index: usize) -> Result<StartOutcome> {
    let mover = Mover { objective, config };
    let sense = objective.sense();
    let mut rng = start_rng(config.seed, index);
    let dim = config.start_dim(index);
    let mut flagged = 0;
    let mut degenerate = 0;
    let mut kept_flagged = Vec::new();

    let mut current = None;
    for _ in 0..MAX_INITIAL_DRAWS {
        let inst = mover.fresh(&mut rng, dim);
        match objective.evaluate(&inst)? {
            RatioOutcome::Finite(v) => {
                current = Some((inst, v));
                break;
            }
            RatioOutcome::Degenerate => degenerate += 1,
            RatioOutcome::NearKernel { .. } => {
                flagged += 1;
                if kept_flagged.len() < MAX_KEPT_FLAGGED {
                    kept_flagged.push(inst);
                }
            }
        }
    }
    let (mut best, mut value) = current.ok_or(Error::NoConvergence {
        routine: "initial instance draw",
        iterations: MAX_INITIAL_DRAWS,
    })?;

    let mut trace = Vec::with_capacity(config.budget + 1);
    trace.push(value);
    // Set after an accepted move; the next proposal repeats that move.
    let mut previous: Option<Instance> = None;
    for it in 0..config.budget {
        let candidate = match previous.take() {
            Some(prev) => mover.extrapolate(&prev, &best),
            None => mover.perturb(&mut rng, &best, config.schedule.step(it, config.budget)),
        };
        match objective.evaluate(&candidate)? {
            RatioOutcome::Finite(v) if better(sense, v, value) => {
                previous = Some(std::mem::replace(&mut best, candidate));
                value = v;
            }
            RatioOutcome::Finite(_) => {}
            RatioOutcome::Degenerate => degenerate += 1,
            RatioOutcome::NearKernel { .. } => {
                flagged += 1;
                if kept_flagged.len() < MAX_KEPT_FLAGGED {
                    kept_flagged.push(candidate);
                }
            }
        }
        trace.push(value);
    }
    Ok(StartOutcome { trace, best, flagged, degenerate, kept_flagged })
}

/// Result of re-examining one flagged instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlaggedReview {
    pub start: usize,
    pub witness: Witness,
    /// Largest finite ratio seen among the nearby re-evaluations.
    pub nearby_max: Option<f64>,
    /// Whether the blow-up persists in the neighborhood.
    pub survives: bool,
}

pub const REVIEW_PERTURBATION: f64 = 1e-6;
pub const REVIEW_SAMPLES: usize = 8;
/// Nearby finite ratios above this multiple of the best recorded value
/// keep a flagged instance alive.
pub const REVIEW_GROWTH: f64 = 10.0;

fn review_flagged(
    objective: &Objective,
    config: &SearchConfig,
    start: usize,
    inst: &Instance,
    reference: f64,
) -> Result<FlaggedReview> {
    let mover = Mover { objective, config };
    let mut rng = start_rng(config.seed ^ 0x5245_5649_4557, start);
    let mut nearby_max: Option<f64> = None;
    let mut benign = false;
    for _ in 0..REVIEW_SAMPLES {
        let nearby = mover.perturb(&mut rng, inst, REVIEW_PERTURBATION);
        match objective.evaluate(&nearby)? {
            RatioOutcome::Finite(v) => {
                nearby_max = Some(nearby_max.map_or(v, |m| m.max(v)));
                if v <= REVIEW_GROWTH * reference.abs() {
                    benign = true;
                }
            }
            RatioOutcome::Degenerate => benign = true,
            RatioOutcome::NearKernel { .. } => {}
        }
    }
    Ok(FlaggedReview {
        start,
        witness: inst.to_witness(),
        nearby_max,
        survives: !benign,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub objective: ObjectiveId,
    pub sense: Sense,
    pub exponents: Objective,
    pub search: SearchConfig,
    pub best_ratio: f64,
    pub best_start: usize,
    pub best_dim: usize,
    pub witness: Witness,
    /// `(iteration, best so far)` at every change of the merged best and at
    /// the final iteration.
    pub trace: Vec<(usize, f64)>,
    /// Relative improvement over the final quarter of the iterations.
    pub plateau_improvement: f64,
    pub start_best: Vec<f64>,
    pub seed: u64,
    pub flagged_instances: usize,
    pub degenerate_skips: usize,
    pub flagged_reviews: Vec<FlaggedReview>,
}

impl RatioReport {
    /// Merged best after `iteration` iterations.
    pub fn value_at(&self, iteration: usize) -> f64 {
        let mut v = self.trace[0].1;
        for &(i, r) in &self.trace {
            if i > iteration {
                break;
            }
            v = r;
        }
        v
    }

    /// Unreviewed sentinels: flagged instances whose blow-up survived review.
    pub fn surviving_flags(&self) -> usize {
        self.flagged_reviews.iter().filter(|r| r.survives).count()
    }
}

/// Relative change of a monotone trace over its final quarter.
pub fn plateau_statistic(at_three_quarters: f64, last: f64) -> f64 {
    let scale = last.abs().max(f64::MIN_POSITIVE);
    (last - at_three_quarters).abs() / scale
}

/// Multi-start hill climbing (minimization for the convexity defect).
/// Starts run on the current rayon pool and merge in index order.
pub fn maximize(objective: &Objective, config: &SearchConfig) -> Result<RatioReport> {
    config.validate()?;
    let sense = objective.sense();
    let outcomes: Vec<StartOutcome> = (0..config.starts)
        .into_par_iter()
        .map(|i| run_start(objective, config, i))
        .collect::<Result<_>>()?;

    let len = config.budget + 1;
    let mut merged = Vec::with_capacity(len);
    for it in 0..len {
        let mut v = outcomes[0].trace[it];
        for o in &outcomes[1..] {
            if better(sense, o.trace[it], v) {
                v = o.trace[it];
            }
        }
        merged.push(v);
    }
    let mut trace = vec![(0, merged[0])];
    for (it, &v) in merged.iter().enumerate().skip(1) {
        if v != trace.last().expect("nonempty").1 {
            trace.push((it, v));
        }
    }
    if trace.last().expect("nonempty").0 != len - 1 {
        trace.push((len - 1, merged[len - 1]));
    }

    let start_best: Vec<f64> = outcomes.iter().map(|o| o.trace[len - 1]).collect();
    let mut best_start = 0;
    for (i, &v) in start_best.iter().enumerate() {
        if better(sense, v, start_best[best_start]) {
            best_start = i;
        }
    }
    let best_ratio = start_best[best_start];
    let quarter = (3 * config.budget) / 4;

    let mut flagged_reviews = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        for inst in &o.kept_flagged {
            flagged_reviews.push(review_flagged(objective, config, i, inst, best_ratio)?);
        }
    }

    Ok(RatioReport {
        objective: objective.id(),
        sense,
        exponents: *objective,
        search: *config,
        best_ratio,
        best_start,
        best_dim: outcomes[best_start].best.dim(),
        witness: outcomes[best_start].best.to_witness(),
        trace,
        plateau_improvement: plateau_statistic(merged[quarter], merged[len - 1]),
        start_best,
        seed: config.seed,
        flagged_instances: outcomes.iter().map(|o| o.flagged).sum(),
        degenerate_skips: outcomes.iter().map(|o| o.degenerate).sum(),
        flagged_reviews,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn bundle_pq(p: f64, q: f64) -> ExponentBundle {
        ExponentBundle { p: Some(p), q: Some(q), ..Default::default() }
    }

    #[test]
    fn instance_determinism_and_scalars() {
        let spec = InstanceSpec { dim: 5, spectrum_law: SpectrumLaw::Geometric, x_law: XLaw::RankOne, seed: 42 };
        let (d1, x1) = random_instance(&spec).unwrap();
        let (d2, x2) = random_instance(&spec).unwrap();
        assert_eq!(d1.as_matrix(), d2.as_matrix());
        assert_eq!(x1, x2);
        let one = InstanceSpec { dim: 1, ..spec };
        let (d, x) = random_instance(&one).unwrap();
        assert_eq!((d.dim(), x.dim()), (1, 1));
        assert!(random_instance(&InstanceSpec { dim: 0, ..spec }).is_err());
    }

    #[test]
    fn clustered_pairs_are_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = draw_spectrum(&mut rng, SpectrumLaw::ClusteredPairs, 6);
        for pair in s.chunks(2) {
            assert!((pair[1] - pair[0]).abs() <= 1e-10 * pair[0]);
        }
    }

    #[test]
    fn objective_names_round_trip() {
        for id in ObjectiveId::ALL {
            assert_eq!(id.name().parse::<ObjectiveId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.name()));
        }
        assert!("nope".parse::<ObjectiveId>().is_err());
    }

    #[test]
    fn main_objective_derives_s_from_q() {
        let e = ExponentBundle { alpha: Some(1.0), q: Some(2.0 / 3.0), r: Some(Exponent::Infinite), ..Default::default() };
        match Objective::new(ObjectiveId::Main, &e).unwrap() {
            Objective::Main { config } => {
                assert!((config.s - 4.0 / 3.0).abs() < 1e-15);
                assert!((config.q - 2.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert!(Objective::new(ObjectiveId::Eq2, &bundle_pq(0.5, 1.0)).is_err());
        let bad = ExponentBundle { eps: Some(0.3), s: Some(1.0), r: Some(Exponent::Finite(1.0)), p: Some(0.4), ..Default::default() };
        assert!(Objective::new(ObjectiveId::Interp, &bad).is_err());
    }

    #[test]
    fn witness_round_trip_is_exact() {
        let objective = Objective::new(ObjectiveId::Mazur, &bundle_pq(2.0, 0.5)).unwrap();
        let config = SearchConfig::new(4, 7, 0);
        let mover = Mover { objective: &objective, config: &config };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = mover.fresh(&mut rng, 3);
        assert_eq!(inst.to_witness().to_instance().unwrap(), inst);
    }

    #[test]
    fn budget_zero_returns_best_initial() {
        let objective = Objective::new(ObjectiveId::Eq1Plus, &bundle_pq(1.0, 0.5)).unwrap();
        let config = SearchConfig::new(4, 11, 0);
        let report = maximize(&objective, &config).unwrap();
        let top = report.start_best.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(report.best_ratio, top);
        assert_eq!(report.trace, vec![(0, top)]);
    }

    #[test]
    fn trace_is_monotone_and_ends_at_best() {
        let objective = Objective::new(ObjectiveId::Eq2, &bundle_pq(1.0, 2.0 / 3.0)).unwrap();
        let config = SearchConfig::new(4, 5, 60);
        let report = maximize(&objective, &config).unwrap();
        assert!(report.trace.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0));
        assert_eq!(report.trace.last().unwrap(), &(60, report.best_ratio));
        let replayed = objective.evaluate(&report.witness.to_instance().unwrap()).unwrap();
        assert_eq!(replayed, RatioOutcome::Finite(report.best_ratio));
    }

    #[test]
    fn diagonal_eq2_respects_scalar_ceiling() {
        let (p, q) = (1.0, 2.0 / 3.0);
        let objective = Objective::new(ObjectiveId::Eq2, &bundle_pq(p, q)).unwrap();
        let mut config = SearchConfig::new(5, 9, 100);
        config.diagonal = true;
        let report = maximize(&objective, &config).unwrap();
        assert!(report.best_ratio <= p / q + 1e-9);
    }

    #[test]
    fn rejects_too_few_starts() {
        let objective = Objective::new(ObjectiveId::Eq2, &bundle_pq(1.0, 0.5)).unwrap();
        let mut config = SearchConfig::new(3, 1, 1);
        config.starts = 4;
        assert!(maximize(&objective, &config).is_err());
    }

    #[test]
    fn minimization_trace_is_nonincreasing() {
        let e = ExponentBundle { alpha: Some(1.0), q: Some(1.0), ..Default::default() };
        let objective = Objective::new(ObjectiveId::ConvexityDefectMin, &e).unwrap();
        let mut config = SearchConfig::new(2, 4, 3);
        config.x_law = XLaw::HermitianGaussian;
        let report = maximize(&objective, &config).unwrap();
        assert!(report.trace.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(report.best_ratio > 0.0);
    }

    #[test]
    fn normalization_does_not_change_main_ratio() {
        let e = ExponentBundle { alpha: Some(1.0), s: Some(4.0 / 3.0), r: Some(Exponent::Infinite), ..Default::default() };
        let objective = Objective::new(ObjectiveId::Main, &e).unwrap();
        let config = SearchConfig::new(5, 2, 0);
        let mover = Mover { objective: &objective, config: &config };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = mover.fresh(&mut rng, 4);
        let mut scaled = inst.clone();
        for v in scaled.spectra[0].iter_mut() {
            *v *= 37.0;
        }
        scaled.mats[0] = scaled.mats[0].scale(0.01);
        let a = objective.evaluate(&inst).unwrap().value().unwrap();
        let b = objective.evaluate(&scaled).unwrap().value().unwrap();
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn start_dimensions_cycle() {
        let c = SearchConfig::new(4, 0, 0);
        let dims: Vec<usize> = (0..6).map(|i| c.start_dim(i)).collect();
        assert_eq!(dims, vec![2, 3, 4, 2, 3, 4]);
        assert_eq!(SearchConfig::new(1, 0, 0).start_dim(5), 1);
    }

    #[test]
    fn shuffle_free_merge_is_order_independent() {
        // Starts evaluated in any order give the same report.
        let objective = Objective::new(ObjectiveId::Eq1Minus, &bundle_pq(1.0, 0.5)).unwrap();
        let config = SearchConfig::new(3, 13, 20);
        let a = maximize(&objective, &config).unwrap();
        let mut order: Vec<usize> = (0..config.starts).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
        let mut by_index: Vec<(usize, f64)> = order
            .iter()
            .map(|&i| (i, run_start(&objective, &config, i).unwrap().trace[20]))
            .collect();
        by_index.sort_by_key(|p| p.0);
        let finals: Vec<f64> = by_index.into_iter().map(|p| p.1).collect();
        assert_eq!(finals, a.start_best);
    }
}
