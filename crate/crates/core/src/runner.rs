//! Config-driven experiment runner: `verify`, `estimate` and `strip-check`.
//!
//! Configs are TOML. Reports are JSON (full, with traces and witnesses) or
//! CSV (one flat row per result, no witnesses). Everything in a report is a
//! function of the config and seed except the `wall_clock` object.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::estimator::{
    maximize, ExponentBundle, InstanceSpec, Objective, ObjectiveId, RatioReport, SearchConfig,
    SpectrumLaw, StepSchedule, XLaw, MIN_STARTS,
};
use crate::random::{hermitian_gaussian, random_positive};
use crate::schatten::{schatten_norm, Exponent};
use crate::strip::{
    boundary_measure, boundary_norm_profile, convexity_defect, dilate, doubling_bound,
    doubling_ratio, reference_measure, AnalyticFamily, BoundarySet,
};
use crate::verify::{random_boundary_set, run_suite, PropertyResult, VerifyModule, VerifySettings};

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(#[from] Error),
    #[error("could not encode report: {0}")]
    Encode(String),
}

impl RunError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => 2,
            RunError::Numerical(_) | RunError::Encode(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Verify,
    Estimate,
    StripCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?} (expected json or csv)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

/// A scalar or a list of values in a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Grid<T> {
    fn values(&self) -> Vec<T> {
        match self {
            Grid::One(v) => vec![v.clone()],
            Grid::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_spectrum_law")]
    pub spectrum_law: SpectrumLaw,
    #[serde(default = "default_x_law")]
    pub x_law: XLaw,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub diagonal: bool,
    #[serde(default)]
    pub schedule: StepSchedule,
}

fn default_max_dim() -> usize {
    8
}
fn default_spectrum_law() -> SpectrumLaw {
    SpectrumLaw::LogUniform
}
fn default_x_law() -> XLaw {
    XLaw::GaussianComplex
}
fn default_starts() -> usize {
    MIN_STARTS
}
fn default_budget() -> usize {
    200
}

impl Default for InstanceSection {
    fn default() -> Self {
        Self {
            max_dim: default_max_dim(),
            spectrum_law: default_spectrum_law(),
            x_law: default_x_law(),
            starts: default_starts(),
            budget: default_budget(),
            diagonal: false,
            schedule: StepSchedule::default(),
        }
    }
}

/// One `[[estimate]]` block: an objective and an exponent grid, with
/// optional per-block overrides of the instance section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateBlock {
    pub objective: ObjectiveId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Grid<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Grid<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Grid<Exponent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Grid<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Grid<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Grid<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Grid<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Grid<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_law: Option<SpectrumLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_law: Option<XLaw>,
}

impl EstimateBlock {
    /// Cartesian product of the grid, in key order `alpha, s, r, p, q, eps,
    /// beta, gamma`, last key fastest.
    pub fn points(&self) -> Vec<ExponentBundle> {
        fn axis(g: &Option<Grid<f64>>) -> Vec<Option<f64>> {
            g.as_ref().map_or(vec![None], |g| g.values().into_iter().map(Some).collect())
        }
        let rs: Vec<Option<Exponent>> =
            self.r.as_ref().map_or(vec![None], |g| g.values().into_iter().map(Some).collect());
        let mut out = Vec::new();
        for alpha in axis(&self.alpha) {
            for &s in &axis(&self.s) {
                for &r in &rs {
                    for &p in &axis(&self.p) {
                        for &q in &axis(&self.q) {
                            for &eps in &axis(&self.eps) {
                                for &beta in &axis(&self.beta) {
                                    for &gamma in &axis(&self.gamma) {
                                        out.push(ExponentBundle { alpha, s, r, p, q, eps, beta, gamma });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn search(&self, inst: &InstanceSection, seed: u64) -> SearchConfig {
        SearchConfig {
            max_dim: self.max_dim.unwrap_or(inst.max_dim),
            spectrum_law: self.spectrum_law.unwrap_or(inst.spectrum_law),
            x_law: self.x_law.unwrap_or(inst.x_law),
            seed,
            starts: inst.starts,
            budget: self.budget.unwrap_or(inst.budget),
            schedule: inst.schedule,
            diagonal: self.diagonal.unwrap_or(inst.diagonal),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "all_modules")]
    pub modules: Vec<VerifyModule>,
    #[serde(default = "default_verify_trials")]
    pub trials: usize,
    #[serde(default = "default_verify_dim")]
    pub max_dim: usize,
}

fn default_verify_trials() -> usize {
    VerifySettings::default().trials
}

fn default_verify_dim() -> usize {
    VerifySettings::default().max_dim
}

impl VerifySection {
    pub fn settings(&self) -> VerifySettings {
        VerifySettings { trials: self.trials, max_dim: self.max_dim }
    }
}

fn all_modules() -> Vec<VerifyModule> {
    VerifyModule::ALL.to_vec()
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            modules: all_modules(),
            trials: default_verify_trials(),
            max_dim: default_verify_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripSection {
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_sets")]
    pub sets: usize,
    #[serde(default = "default_families")]
    pub families: usize,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_qs")]
    pub q: Vec<f64>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_strip_dim")]
    pub max_dim: usize,
}

fn default_gammas() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.75, 0.9]
}
fn default_sets() -> usize {
    50
}
fn default_families() -> usize {
    6
}
fn default_alphas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_qs() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_grid_points() -> usize {
    20
}
fn default_strip_dim() -> usize {
    4
}

impl Default for StripSection {
    fn default() -> Self {
        Self {
            gammas: default_gammas(),
            sets: default_sets(),
            families: default_families(),
            alphas: default_alphas(),
            q: default_qs(),
            grid_points: default_grid_points(),
            max_dim: default_strip_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<ReportFormat>,
    #[serde(default)]
    pub instance: InstanceSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimate: Vec<EstimateBlock>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub strip: StripSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Rejects invalid grid points, naming the block and key.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Config(msg));
        if self.experiment == ExperimentKind::Estimate && self.estimate.is_empty() {
            return bad("estimate experiment needs at least one [[estimate]] block".into());
        }
        for (i, block) in self.estimate.iter().enumerate() {
            for point in block.points() {
                if let Err(e) = Objective::new(block.objective, &point) {
                    return bad(format!("estimate[{i}] ({}): {e}", block.objective));
                }
            }
            if let Err(e) = block.search(&self.instance, self.seed).validate() {
                return bad(format!("estimate[{i}] ({}): {e}", block.objective));
            }
        }
        if self.experiment == ExperimentKind::StripCheck {
            for &g in &self.strip.gammas {
                if !(g > 0.0 && g < 1.0) {
                    return bad(format!("strip.gammas: {g} is outside (0, 1)"));
                }
            }
            for &q in &self.strip.q {
                if !(q > 0.0 && q <= 2.0) {
                    return bad(format!("strip.q: {q} is outside (0, 2]"));
                }
            }
            for &a in &self.strip.alphas {
                if !(a > 0.0) {
                    return bad(format!("strip.alphas: {a} is not positive"));
                }
            }
            if self.strip.max_dim < 2 || self.strip.max_dim > crate::matcore::MAX_DIM {
                return bad(format!("strip.max_dim: {} is outside 2..=64", self.strip.max_dim));
            }
        }
        if self.experiment == ExperimentKind::Verify && self.verify.max_dim == 0 {
            return bad("verify.max_dim must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub block: usize,
    pub point: ExponentBundle,
    pub report: RatioReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassRow {
    pub gamma: f64,
    pub side_one: f64,
    pub full: f64,
    pub side_one_error: f64,
    pub full_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingRow {
    pub gamma: f64,
    pub sets: usize,
    pub max_ratio: f64,
    pub bound: f64,
    pub max_reference_excess: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstancyRow {
    pub alpha: f64,
    pub families: usize,
    pub max_relative_deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectRow {
    pub q: f64,
    pub families: usize,
    pub skipped: usize,
    pub min_defect: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripTables {
    pub mass: Vec<MassRow>,
    pub doubling: Vec<DoublingRow>,
    pub constancy: Vec<ConstancyRow>,
    pub defect: Vec<DefectRow>,
}

pub const MASS_TOL: f64 = 1e-6;
pub const REFERENCE_DOUBLING_SLACK: f64 = 1e-9;
pub const CONSTANCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Results {
    Verify(Vec<PropertyResult>),
    Estimate(Vec<GridReport>),
    StripCheck(StripTables),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Status {
    pub passed: bool,
    pub failed_checks: usize,
    pub flagged_instances: usize,
    pub surviving_flags: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallClock {
    pub started_unix_ms: u128,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub artifact_version: &'static str,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub results: Results,
    pub status: Status,
    pub wall_clock: WallClock,
}

impl Report {
    /// 0 on success, 1 when a check failed or a flagged instance survived
    /// review.
    pub fn exit_code(&self) -> u8 {
        if self.status.passed {
            0
        } else {
            1
        }
    }
}

/// Runs an experiment on a dedicated pool of `jobs` worker threads.
pub fn run(config: &ExperimentConfig, jobs: usize) -> Result<Report, RunError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunError::Config(format!("cannot start {jobs} workers: {e}")))?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let clock = Instant::now();
    let results = pool.install(|| -> Result<Results, RunError> {
        Ok(match config.experiment {
            ExperimentKind::Verify => Results::Verify(run_suite(
                &config.verify.modules,
                &config.verify.settings(),
                config.seed,
            )?),
            ExperimentKind::Estimate => Results::Estimate(run_estimates(config)?),
            ExperimentKind::StripCheck => Results::StripCheck(run_strip_check(config)?),
        })
    })?;
    let status = status_of(&results);
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION,
        experiment: config.experiment,
        seed: config.seed,
        config: config.clone(),
        results,
        status,
        wall_clock: WallClock { started_unix_ms: started, elapsed_ms: clock.elapsed().as_millis() },
    })
}

fn run_estimates(config: &ExperimentConfig) -> Result<Vec<GridReport>, RunError> {
    let mut out = Vec::new();
    for (i, block) in config.estimate.iter().enumerate() {
        let search = block.search(&config.instance, config.seed);
        for point in block.points() {
            let objective = Objective::new(block.objective, &point)?;
            let report = maximize(&objective, &search)?;
            out.push(GridReport { block: i, point, report });
        }
    }
    Ok(out)
}

fn run_strip_check(config: &ExperimentConfig) -> Result<StripTables, RunError> {
    let s = &config.strip;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut mass = Vec::new();
    for &g in &s.gammas {
        let side_one = boundary_measure(g, &BoundarySet::side(1)?)?;
        let full = boundary_measure(g, &BoundarySet::full())?;
        let (e1, e2) = ((side_one - g).abs(), (full - 1.0).abs());
        mass.push(MassRow {
            gamma: g,
            side_one,
            full,
            side_one_error: e1,
            full_error: e2,
            passed: e1 <= MASS_TOL && e2 <= MASS_TOL,
        });
    }

    let mut doubling = Vec::new();
    for &g in &s.gammas {
        let mut max_ratio: f64 = 0.0;
        let mut excess = f64::NEG_INFINITY;
        for _ in 0..s.sets {
            let a = random_boundary_set(&mut rng)?;
            max_ratio = max_ratio.max(doubling_ratio(g, &a)?.ratio);
            excess = excess.max(reference_measure(&dilate(&a))? - 2.0 * reference_measure(&a)?);
        }
        let bound = doubling_bound(g);
        doubling.push(DoublingRow {
            gamma: g,
            sets: s.sets,
            max_ratio,
            bound,
            max_reference_excess: excess,
            passed: max_ratio <= bound && excess <= REFERENCE_DOUBLING_SLACK,
        });
    }

    let grid: Vec<f64> = (0..s.grid_points)
        .map(|i| -3.0 + 6.0 * i as f64 / (s.grid_points.max(2) - 1) as f64)
        .collect();
    let mut constancy = Vec::new();
    for &alpha in &s.alphas {
        let mut worst: f64 = 0.0;
        for _ in 0..s.families {
            let n = rng.random_range(2..=s.max_dim);
            let d = random_positive(&mut rng, n, 0.1, 10.0);
            let x = hermitian_gaussian(&mut rng, n).into_matrix();
            let family = AnalyticFamily::new(d, x, alpha)?;
            let q = 1.0;
            let target = schatten_norm(&(family.x() * family.d().power(1.0 + alpha).as_matrix()), q)?;
            let profile = boundary_norm_profile(&family, q, &grid)?;
            for v in profile.norms0.iter().chain(&profile.norms1) {
                worst = worst.max((v - target).abs() / target);
            }
        }
        constancy.push(ConstancyRow {
            alpha,
            families: s.families,
            max_relative_deviation: worst,
            passed: worst <= CONSTANCY_TOL,
        });
    }

    let mut defect = Vec::new();
    for &q in &s.q {
        let mut min: Option<f64> = None;
        let mut skipped = 0;
        for i in 0..s.families {
            let alpha = s.alphas[i % s.alphas.len().max(1)];
            let spec = InstanceSpec {
                dim: rng.random_range(2..=s.max_dim),
                spectrum_law: SpectrumLaw::LogUniform,
                x_law: XLaw::GaussianComplex,
                seed: rng.random(),
            };
            let (d, x) = crate::estimator::random_instance(&spec)?;
            let family = AnalyticFamily::new(d, x, alpha)?;
            match convexity_defect(&family, alpha / (1.0 + alpha), q)? {
                Some(v) => min = Some(min.map_or(v, |m: f64| m.min(v))),
                None => skipped += 1,
            }
        }
        defect.push(DefectRow {
            q,
            families: s.families,
            skipped,
            min_defect: min,
            passed: min.is_none_or(|m| m > 0.0),
        });
    }

    Ok(StripTables { mass, doubling, constancy, defect })
}

fn status_of(results: &Results) -> Status {
    let (failed, flagged, surviving) = match results {
        Results::Verify(props) => (props.iter().filter(|p| !p.passed).count(), 0, 0),
        Results::Estimate(reports) => (
            0,
            reports.iter().map(|r| r.report.flagged_instances).sum(),
            reports.iter().map(|r| r.report.surviving_flags()).sum(),
        ),
        Results::StripCheck(t) => (
            t.mass.iter().filter(|r| !r.passed).count()
                + t.doubling.iter().filter(|r| !r.passed).count()
                + t.constancy.iter().filter(|r| !r.passed).count()
                + t.defect.iter().filter(|r| !r.passed).count(),
            0,
            0,
        ),
    };
    Status {
        passed: failed == 0 && surviving == 0,
        failed_checks: failed,
        flagged_instances: flagged,
        surviving_flags: surviving,
    }
}

pub fn to_json(report: &Report) -> Result<String, RunError> {
    serde_json::to_string_pretty(report).map_err(|e| RunError::Encode(e.to_string()))
}

/// Removes the `wall_clock` object, leaving the reproducible part.
pub fn strip_wall_clock(json: &str) -> Result<String, RunError> {
    let mut value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| RunError::Encode(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("wall_clock");
    }
    serde_json::to_string_pretty(&value).map_err(|e| RunError::Encode(e.to_string()))
}

#[derive(Debug, Serialize)]
struct EstimateRow<'a> {
    block: usize,
    objective: &'a str,
    alpha: Option<f64>,
    s: Option<f64>,
    r: Option<String>,
    p: Option<f64>,
    q: Option<f64>,
    eps: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    sense: &'a str,
    best_ratio: f64,
    plateau_improvement: f64,
    best_dim: usize,
    starts: usize,
    budget: usize,
    diagonal: bool,
    flagged_instances: usize,
    surviving_flags: usize,
    degenerate_skips: usize,
}

#[derive(Debug, Serialize)]
struct VerifyRow<'a> {
    module: String,
    property: &'a str,
    trials: usize,
    residual: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct StripRow {
    table: &'static str,
    parameter: &'static str,
    value: f64,
    metric: &'static str,
    measured: Option<f64>,
    limit: Option<f64>,
    passed: bool,
}

fn csv_error(e: impl fmt::Display) -> RunError {
    RunError::Encode(e.to_string())
}

pub fn to_csv(report: &Report) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match &report.results {
        Results::Estimate(reports) => {
            for g in reports {
                let r = &g.report;
                let sense = match r.sense {
                    crate::estimator::Sense::Maximize => "maximize",
                    crate::estimator::Sense::Minimize => "minimize",
                };
                w.serialize(EstimateRow {
                    block: g.block,
                    objective: r.objective.name(),
                    alpha: g.point.alpha,
                    s: g.point.s,
                    r: g.point.r.map(|e| e.to_string()),
                    p: g.point.p,
                    q: g.point.q,
                    eps: g.point.eps,
                    beta: g.point.beta,
                    gamma: g.point.gamma,
                    sense,
                    best_ratio: r.best_ratio,
                    plateau_improvement: r.plateau_improvement,
                    best_dim: r.best_dim,
                    starts: r.search.starts,
                    budget: r.search.budget,
                    diagonal: r.search.diagonal,
                    flagged_instances: r.flagged_instances,
                    surviving_flags: r.surviving_flags(),
                    degenerate_skips: r.degenerate_skips,
                })
                .map_err(csv_error)?;
            }
        }
        Results::Verify(props) => {
            for p in props {
                let module = serde_json::to_value(p.module)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default();
                w.serialize(VerifyRow {
                    module,
                    property: p.property,
                    trials: p.trials,
                    residual: p.residual,
                    tolerance: p.tolerance,
                    passed: p.passed,
                })
                .map_err(csv_error)?;
            }
        }
        Results::StripCheck(t) => {
            let mut rows = Vec::new();
            for r in &t.mass {
                rows.push(StripRow { table: "mass", parameter: "gamma", value: r.gamma, metric: "side_one_error", measured: Some(r.side_one_error), limit: Some(MASS_TOL), passed: r.passed });
                rows.push(StripRow { table: "mass", parameter: "gamma", value: r.gamma, metric: "full_error", measured: Some(r.full_error), limit: Some(MASS_TOL), passed: r.passed });
            }
            for r in &t.doubling {
                rows.push(StripRow { table: "doubling", parameter: "gamma", value: r.gamma, metric: "max_ratio", measured: Some(r.max_ratio), limit: Some(r.bound), passed: r.passed });
                rows.push(StripRow { table: "doubling", parameter: "gamma", value: r.gamma, metric: "max_reference_excess", measured: Some(r.max_reference_excess), limit: Some(REFERENCE_DOUBLING_SLACK), passed: r.passed });
            }
            for r in &t.constancy {
                rows.push(StripRow { table: "constancy", parameter: "alpha", value: r.alpha, metric: "max_relative_deviation", measured: Some(r.max_relative_deviation), limit: Some(CONSTANCY_TOL), passed: r.passed });
            }
            for r in &t.defect {
                rows.push(StripRow { table: "defect", parameter: "q", value: r.q, metric: "min_defect", measured: r.min_defect, limit: None, passed: r.passed });
            }
            for row in rows {
                w.serialize(row).map_err(csv_error)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

pub fn render(report: &Report, format: ReportFormat) -> Result<String, RunError> {
    match format {
        ReportFormat::Json => to_json(report),
        ReportFormat::Csv => to_csv(report),
    }
}

pub fn write_report(report: &Report, path: &Path, format: ReportFormat) -> Result<(), RunError> {
    let text = render(report, format)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| RunError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ESTIMATE: &str = r#"
experiment = "estimate"
seed = 7

[instance]
max_dim = 3
budget = 10

[[estimate]]
objective = "main"
alpha = [0.5, 1.0, 2.0]
s = 2.0
r = "inf"
"#;

    #[test]
    fn grid_expands_to_one_report_per_point() {
        let cfg = ExperimentConfig::from_toml(ESTIMATE).unwrap();
        let report = run(&cfg, 2).unwrap();
        match &report.results {
            Results::Estimate(r) => assert_eq!(r.len(), 3),
            other => panic!("{other:?}"),
        }
        assert!(report.status.passed);
        let json = to_json(&report).unwrap();
        assert!(json.contains("\"schema_version\": 1"));
        let csv = to_csv(&report).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(!csv.contains("witness"));
    }

    #[test]
    fn worker_count_does_not_change_report() {
        let cfg = ExperimentConfig::from_toml(ESTIMATE).unwrap();
        let a = strip_wall_clock(&to_json(&run(&cfg, 1).unwrap()).unwrap()).unwrap();
        let b = strip_wall_clock(&to_json(&run(&cfg, 4).unwrap()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_grid_names_the_key() {
        let text = ESTIMATE.replace("s = 2.0\n", "");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("`s`"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let text = ESTIMATE.replace("alpha = [0.5, 1.0, 2.0]", "alpha = [0.5, -1.0]");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");

        let err = ExperimentConfig::from_toml("experiment = \"estimate\"\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn strip_check_reports_side_mass() {
        let text = r#"
experiment = "strip-check"
seed = 3
[strip]
gammas = [0.5]
sets = 5
families = 1
alphas = [1.0]
q = [1.0]
grid_points = 5
max_dim = 2
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let report = run(&cfg, 1).unwrap();
        let Results::StripCheck(t) = &report.results else { panic!() };
        assert!((t.mass[0].side_one - 0.5).abs() < 1e-6);
        assert!(report.status.passed, "{:?}", t);
        assert!(to_csv(&report).unwrap().contains("doubling"));
    }

    #[test]
    fn verify_defaults_pass() {
        let text = "experiment = \"verify\"\nseed = 1\n[verify]\ntrials = 3\nmax_dim = 3\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let report = run(&cfg, 1).unwrap();
        assert_eq!(report.exit_code(), 0);
    }
}
