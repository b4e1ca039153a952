//! Mazur maps and the inequality ratios whose suprema are the unknown
//! constants of the anticommutator and Mazur-map estimates.
//!
//! Every ratio is returned as a [`RatioOutcome`]. A denominator that is
//! negligible against its natural scale is never divided: if the numerator
//! vanishes too the instance is [`RatioOutcome::Degenerate`] (a 0/0 case,
//! skipped), otherwise it is a flagged [`RatioOutcome::NearKernel`]
//! sentinel. The inequalities forbid genuine blow-up, so a sentinel is
//! either numerical degeneracy or a counterexample candidate and always
//! needs review.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    divided_difference_kernel, mixed_kernel_map, power_divided_difference, rx_kernel,
    schur_multiply, t_map, TMapParams,
};
use crate::matcore::{
    anticommutator, commutator, svd, ComplexMatrix, PositiveDefiniteMatrix,
};
use crate::schatten::{schatten_norm, Exponent, ExponentConfig};

/// Relative size below which a denominator counts as zero.
pub const SENTINEL_REL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioOutcome {
    Finite(f64),
    /// Numerator and denominator both negligible (0/0).
    Degenerate,
    /// Denominator negligible, numerator not: the `+∞` sentinel.
    NearKernel { numerator: f64, denominator: f64 },
}

impl RatioOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            RatioOutcome::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_flagged(&self) -> bool {
        matches!(self, RatioOutcome::NearKernel { .. })
    }

    /// Classifies `numerator / denominator` against the natural magnitudes
    /// of both sides.
    pub fn classify(numerator: f64, denominator: f64, num_scale: f64, den_scale: f64) -> Self {
        if denominator > SENTINEL_REL * den_scale && denominator > 0.0 {
            return RatioOutcome::Finite(numerator / denominator);
        }
        if numerator <= SENTINEL_REL * num_scale {
            RatioOutcome::Degenerate
        } else {
            RatioOutcome::NearKernel {
                numerator,
                denominator,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MazurVariant {
    /// `M_{p,q}(x) − M_{p,q}(y)`.
    Map,
    /// `|x|^{p/q} − |y|^{p/q}`.
    AbsPower,
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exponents must be positive, got p={p}, q={q}"
        )));
    }
    Ok(())
}

fn check_q_below_p(p: f64, q: f64) -> Result<()> {
    check_pq(p, q)?;
    if !(q < p) {
        return Err(Error::InvalidParameter(format!(
            "inequality requires 0 < q < p, got p={p}, q={q}"
        )));
    }
    Ok(())
}

fn op_norm(a: &ComplexMatrix) -> Result<f64> {
    schatten_norm(a, Exponent::Infinite)
}

/// `M_{p,q}(f) = f|f|^{p/q−1} = U|f|^{p/q}` with `U` the polar isometry.
pub fn mazur_map(f: &ComplexMatrix, p: f64, q: f64) -> Result<ComplexMatrix> {
    check_pq(p, q)?;
    let e = p / q;
    Ok(svd(f)?.map_support(|s| s.powf(e)))
}

/// `|f|^e` for `e > 0`.
pub fn abs_power(f: &ComplexMatrix, e: f64) -> Result<ComplexMatrix> {
    if !(e > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "power must be positive, got {e}"
        )));
    }
    Ok(svd(f)?.map_modulus(|s| s.powf(e)).into_matrix())
}

/// `‖x d^{1+α}‖_q / (‖d‖_s^α ‖dx + xd‖_p)`.
pub fn main_ratio(
    d: &PositiveDefiniteMatrix,
    x: &ComplexMatrix,
    cfg: &ExponentConfig,
) -> Result<RatioOutcome> {
    d.as_matrix().check_same_dim(x)?;
    let dm = d.as_matrix();
    let numerator = schatten_norm(&(x * d.power(1.0 + cfg.alpha).as_matrix()), cfg.q)?;
    let d_s = schatten_norm(dm, cfg.s)?.powf(cfg.alpha);
    let anti = schatten_norm(&anticommutator(dm, x)?, cfg.p)?;
    let d_inf = op_norm(dm)?;
    let num_scale = d_inf.powf(1.0 + cfg.alpha) * schatten_norm(x, cfg.q)?;
    let den_scale = d_s * 2.0 * d_inf * schatten_norm(x, cfg.p)?;
    Ok(RatioOutcome::classify(numerator, d_s * anti, num_scale, den_scale))
}

/// `‖xd‖_p / ((‖d‖_s ‖x‖_r)^ε ‖dx + xd‖_p^{1−ε})` with `1/p = 1/s + 1/r`.
pub fn interp_corollary_ratio(
    d: &PositiveDefiniteMatrix,
    x: &ComplexMatrix,
    eps: f64,
    s: f64,
    r: Exponent,
) -> Result<RatioOutcome> {
    d.as_matrix().check_same_dim(x)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )));
    }
    let s_exp = Exponent::finite(s)?;
    let p = 1.0 / (s_exp.reciprocal() + r.reciprocal());
    let dm = d.as_matrix();
    let numerator = schatten_norm(&(x * dm), p)?;
    let weight = (schatten_norm(dm, s)? * schatten_norm(x, r)?).powf(eps);
    let anti = schatten_norm(&anticommutator(dm, x)?, p)?;
    let d_inf = op_norm(dm)?;
    let x_p = schatten_norm(x, p)?;
    let num_scale = d_inf * x_p;
    let den_scale = weight * (2.0 * d_inf * x_p).powf(1.0 - eps);
    Ok(RatioOutcome::classify(
        numerator,
        weight * anti.powf(1.0 - eps),
        num_scale,
        den_scale,
    ))
}

/// `‖x d^{p/q} ± d^{p/q} x‖_q / (‖xd ± dx‖_p ‖d‖_p^{p/q−1})`.
pub fn eq1_ratio(
    d: &PositiveDefiniteMatrix,
    x: &ComplexMatrix,
    p: f64,
    q: f64,
    sign: Sign,
) -> Result<RatioOutcome> {
    check_q_below_p(p, q)?;
    d.as_matrix().check_same_dim(x)?;
    let e = p / q;
    let dm = d.as_matrix();
    let de = d.power(e).into_matrix();
    let combine = |a: &ComplexMatrix| -> Result<ComplexMatrix> {
        match sign {
            Sign::Plus => anticommutator(a, x),
            // xa − ax; the norm is sign-insensitive.
            Sign::Minus => commutator(a, x),
        }
    };
    let numerator = schatten_norm(&combine(&de)?, q)?;
    let lower = schatten_norm(&combine(dm)?, p)?;
    let d_p = schatten_norm(dm, p)?.powf(e - 1.0);
    let d_inf = op_norm(dm)?;
    let num_scale = 2.0 * d_inf.powf(e) * schatten_norm(x, q)?;
    let den_scale = 2.0 * d_inf * schatten_norm(x, p)? * d_p;
    Ok(RatioOutcome::classify(numerator, lower * d_p, num_scale, den_scale))
}

/// `‖x^{p/q} − y^{p/q}‖_q / (max(‖x‖_p, ‖y‖_p)^{p/q−1} ‖x − y‖_p)`.
pub fn powers_diff_ratio(
    x: &PositiveDefiniteMatrix,
    y: &PositiveDefiniteMatrix,
    p: f64,
    q: f64,
) -> Result<RatioOutcome> {
    check_q_below_p(p, q)?;
    x.as_matrix().check_same_dim(y.as_matrix())?;
    let e = p / q;
    let diff_pow = x.power(e).into_matrix();
    let diff_pow = &diff_pow - y.power(e).as_matrix();
    difference_ratio(x.as_matrix(), y.as_matrix(), &diff_pow, p, q)
}

/// Lipschitz ratio of the Mazur map (or of `|·|^{p/q}`) on a pair.
pub fn mazur_lipschitz_ratio(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    p: f64,
    q: f64,
    variant: MazurVariant,
) -> Result<RatioOutcome> {
    check_q_below_p(p, q)?;
    x.check_same_dim(y)?;
    let (fx, fy) = match variant {
        MazurVariant::Map => (mazur_map(x, p, q)?, mazur_map(y, p, q)?),
        MazurVariant::AbsPower => (abs_power(x, p / q)?, abs_power(y, p / q)?),
    };
    difference_ratio(x, y, &(&fx - &fy), p, q)
}

fn difference_ratio(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    image_diff: &ComplexMatrix,
    p: f64,
    q: f64,
) -> Result<RatioOutcome> {
    let e = p / q;
    let radius = schatten_norm(x, p)?.max(schatten_norm(y, p)?);
    let numerator = schatten_norm(image_diff, q)?;
    let gap = schatten_norm(&(x - y), p)?;
    let n = x.dim() as f64;
    // ‖·‖_q ≤ n^{1/q − 1/p} ‖·‖_p on n×n matrices.
    let num_scale = n.powf(1.0 / q) * radius.powf(e);
    let den_scale = radius.powf(e - 1.0) * radius;
    Ok(RatioOutcome::classify(
        numerator,
        radius.powf(e - 1.0) * gap,
        num_scale,
        den_scale,
    ))
}

/// `‖T^d_{β,γ}(δ)‖_q / (‖δ‖_p ‖d‖_s^α)` with `α = 2β + γ − 1 > 0`,
/// `1/p = 1/s + 1/r` and `1/q = (1+α)/s + 1/r`.
pub fn tmap_ratio(
    d: &PositiveDefiniteMatrix,
    delta: &ComplexMatrix,
    params: TMapParams,
    s: f64,
    r: Exponent,
) -> Result<RatioOutcome> {
    let cfg = ExponentConfig::new(params.alpha(), s, r)?;
    let image = t_map(d, params, delta)?;
    let numerator = schatten_norm(&image, cfg.q)?;
    let delta_p = schatten_norm(delta, cfg.p)?;
    let d_s = schatten_norm(d.as_matrix(), cfg.s)?.powf(cfg.alpha);
    let d_inf = op_norm(d.as_matrix())?;
    let kernel_top = divided_difference_kernel(d.eigenvalues(), params)?.max_entry();
    let num_scale = kernel_top * schatten_norm(delta, cfg.q)?;
    let den_scale = schatten_norm(delta, Exponent::Infinite)? * d_inf.powf(cfg.alpha);
    Ok(RatioOutcome::classify(numerator, delta_p * d_s, num_scale, den_scale))
}

/// `‖xd‖_p / ‖dx + xd‖_p`: the triangular-truncation probe.
pub fn triangular_ratio(
    d: &PositiveDefiniteMatrix,
    x: &ComplexMatrix,
    p: f64,
) -> Result<RatioOutcome> {
    d.as_matrix().check_same_dim(x)?;
    let dm = d.as_matrix();
    let numerator = schatten_norm(&(x * dm), p)?;
    let anti = schatten_norm(&anticommutator(dm, x)?, p)?;
    let scale = op_norm(dm)? * schatten_norm(x, p)?;
    Ok(RatioOutcome::classify(numerator, anti, scale, 2.0 * scale))
}

/// `‖K ∘ X‖_∞ / ‖X‖_∞` for the RX kernel of `values`.
pub fn rx_ratio(values: &[f64], alpha: f64, x: &ComplexMatrix) -> Result<RatioOutcome> {
    let k = rx_kernel(values, alpha)?;
    let numerator = op_norm(&schur_multiply(&k, x)?)?;
    let denominator = op_norm(x)?;
    let scale = x.frobenius();
    Ok(RatioOutcome::classify(numerator, denominator, scale, scale))
}

/// Outcome of the three-term decomposition check for `x^{1+t} − y^{1+t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionCheck {
    /// `‖x^{1+t} − y^{1+t} − x^t(x−y) − (x−y)y^t + z‖_∞`.
    pub residual: f64,
    /// `‖z_mixed − z_block‖_∞` between the two constructions of `z`.
    pub z_agreement: f64,
    /// `max(‖x^{1+t}‖_∞, ‖y^{1+t}‖_∞)`, the magnitude the residual is measured against.
    pub scale: f64,
    /// `‖z‖_∞`.
    pub z_norm: f64,
}

impl DecompositionCheck {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.scale.max(1e-300)
    }

    pub fn relative_z_agreement(&self) -> f64 {
        self.z_agreement / self.scale.max(1e-300)
    }
}

/// Checks `x^{1+t} − y^{1+t} = x^t(x−y) + (x−y)y^t − z` where
/// `z = Σ_ij (x_i^{1−t} − y_j^{1−t})/(x_i − y_j) · x_i^t y_j^t P_i(x−y)Q_j`,
/// building `z` both from the two-spectrum multiplier and as the corner
/// block of `T^d_{t,1−t}` applied on `d = diag(x, y)`.
pub fn decomposition_residual(
    x: &PositiveDefiniteMatrix,
    y: &PositiveDefiniteMatrix,
    t: f64,
) -> Result<DecompositionCheck> {
    if !(t > 0.0 && t < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "decomposition needs t in (0, 1/2), got {t}"
        )));
    }
    let xm = x.as_matrix();
    let ym = y.as_matrix();
    xm.check_same_dim(ym)?;
    let diff = xm - ym;

    let kernel = |a: f64, b: f64| power_divided_difference(a, b, 1.0 - t) * (a * b).powf(t);
    let z = mixed_kernel_map(x, y, kernel, &diff)?;

    let x_big = x.power(1.0 + t).into_matrix();
    let y_big = y.power(1.0 + t).into_matrix();
    let lhs = &x_big - &y_big;
    let rhs_left = x.power(t).as_matrix() * &diff;
    let rhs_right = &diff * y.power(t).as_matrix();
    let mut rest = &(&lhs - &rhs_left) - &rhs_right;
    rest += &z;
    let residual = op_norm(&rest)?;

    let zero = ComplexMatrix::zeros(xm.dim());
    let d = PositiveDefiniteMatrix::new(ComplexMatrix::block2(xm, &zero, &zero, ym)?)?;
    let delta = ComplexMatrix::block2(&zero, &diff, &zero, &zero)?;
    let z_block = t_map(&d, TMapParams::new(t, 1.0 - t)?, &delta)?.sub_block(0, 1);
    let z_agreement = op_norm(&(&z - &z_block))?;

    Ok(DecompositionCheck {
        residual,
        z_agreement,
        scale: op_norm(&x_big)?.max(op_norm(&y_big)?),
        z_norm: op_norm(&z)?,
    })
}
