//! Schatten p-(quasi)norms for `0 < p ≤ ∞` and the exponent bookkeeping
//! of the Hölder relations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{singular_values, ComplexMatrix, SINGULAR_ZERO_REL};

/// A Schatten exponent: a positive real or the operator-norm slot `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ExponentRepr", try_from = "ExponentRepr")]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Schatten exponent must be positive and finite, got {p}"
            )));
        }
        Ok(Exponent::Finite(p))
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinite => 0.0,
        }
    }

    pub fn from_reciprocal(inv: f64) -> Result<Self> {
        if inv == 0.0 {
            Ok(Exponent::Infinite)
        } else {
            Self::finite(1.0 / inv)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            Exponent::Finite(p) => Self::finite(p),
            Exponent::Infinite => Ok(self),
        }
    }
}

impl From<f64> for Exponent {
    fn from(p: f64) -> Self {
        if p == f64::INFINITY {
            Exponent::Infinite
        } else {
            Exponent::Finite(p)
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("not an exponent: {other:?}")))
                .and_then(Self::finite),
        }
    }
}

/// Wire form: a number, or a string such as `"inf"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl From<Exponent> for ExponentRepr {
    fn from(e: Exponent) -> Self {
        match e {
            Exponent::Finite(p) => ExponentRepr::Number(p),
            Exponent::Infinite => ExponentRepr::Text("inf".into()),
        }
    }
}

impl TryFrom<ExponentRepr> for Exponent {
    type Error = Error;
    fn try_from(r: ExponentRepr) -> Result<Self> {
        match r {
            ExponentRepr::Number(p) => Exponent::finite(p),
            ExponentRepr::Text(s) => s.parse(),
        }
    }
}

/// `(α, s, r)` with derived `1/p = 1/s + 1/r` and `1/q = (1+α)/s + 1/r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentConfig {
    pub alpha: f64,
    pub s: f64,
    pub r: Exponent,
    pub p: f64,
    pub q: f64,
}

impl ExponentConfig {
    pub fn new(alpha: f64, s: f64, r: Exponent) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "s must lie in (0, inf), got {s}"
            )));
        }
        let r = r.validate()?;
        let p = 1.0 / (1.0 / s + r.reciprocal());
        let q = 1.0 / ((1.0 + alpha) / s + r.reciprocal());
        debug_assert!(q < p);
        Ok(Self { alpha, s, r, p, q })
    }

    /// The interior point `α/(1+α)` of the strip used with this configuration.
    pub fn strip_point(&self) -> f64 {
        self.alpha / (1.0 + self.alpha)
    }
}

/// `(Σ σ_i^p)^{1/p}` of a given singular value list.
pub fn schatten_norm_of(singular_values: &[f64], p: Exponent) -> Result<f64> {
    let p = p.validate()?;
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0.0);
    }
    match p {
        Exponent::Infinite => Ok(smax),
        Exponent::Finite(p) => {
            // Scaled power sum: σ/σ_max ∈ [0, 1] never overflows under any p.
            let cutoff = SINGULAR_ZERO_REL * smax;
            let sum: f64 = singular_values
                .iter()
                .filter(|&&s| s > cutoff)
                .map(|&s| (s / smax).powf(p))
                .sum();
            Ok(smax * sum.powf(1.0 / p))
        }
    }
}

/// Schatten p-(quasi)norm of a square matrix.
pub fn schatten_norm(a: &ComplexMatrix, p: impl Into<Exponent>) -> Result<f64> {
    let p = p.into().validate()?;
    schatten_norm_of(&singular_values(a)?, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norms() {
        for n in 1..5 {
            let i = ComplexMatrix::identity(n);
            for p in [0.3, 0.5, 1.0, 2.0, 3.7] {
                let expected = (n as f64).powf(1.0 / p);
                let got = schatten_norm(&i, p).unwrap();
                assert!((got - expected).abs() <= 1e-13 * expected, "n={n} p={p}");
            }
            assert_eq!(schatten_norm(&i, Exponent::Infinite).unwrap(), 1.0);
        }
    }

    #[test]
    fn pythagorean_diagonal() {
        let a = ComplexMatrix::from_real_diagonal(&[3.0, 4.0]);
        assert!((schatten_norm(&a, 2.0).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_exponent() {
        let a = ComplexMatrix::identity(2);
        assert!(schatten_norm(&a, 0.0).is_err());
        assert!(schatten_norm(&a, -1.0).is_err());
        assert!(schatten_norm(&a, f64::NAN).is_err());
    }

    #[test]
    fn tiny_exponent_does_not_overflow() {
        let a = ComplexMatrix::from_real_diagonal(&[1e6, 2e6, 3e6]);
        let v = schatten_norm(&a, 0.01).unwrap();
        assert!(v.is_finite());
        let expected = 3e6 * ((1.0f64 / 3.0).powf(0.01) + (2.0f64 / 3.0).powf(0.01) + 1.0).powf(100.0);
        assert!((v - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn exponent_config_relations() {
        let cfg = ExponentConfig::new(1.0, 4.0 / 3.0, Exponent::Infinite).unwrap();
        assert!((cfg.p - 4.0 / 3.0).abs() < 1e-15);
        assert!((cfg.q - 2.0 / 3.0).abs() < 1e-15);
        let cfg = ExponentConfig::new(0.5, 2.0, Exponent::Finite(2.0)).unwrap();
        assert!((1.0 / cfg.p - 1.0).abs() < 1e-15);
        assert!((1.0 / cfg.q - 1.25).abs() < 1e-15);
        assert!(ExponentConfig::new(0.0, 1.0, Exponent::Infinite).is_err());
        assert!(ExponentConfig::new(1.0, f64::INFINITY, Exponent::Infinite).is_err());
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinite);
        assert_eq!("0.5".parse::<Exponent>().unwrap(), Exponent::Finite(0.5));
        assert!("-2".parse::<Exponent>().is_err());
        let parsed: Vec<Exponent> = serde_json::from_str(r#"[2.5, "inf", "3"]"#).unwrap();
        assert_eq!(parsed, vec![Exponent::Finite(2.5), Exponent::Infinite, Exponent::Finite(3.0)]);
        assert_eq!(serde_json::to_string(&parsed).unwrap(), r#"[2.5,"inf",3.0]"#);
        assert!(serde_json::from_str::<Exponent>("-1.0").is_err());
    }
}
