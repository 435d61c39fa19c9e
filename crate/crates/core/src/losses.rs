//! Instance-wise losses with first derivative and quadratic coefficient.
//!
//! The logistic loss works on raw scores `F` mapped to probabilities by
//! `psi(F) = e^F / (e^F + e^-F)`, i.e. a sigmoid in `2F`. Its gradient and
//! Hessian are `2(p - y)` and `4p(1 - p)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub const DEFAULT_CLAMP_RHO: f64 = 1e-4;
pub const DEFAULT_HUBER_DELTA: f64 = 1.0;

/// Loss kind. Parsed from and printed as `logloss | l2 | l1 | huber:<delta>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LossKind {
    Logistic,
    Squared,
    Absolute,
    Huber { delta: f64 },
}

impl LossKind {
    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::domain(format!("huber delta must be > 0, got {delta}")));
        }
        Ok(LossKind::Huber { delta })
    }

    pub fn is_classification(self) -> bool {
        matches!(self, LossKind::Logistic)
    }

    /// Whether the quadratic coefficient can be zero for some instance.
    pub fn may_have_zero_curvature(self) -> bool {
        matches!(self, LossKind::Absolute | LossKind::Huber { .. })
    }

    pub fn validate_label(self, y: f64) -> Result<()> {
        ensure_finite("label", y)?;
        if self == LossKind::Logistic && y != 0.0 && y != 1.0 {
            return Err(Error::domain(format!(
                "logistic loss needs labels in {{0, 1}}, got {y}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Logistic => f.write_str("logloss"),
            LossKind::Squared => f.write_str("l2"),
            LossKind::Absolute => f.write_str("l1"),
            LossKind::Huber { delta } => write!(f, "huber:{delta}"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logloss" => Ok(LossKind::Logistic),
            "l2" => Ok(LossKind::Squared),
            "l1" => Ok(LossKind::Absolute),
            "huber" => LossKind::huber(DEFAULT_HUBER_DELTA),
            other => match other.strip_prefix("huber:") {
                Some(d) => {
                    let delta: f64 = d.parse().map_err(|_| Error::domain(format!("bad huber delta '{d}'")))?;
                    LossKind::huber(delta)
                }
                None => Err(Error::domain(format!(
                    "unknown loss '{other}' (expected logloss, l2, l1 or huber:<delta>)"
                ))),
            },
        }
    }
}

impl TryFrom<String> for LossKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LossKind> for String {
    fn from(k: LossKind) -> String {
        k.to_string()
    }
}

/// Probability clamp applied to the logistic loss before taking derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampConfig {
    rho: f64,
}

impl ClampConfig {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 0.5) {
            return Err(Error::domain(format!("clamp rho must lie in (0, 0.5), got {rho}")));
        }
        Ok(ClampConfig { rho })
    }

    pub fn rho(self) -> f64 {
        self.rho
    }
}

impl Default for ClampConfig {
    fn default() -> Self {
        ClampConfig { rho: DEFAULT_CLAMP_RHO }
    }
}

/// `psi(F) = 1 / (1 + e^{-2F})`.
pub fn probability(f: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * f).exp())
}

/// `(p, 1 - p)` with the complement computed directly so it keeps full
/// relative precision when `p` is close to one.
fn probability_pair(f: f64) -> (f64, f64) {
    (probability(f), probability(-f))
}

/// Logistic probabilities after the label-dependent clamp.
pub(crate) fn clamped_pair(y: f64, f: f64, clamp: ClampConfig) -> (f64, f64) {
    let rho = clamp.rho();
    let (p, q) = probability_pair(f);
    if y == 1.0 && p < rho {
        (rho, 1.0 - rho)
    } else if y == 0.0 && q < rho {
        (1.0 - rho, rho)
    } else {
        (p, q)
    }
}

fn check_inputs(kind: LossKind, y: f64, f: f64) -> Result<()> {
    ensure_finite("raw score", f)?;
    kind.validate_label(y)
}

/// Logistic loss for given probability pair: `y log(1/p) + (1-y) log(1/q)`.
pub(crate) fn logistic_from_pair(y: f64, p: f64, q: f64) -> f64 {
    if y == 1.0 {
        -p.ln()
    } else {
        -q.ln()
    }
}

/// `l(y, F)`.
pub fn loss_value(kind: LossKind, y: f64, f: f64) -> Result<f64> {
    check_inputs(kind, y, f)?;
    Ok(loss_unchecked(kind, y, f))
}

pub(crate) fn loss_unchecked(kind: LossKind, y: f64, f: f64) -> f64 {
    match kind {
        LossKind::Logistic => {
            // log(1/p) = log(1 + e^{-2F}) for y = 1, computed without overflow.
            let s = if y == 1.0 { -2.0 * f } else { 2.0 * f };
            softplus(s)
        }
        LossKind::Squared => (f - y) * (f - y),
        LossKind::Absolute => (f - y).abs(),
        LossKind::Huber { delta } => {
            let r = (f - y).abs();
            if r <= delta {
                0.5 * r * r
            } else {
                delta * (r - 0.5 * delta)
            }
        }
    }
}

/// `log(1 + e^s)` without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Gradient `g` and quadratic coefficient `b` of the loss at `F`.
pub fn grad_quad(kind: LossKind, y: f64, f: f64, clamp: ClampConfig) -> Result<(f64, f64)> {
    check_inputs(kind, y, f)?;
    Ok(grad_quad_unchecked(kind, y, f, clamp))
}

pub(crate) fn grad_quad_unchecked(kind: LossKind, y: f64, f: f64, clamp: ClampConfig) -> (f64, f64) {
    match kind {
        LossKind::Logistic => {
            let (p, q) = clamped_pair(y, f, clamp);
            // 2(p - y), using q = 1 - p on the y = 1 branch.
            let g = if y == 1.0 { -2.0 * q } else { 2.0 * p };
            (g, 4.0 * p * q)
        }
        LossKind::Squared => (2.0 * (f - y), 2.0),
        LossKind::Absolute => {
            let r = f - y;
            let g = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            (g, 0.0)
        }
        LossKind::Huber { delta } => {
            let r = f - y;
            if r.abs() <= delta {
                (r, 1.0)
            } else {
                (r.clamp(-delta, delta), 0.0)
            }
        }
    }
}
