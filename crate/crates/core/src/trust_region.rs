//! Scalar trust-region subproblems and the adaptive radius controller.
//!
//! The radius is carried implicitly by a shift `mu`: the target for an
//! instance is `z = -g / (b + mu)`, and a larger `mu` means a smaller region.
//! Tree learners use a per-leaf shift `alpha * n + beta` instead of one `mu`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::exec::stable_sum;

/// Denominators below this magnitude are treated as zero in the ratios.
pub const RATIO_EPSILON: f64 = 1e-15;

pub const DEFAULT_EPS1: f64 = 0.9;
pub const DEFAULT_EPS2: f64 = 1.1;
pub const DEFAULT_GAMMA: f64 = 1.01;
pub const DEFAULT_ETA: f64 = 0.0;
pub const DEFAULT_MU_MAX: f64 = 1e6;

/// Controller constants: the acceptance band `[eps1, eps2]`, growth factor
/// `gamma`, admission threshold `eta` and the cap on the shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustParams {
    pub eps1: f64,
    /// May be `f64::INFINITY` to disable shrinking on over-performing steps.
    #[serde(with = "crate::model::f64_or_inf")]
    pub eps2: f64,
    pub gamma: f64,
    pub eta: f64,
    pub mu_max: f64,
}

impl Default for TrustParams {
    fn default() -> Self {
        TrustParams {
            eps1: DEFAULT_EPS1,
            eps2: DEFAULT_EPS2,
            gamma: DEFAULT_GAMMA,
            eta: DEFAULT_ETA,
            mu_max: DEFAULT_MU_MAX,
        }
    }
}

impl TrustParams {
    pub fn validate(&self) -> Result<()> {
        let TrustParams {
            eps1,
            eps2,
            gamma,
            eta,
            mu_max,
        } = *self;
        if !(0.0 <= eta && eta <= eps1 && eps1 < 1.0 && 1.0 < eps2) {
            return Err(Error::domain(format!(
                "trust parameters must satisfy 0 <= eta <= eps1 < 1 < eps2 \
                 (eta={eta}, eps1={eps1}, eps2={eps2})"
            )));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::domain(format!("gamma must be > 1, got {gamma}")));
        }
        if !(mu_max > 0.0 && mu_max.is_finite()) {
            return Err(Error::domain(format!("mu_max must be positive, got {mu_max}")));
        }
        Ok(())
    }

    /// Band that never triggers a radius change: `[0, +inf]`.
    pub fn frozen(gamma: f64, eta: f64) -> Self {
        TrustParams {
            eps1: eta.max(0.0),
            eps2: f64::INFINITY,
            gamma,
            eta,
            mu_max: DEFAULT_MU_MAX,
        }
    }

    pub fn in_band(&self, rho: f64) -> bool {
        !(rho < self.eps1 || rho > self.eps2)
    }
}

/// Mutable radius state. `mu` serves the generic-learner path, `alpha` and
/// `beta` the tree path; all three move together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub iteration: usize,
}

impl TrustState {
    pub fn new(mu: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("mu", mu), ("alpha", alpha), ("beta", beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(TrustState {
            mu,
            alpha,
            beta,
            iteration: 0,
        })
    }

    fn scale(&mut self, gamma: f64, cap: f64) {
        self.mu = (self.mu * gamma).min(cap.max(self.mu));
        self.alpha = (self.alpha * gamma).min(cap.max(self.alpha));
        self.beta = (self.beta * gamma).min(cap.max(self.beta));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioKind {
    /// Actual over model-predicted reduction.
    #[default]
    R1,
    /// Actual reduction over mean step magnitude.
    R2,
}

impl std::str::FromStr for RatioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r1" => Ok(RatioKind::R1),
            "r2" => Ok(RatioKind::R2),
            other => Err(Error::domain(format!("unknown ratio '{other}' (expected r1 or r2)"))),
        }
    }
}

/// Minimise `g z + b z^2 / 2` over `|z| <= r`.
///
/// Returns `(z, mu_i)` with `mu_i >= 0` such that `z = -g / (b + mu_i)`
/// whenever `g != 0`.
pub fn solve_scalar_subproblem(g: f64, b: f64, r: f64) -> Result<(f64, f64)> {
    ensure_finite("g", g)?;
    ensure_finite("b", b)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if g == 0.0 {
        // b >= 0: origin is optimal. b < 0: both endpoints tie, take +r.
        return Ok(if b >= 0.0 { (0.0, 0.0) } else { (r, -b) });
    }
    if b > 0.0 && (g / b).abs() <= r {
        return Ok((-g / b, 0.0));
    }
    let z = -g.signum() * r;
    Ok((z, g.abs() / r - b))
}

/// `z_i = -g_i / (b_i + mu)` for every instance.
pub fn target_values(grads: &[f64], quads: &[f64], mu: f64) -> Result<Vec<f64>> {
    if grads.len() != quads.len() {
        return Err(Error::domain(format!(
            "gradient/quadratic length mismatch: {} vs {}",
            grads.len(),
            quads.len()
        )));
    }
    grads
        .iter()
        .zip(quads)
        .enumerate()
        .map(|(i, (&g, &b))| {
            let d = b + mu;
            if d > 0.0 {
                Ok(-g / d)
            } else {
                Err(Error::InfeasibleRadius(format!(
                    "b + mu = {d} <= 0 at instance {i}; raise mu"
                )))
            }
        })
        .collect()
}

/// `-(1/n) sum(g z + b z^2 / 2)`: reduction promised by the quadratic model.
pub fn predicted_reduction(grads: &[f64], quads: &[f64], outputs: &[f64]) -> Result<f64> {
    let n = outputs.len();
    if n == 0 || grads.len() != n || quads.len() != n {
        return Err(Error::domain(format!(
            "ratio inputs must be non-empty and equal length (g={}, b={}, z={})",
            grads.len(),
            quads.len(),
            n
        )));
    }
    let s = stable_sum(
        grads
            .iter()
            .zip(quads)
            .zip(outputs)
            .map(|((&g, &b), &z)| g * z + 0.5 * b * z * z),
    );
    Ok(-s / n as f64)
}

fn guarded(numerator: f64, denominator: f64) -> f64 {
    if denominator <= 0.0 || denominator.abs() < RATIO_EPSILON || !denominator.is_finite() {
        0.0
    } else {
        numerator / denominator
    }
}

/// Actual over predicted reduction. Non-positive or vanishing predicted
/// reduction yields 0.
pub fn ratio_r1(loss_prev: f64, loss_new: f64, grads: &[f64], quads: &[f64], outputs: &[f64]) -> Result<f64> {
    let predicted = predicted_reduction(grads, quads, outputs)?;
    Ok(guarded(loss_prev - loss_new, predicted))
}

/// Actual reduction over mean `|z|`. Vanishing steps yield 0.
pub fn ratio_r2(loss_prev: f64, loss_new: f64, outputs: &[f64]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::domain("ratio needs at least one output"));
    }
    let mean_abs = stable_sum(outputs.iter().map(|z| z.abs())) / outputs.len() as f64;
    Ok(guarded(loss_prev - loss_new, mean_abs))
}

/// One step of the radius policy: shrink the region (grow the shifts by
/// `gamma`, capped at `mu_max`) whenever `rho` leaves `[eps1, eps2]`.
pub fn update_radius(state: TrustState, params: &TrustParams, rho: f64) -> TrustState {
    let mut next = state;
    if !params.in_band(rho) {
        next.scale(params.gamma, params.mu_max);
    }
    next.iteration += 1;
    next
}

/// Admission test for the learner just fitted.
pub fn admit(rho: f64, eta: f64) -> bool {
    rho > eta
}
