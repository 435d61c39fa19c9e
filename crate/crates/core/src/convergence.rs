//! One-instance boosting traces and checks of the rate recurrences.
//!
//! A single instance removes learner-fitting error, so each step is applied
//! exactly and the loss sequence can be tested against the recurrences
//! `e_t <= e_{t-1} - c e_{t-1}^2` (O(1/T)) and `e_t <= c e_{t-1}` (linear).

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::losses::{clamped_pair, grad_quad_unchecked, logistic_from_pair, loss_unchecked, ClampConfig, LossKind};

/// Ratio threshold below which a trace counts as linearly convergent.
pub const LINEAR_RATE_THRESHOLD: f64 = 1.0 - 1e-6;

/// Step rule for the scalar simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum StepRule {
    /// `-nu g`
    Gradient { nu: f64 },
    /// `-nu g / (h + lambda)`; fails when `h <= 0`.
    Newton { nu: f64, lambda: f64 },
    /// `-g / (h + mu)` with `mu` held fixed.
    TrustRegion { mu: f64 },
}

impl StepRule {
    pub fn name(&self) -> &'static str {
        match self {
            StepRule::Gradient { .. } => "gradient",
            StepRule::Newton { .. } => "newton",
            StepRule::TrustRegion { .. } => "trboost",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossTrace {
    pub rule: StepRule,
    pub loss: LossKind,
    pub y: f64,
    pub f0: f64,
    /// `losses[t]` is the loss after `t` steps; `losses[0]` is at `f0`.
    pub losses: Vec<f64>,
    /// Raw scores matching `losses`.
    pub scores: Vec<f64>,
    /// Gradient and quadratic coefficient at `scores[t]`, for `t < iters`.
    pub grads: Vec<f64>,
    pub quads: Vec<f64>,
}

/// Apply `iters` exact steps of `rule` to one instance.
pub fn run_one_instance(
    loss: LossKind,
    y: f64,
    f0: f64,
    rule: StepRule,
    iters: usize,
    clamp: ClampConfig,
) -> Result<LossTrace> {
    if iters == 0 {
        return Err(Error::domain("iters must be >= 1"));
    }
    ensure_finite("f0", f0)?;
    loss.validate_label(y)?;
    let mut f = f0;
    let mut trace = LossTrace {
        rule,
        loss,
        y,
        f0,
        losses: vec![loss_unchecked(loss, y, f)],
        scores: vec![f],
        grads: Vec::with_capacity(iters),
        quads: Vec::with_capacity(iters),
    };
    for t in 0..iters {
        let (g, h) = grad_quad_unchecked(loss, y, f, clamp);
        let step = match rule {
            StepRule::Gradient { nu } => -nu * g,
            StepRule::Newton { nu, lambda } => {
                if !(h > 0.0) {
                    return Err(Error::HessianNotPositive(format!(
                        "h = {h} at step {t} for loss {loss}"
                    )));
                }
                -nu * g / (h + lambda)
            }
            StepRule::TrustRegion { mu } => {
                let d = h + mu;
                if !(d > 0.0) {
                    return Err(Error::InfeasibleRadius(format!("h + mu = {d} at step {t}")));
                }
                -g / d
            }
        };
        f += step;
        trace.grads.push(g);
        trace.quads.push(h);
        trace.scores.push(f);
        trace.losses.push(loss_unchecked(loss, y, f));
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SublinearCheck {
    /// Largest `c` with `e_t <= e_{t-1} - c e_{t-1}^2` for every step.
    pub c: f64,
    /// `e_T <= e_0 / (1 + c e_0 T)`.
    pub bound_holds: bool,
    /// First index where the trace is non-positive or increases.
    pub violation: Option<usize>,
    pub passed: bool,
}

pub fn check_sublinear(trace: &[f64]) -> SublinearCheck {
    let fail = |at: usize| SublinearCheck {
        c: 0.0,
        bound_holds: false,
        violation: Some(at),
        passed: false,
    };
    if trace.len() < 2 {
        return fail(0);
    }
    if let Some(i) = trace.iter().position(|&e| !(e > 0.0) || !e.is_finite()) {
        return fail(i);
    }
    if let Some(t) = (1..trace.len()).find(|&t| trace[t] > trace[t - 1]) {
        return fail(t);
    }
    let c = (1..trace.len())
        .map(|t| (trace[t - 1] - trace[t]) / (trace[t - 1] * trace[t - 1]))
        .fold(f64::INFINITY, f64::min);
    let e0 = trace[0];
    let steps = (trace.len() - 1) as f64;
    let bound_holds = *trace.last().unwrap() <= e0 / (1.0 + c * e0 * steps);
    SublinearCheck {
        c,
        bound_holds,
        violation: None,
        passed: c > 0.0 && bound_holds,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearCheck {
    /// Largest ratio `e_t / e_{t-1}`.
    pub c: f64,
    /// `e_T <= e_0 c^T`.
    pub bound_holds: bool,
    pub passed: bool,
}

pub fn check_linear(trace: &[f64]) -> LinearCheck {
    if trace.len() < 2 || trace.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return LinearCheck {
            c: f64::INFINITY,
            bound_holds: false,
            passed: false,
        };
    }
    let c = (1..trace.len()).map(|t| trace[t] / trace[t - 1]).fold(0.0f64, f64::max);
    let steps = (trace.len() - 1) as i32;
    let e_last = *trace.last().unwrap();
    // Compare in log space so long traces do not underflow c^T.
    let bound_holds = e_last.ln() <= trace[0].ln() + steps as f64 * c.ln() + 1e-12;
    LinearCheck {
        c,
        bound_holds,
        passed: c < LINEAR_RATE_THRESHOLD && bound_holds,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixReport {
    pub points: usize,
    /// `max(l - g^2/h)` over the grid; non-positive when the comparison holds.
    pub comparison_violation: f64,
    /// `max(2 rho |g/h| - 1)`; non-positive when the Newton step is bounded.
    pub newton_step_violation: f64,
}

impl AppendixReport {
    pub fn passed(&self, slack: f64) -> bool {
        self.comparison_violation <= slack && self.newton_step_violation <= slack
    }
}

/// Evaluate `g^2/h >= l` and `|g/h| <= 1/(2 rho)` for the clamped logistic
/// loss at every grid point and both labels.
pub fn check_appendix_inequalities(clamp: ClampConfig, grid: &[f64]) -> Result<AppendixReport> {
    let mut cmp = f64::NEG_INFINITY;
    let mut newton = f64::NEG_INFINITY;
    for &f in grid {
        ensure_finite("grid point", f)?;
        for y in [0.0, 1.0] {
            let (g, h) = grad_quad_unchecked(LossKind::Logistic, y, f, clamp);
            let (p, q) = clamped_pair(y, f, clamp);
            let l = logistic_from_pair(y, p, q);
            cmp = cmp.max(l - g * g / h);
            newton = newton.max(2.0 * clamp.rho() * (g / h).abs() - 1.0);
        }
    }
    Ok(AppendixReport {
        points: 2 * grid.len(),
        comparison_violation: cmp,
        newton_step_violation: newton,
    })
}

/// `count` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
