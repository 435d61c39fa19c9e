//! Boosting drivers: trust-region boosting with selective admission, and the
//! first-order (GBDT) and Newton (XGBoost-style) baselines.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, ErrorKind, Result};
use crate::exec::{map_range, stable_sum, Execution};
use crate::learners::{fit_generic, GenericLearner};
use crate::losses::{grad_quad_unchecked, loss_unchecked, probability, ClampConfig, LossKind};
use crate::matrix::FeatureMatrix;
use crate::tree::{fit_tree_with, LeafRule, TreeConfig, TreeNode};
use crate::trust_region::{
    admit, predicted_reduction, ratio_r1, ratio_r2, target_values, update_radius, RatioKind, TrustParams, TrustState,
};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 10.0;
pub const DEFAULT_MU: f64 = 1.0;
pub const DEFAULT_N_ESTIMATORS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LearnerConfig {
    Tree(TreeConfig),
    Linear,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::Tree(TreeConfig::default())
    }
}

/// Boosting method. Baselines keep a learning rate `nu`; trust-region
/// boosting controls its step through the radius instead.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum BaselineKind {
    #[default]
    #[serde(rename = "trboost")]
    TrBoost,
    Gbdt {
        nu: f64,
    },
    #[serde(rename = "newton")]
    NewtonGbm {
        nu: f64,
        lambda: f64,
    },
}

impl BaselineKind {
    pub fn validate(&self) -> Result<()> {
        let check_nu = |nu: f64| {
            if nu > 0.0 && nu <= 1.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("learning rate must lie in (0, 1], got {nu}")))
            }
        };
        match *self {
            BaselineKind::TrBoost => Ok(()),
            BaselineKind::Gbdt { nu } => check_nu(nu),
            BaselineKind::NewtonGbm { nu, lambda } => {
                check_nu(nu)?;
                if lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("lambda must be >= 0, got {lambda}")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub loss: LossKind,
    /// Total iterations, admitted or not.
    pub n_estimators: usize,
    pub trust: TrustParams,
    /// Initial shift for the generic-learner path.
    pub mu: f64,
    /// Initial per-leaf shift `alpha * n + beta` for the tree path.
    pub alpha: f64,
    pub beta: f64,
    pub ratio: RatioKind,
    pub learner: LearnerConfig,
    pub base_score: f64,
    pub clamp: ClampConfig,
    pub seed: u64,
    /// Stop after this many consecutive rejected iterations.
    pub patience: Option<usize>,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            loss: LossKind::Squared,
            n_estimators: DEFAULT_N_ESTIMATORS,
            trust: TrustParams::default(),
            mu: DEFAULT_MU,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            ratio: RatioKind::R1,
            learner: LearnerConfig::default(),
            base_score: 0.0,
            clamp: ClampConfig::default(),
            seed: 0,
            patience: None,
            execution: Execution::default(),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::domain("n_estimators must be >= 1"));
        }
        if !self.base_score.is_finite() {
            return Err(Error::domain("base_score must be finite"));
        }
        self.trust.validate()?;
        TrustState::new(self.mu, self.alpha, self.beta)?;
        let zero_curvature = match self.learner {
            LearnerConfig::Tree(t) => {
                t.validate()?;
                self.loss.may_have_zero_curvature() || t.first_order
            }
            LearnerConfig::Linear => self.loss.may_have_zero_curvature(),
        };
        if zero_curvature {
            let shifted = match self.learner {
                LearnerConfig::Tree(_) => self.alpha > 0.0 || self.beta > 0.0,
                LearnerConfig::Linear => self.mu > 0.0,
            };
            if !shifted {
                return Err(Error::domain(format!(
                    "loss {} can have zero curvature: the initial shift must be positive",
                    self.loss
                )));
            }
        }
        if self.patience == Some(0) {
            return Err(Error::domain("patience must be >= 1"));
        }
        Ok(())
    }

    fn tree_config(&self) -> TreeConfig {
        match self.learner {
            LearnerConfig::Tree(t) => t,
            LearnerConfig::Linear => TreeConfig::default(),
        }
    }

    fn first_order(&self) -> bool {
        matches!(self.learner, LearnerConfig::Tree(t) if t.first_order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "lowercase")]
pub enum Learner {
    Tree(TreeNode),
    Linear(GenericLearner),
}

impl Learner {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Learner::Tree(t) => t.predict(row),
            Learner::Linear(l) => l.predict(row),
        }
    }
}

/// One boosting iteration as seen by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub rho: f64,
    pub admitted: bool,
    /// Shifts in force when the learner was fitted.
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Mean training loss after this iteration's admission decision.
    pub train_loss: f64,
    /// Reduction promised by the quadratic model for the candidate learner.
    pub predicted_reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub method: BaselineKind,
    pub config: BoostConfig,
    pub n_features: usize,
    pub base_score: f64,
    pub initial_loss: f64,
    /// Admitted learners in order.
    pub learners: Vec<Learner>,
    pub log: Vec<IterationLog>,
}

impl Ensemble {
    pub fn loss(&self) -> LossKind {
        self.config.loss
    }

    pub fn admitted_count(&self) -> usize {
        self.learners.len()
    }

    fn check_width(&self, features: &FeatureMatrix) -> Result<()> {
        if features.cols() != self.n_features {
            return Err(Error::schema(format!(
                "model expects {} features, data has {}",
                self.n_features,
                features.cols()
            )));
        }
        Ok(())
    }

    /// Raw scores `base_score + sum of admitted learners`.
    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_width(features)?;
        Ok(map_range(self.config.execution, features.rows(), |i| {
            self.predict_row(features.row(i))
        }))
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.learners
            .iter()
            .fold(self.base_score, |acc, l| acc + l.predict(row))
    }

    /// Probabilities for logistic models; raw scores otherwise.
    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        let raw = self.predict(features)?;
        Ok(if self.loss().is_classification() {
            raw.into_iter().map(probability).collect()
        } else {
            raw
        })
    }

    /// Raw scores after every logged iteration (rejected iterations repeat
    /// the previous scores).
    pub fn staged_predict(&self, features: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_width(features)?;
        let mut scores = vec![self.base_score; features.rows()];
        let mut learners = self.learners.iter();
        let mut out = Vec::with_capacity(self.log.len());
        for entry in &self.log {
            if entry.admitted {
                let l = learners
                    .next()
                    .ok_or_else(|| Error::schema("log admits more learners than the model holds"))?;
                let step = map_range(self.config.execution, features.rows(), |i| l.predict(features.row(i)));
                for (s, d) in scores.iter_mut().zip(step) {
                    *s += d;
                }
            }
            out.push(scores.clone());
        }
        Ok(out)
    }
}

fn check_labels(loss: LossKind, data: &Dataset) -> Result<()> {
    for &y in &data.labels {
        loss.validate_label(y)?;
    }
    Ok(())
}

fn mean_loss(exec: Execution, loss: LossKind, labels: &[f64], scores: &[f64]) -> f64 {
    let per = map_range(exec, labels.len(), |i| loss_unchecked(loss, labels[i], scores[i]));
    stable_sum(per) / labels.len() as f64
}

fn derivatives(exec: Execution, cfg: &BoostConfig, labels: &[f64], scores: &[f64]) -> (Vec<f64>, Vec<f64>) {
    map_range(exec, labels.len(), |i| {
        grad_quad_unchecked(cfg.loss, labels[i], scores[i], cfg.clamp)
    })
    .into_iter()
    .unzip()
}

fn learner_outputs(exec: Execution, learner: &Learner, features: &FeatureMatrix) -> Vec<f64> {
    map_range(exec, features.rows(), |i| learner.predict(features.row(i)))
}

/// Trust-region boosting.
pub fn train(data: &Dataset, config: &BoostConfig) -> Result<Ensemble> {
    config.validate()?;
    check_labels(config.loss, data)?;
    run_trust_region(data, config)
}

fn run_trust_region(data: &Dataset, config: &BoostConfig) -> Result<Ensemble> {
    let exec = config.execution;
    let x = &data.features;
    let y = &data.labels;
    let n = data.len();
    let first_order = config.first_order();

    let mut state = TrustState::new(config.mu, config.alpha, config.beta)?;
    let mut scores = vec![config.base_score; n];
    let initial_loss = mean_loss(exec, config.loss, y, &scores);
    let mut loss = initial_loss;
    let mut learners = Vec::new();
    let mut log = Vec::with_capacity(config.n_estimators);
    let mut rejected_run = 0usize;

    for t in 0..config.n_estimators {
        let (grads, quads) = derivatives(exec, config, y, &scores);
        let model_quads = if first_order { vec![0.0; n] } else { quads.clone() };

        let mut escalated = false;
        let learner = loop {
            let attempt = match config.learner {
                LearnerConfig::Tree(tc) => fit_tree_with(
                    x,
                    &grads,
                    &quads,
                    LeafRule::TrustRegion {
                        alpha: state.alpha,
                        beta: state.beta,
                    },
                    &tc,
                    exec,
                )
                .map(Learner::Tree),
                LearnerConfig::Linear => target_values(&grads, &model_quads, state.mu)
                    .and_then(|z| fit_generic(x, &z))
                    .map(Learner::Linear),
            };
            match attempt {
                Err(e) if e.kind() == ErrorKind::InfeasibleRadius && !escalated => {
                    escalated = true;
                    state = update_radius(state, &config.trust, f64::NEG_INFINITY);
                    state.iteration -= 1;
                }
                other => break other?,
            }
        };

        let outputs = learner_outputs(exec, &learner, x);
        let candidate: Vec<f64> = scores.iter().zip(&outputs).map(|(f, z)| f + z).collect();
        let loss_new = mean_loss(exec, config.loss, y, &candidate);
        let predicted = predicted_reduction(&grads, &model_quads, &outputs)?;
        let rho = match config.ratio {
            RatioKind::R1 => ratio_r1(loss, loss_new, &grads, &model_quads, &outputs)?,
            RatioKind::R2 => ratio_r2(loss, loss_new, &outputs)?,
        };
        let admitted = admit(rho, config.trust.eta);
        let fitted_with = state;
        state = update_radius(state, &config.trust, rho);
        if admitted {
            scores = candidate;
            loss = loss_new;
            learners.push(learner);
            rejected_run = 0;
        } else {
            rejected_run += 1;
        }
        log.push(IterationLog {
            iteration: t,
            rho,
            admitted,
            mu: fitted_with.mu,
            alpha: fitted_with.alpha,
            beta: fitted_with.beta,
            train_loss: loss,
            predicted_reduction: predicted,
        });
        if config.patience.is_some_and(|p| rejected_run >= p) {
            break;
        }
    }

    Ok(Ensemble {
        method: BaselineKind::TrBoost,
        config: config.clone(),
        n_features: x.cols(),
        base_score: config.base_score,
        initial_loss,
        learners,
        log,
    })
}

/// Train with the given method; [`BaselineKind::TrBoost`] defers to [`train`].
///
/// Baselines admit every learner. Their trees ignore `first_order`, and the
/// trust-region settings in `config` only feed the logged ratio.
pub fn train_baseline(data: &Dataset, kind: BaselineKind, config: &BoostConfig) -> Result<Ensemble> {
    kind.validate()?;
    let (nu, lambda, newton) = match kind {
        BaselineKind::TrBoost => return train(data, config),
        BaselineKind::Gbdt { nu } => (nu, 0.0, false),
        BaselineKind::NewtonGbm { nu, lambda } => (nu, lambda, true),
    };
    if config.n_estimators == 0 {
        return Err(Error::domain("n_estimators must be >= 1"));
    }
    check_labels(config.loss, data)?;
    let exec = config.execution;
    let x = &data.features;
    let y = &data.labels;
    let n = data.len();
    let tree_cfg = TreeConfig {
        first_order: false,
        ..config.tree_config()
    };
    let rule = LeafRule::Newton { lambda, scale: nu };

    let mut scores = vec![config.base_score; n];
    let initial_loss = mean_loss(exec, config.loss, y, &scores);
    let mut learners = Vec::new();
    let mut log = Vec::with_capacity(config.n_estimators);
    let mut loss = initial_loss;

    for t in 0..config.n_estimators {
        let (grads, quads) = derivatives(exec, config, y, &scores);
        let fit_quads = if newton {
            if let Some(i) = quads.iter().position(|&b| !(b > 0.0)) {
                return Err(Error::HessianNotPositive(format!(
                    "loss {} has second derivative {} at instance {i} (iteration {t}); \
                     Newton boosting needs strictly positive curvature",
                    config.loss, quads[i]
                )));
            }
            quads.clone()
        } else {
            // Least-squares fit to -g: unit weights.
            vec![1.0; n]
        };
        let tree = fit_tree_with(x, &grads, &fit_quads, rule, &tree_cfg, exec)?;
        let learner = Learner::Tree(tree);
        let outputs = learner_outputs(exec, &learner, x);
        for (f, z) in scores.iter_mut().zip(&outputs) {
            *f += z;
        }
        let loss_new = mean_loss(exec, config.loss, y, &scores);
        let rho = ratio_r1(loss, loss_new, &grads, &quads, &outputs)?;
        let predicted = predicted_reduction(&grads, &quads, &outputs)?;
        loss = loss_new;
        learners.push(learner);
        log.push(IterationLog {
            iteration: t,
            rho,
            admitted: true,
            mu: lambda,
            alpha: 0.0,
            beta: lambda,
            train_loss: loss,
            predicted_reduction: predicted,
        });
    }

    Ok(Ensemble {
        method: kind,
        config: config.clone(),
        n_features: x.cols(),
        base_score: config.base_score,
        initial_loss,
        learners,
        log,
    })
}
