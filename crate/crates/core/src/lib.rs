//! Trust-region gradient boosting.
//!
//! Each boosting iteration solves per-instance constrained quadratic
//! subproblems `min g z + b z^2 / 2, |z| <= r` and fits a learner to their
//! solutions `z = -g / (b + mu)`. An adaptive controller grows the shift
//! `mu` (shrinks the region) when the actual loss reduction disagrees with
//! the model, and only admits learners whose ratio clears a threshold. This
//! works whether or not the loss has positive curvature, so absolute and
//! Huber losses are handled by the same machinery as squared and logistic.
//!
//! The crate also ships first-order and Newton baselines, metrics, dataset
//! utilities and a small laboratory for one-instance convergence traces.
//!
//! ```
//! use trboost::{train, BoostConfig, LossKind, gen_noisy_regression};
//!
//! let data = gen_noisy_regression(200, 3, 0.0, 0.0, 7).unwrap();
//! let cfg = BoostConfig { loss: LossKind::Squared, n_estimators: 20, ..Default::default() };
//! let model = train(&data, &cfg).unwrap();
//! assert!(model.log.last().unwrap().train_loss < model.initial_loss);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN counts as non-positive.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boosting;
pub mod convergence;
pub mod data;
pub mod engine;
pub mod error;
pub mod exec;
pub mod grid;
pub mod learners;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod tree;
pub mod trust_region;

pub use boosting::{train, train_baseline, BaselineKind, BoostConfig, Ensemble, IterationLog, Learner, LearnerConfig};
pub use convergence::{
    check_appendix_inequalities, check_linear, check_sublinear, run_one_instance, LossTrace, StepRule,
};
pub use data::{gen_noisy_regression, gen_two_gaussians, load_csv, save_csv, split, Dataset, LabelColumn};
pub use engine::{evaluate, version};
pub use error::{Error, ErrorKind, Result};
pub use exec::Execution;
pub use learners::{fit_generic, GenericLearner};
pub use losses::{grad_quad, loss_value, probability, ClampConfig, LossKind};
pub use matrix::FeatureMatrix;
pub use metrics::{auc, f1, regression_loss, EvalReport};
pub use tree::{fit_tree, TreeConfig, TreeNode};
pub use trust_region::{RatioKind, TrustParams, TrustState};
