//! Training, evaluation and curve emission as used by the command line.

use std::io::Write;

use crate::boosting::{train_baseline, BaselineKind, BoostConfig, Ensemble, LearnerConfig};
use crate::data::Dataset;
use crate::error::Result;
use crate::losses::{probability, LossKind};
use crate::metrics::{auc, f1, regression_loss, EvalReport, DEFAULT_F1_THRESHOLD};

/// Crate version; its major component equals the model format version.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub fn fit(data: &Dataset, kind: BaselineKind, config: &BoostConfig) -> Result<Ensemble> {
    train_baseline(data, kind, config)
}

/// Model-selection metric for a loss: AUC for classification, mean loss
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionMetric {
    pub name: &'static str,
    pub higher_is_better: bool,
}

impl SelectionMetric {
    pub fn for_loss(loss: LossKind) -> Self {
        if loss.is_classification() {
            SelectionMetric {
                name: "auc",
                higher_is_better: true,
            }
        } else {
            SelectionMetric {
                name: "loss",
                higher_is_better: false,
            }
        }
    }

    pub fn evaluate(&self, loss: LossKind, raw: &[f64], labels: &[f64]) -> Result<f64> {
        if loss.is_classification() {
            auc(raw, labels)
        } else {
            regression_loss(loss, raw, labels)
        }
    }

    pub fn better(&self, candidate: f64, incumbent: f64) -> bool {
        if self.higher_is_better {
            candidate > incumbent
        } else {
            candidate < incumbent
        }
    }
}

/// Metric table for a model on labelled data, with the selection metric's
/// per-iteration curve.
pub fn evaluate(ensemble: &Ensemble, data: &Dataset) -> Result<EvalReport> {
    let loss = ensemble.loss();
    let raw = ensemble.predict(&data.features)?;
    let y = &data.labels;
    let mut report = EvalReport::default();
    if loss.is_classification() {
        let proba: Vec<f64> = raw.iter().map(|&f| probability(f)).collect();
        report.values.insert("auc".into(), auc(&raw, y)?);
        report.values.insert("f1".into(), f1(&proba, y, DEFAULT_F1_THRESHOLD)?);
        report.values.insert("logloss".into(), regression_loss(loss, &raw, y)?);
    } else {
        report.values.insert("loss".into(), regression_loss(loss, &raw, y)?);
        report
            .values
            .insert("mse".into(), regression_loss(LossKind::Squared, &raw, y)?);
        report
            .values
            .insert("mae".into(), regression_loss(LossKind::Absolute, &raw, y)?);
    }
    let metric = SelectionMetric::for_loss(loss);
    for (t, scores) in ensemble.staged_predict(&data.features)?.iter().enumerate() {
        report.curve.push((t, metric.evaluate(loss, scores, y)?));
    }
    Ok(report)
}

/// `metric,value` table.
pub fn write_report<W: Write>(report: &EvalReport, mut w: W) -> Result<()> {
    writeln!(w, "metric,value")?;
    for (k, v) in &report.values {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

/// Long-format `iteration,metric,value` rows for the report's curve.
pub fn write_metric_curve<W: Write>(report: &EvalReport, metric: &str, mut w: W) -> Result<()> {
    writeln!(w, "iteration,metric,value")?;
    for (t, v) in &report.curve {
        writeln!(w, "{t},{metric},{v}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub iteration: usize,
    pub train_loss: f64,
    pub val_metric: Option<f64>,
    pub rho: f64,
    pub admitted: bool,
    pub mu_or_alpha: f64,
    pub beta: Option<f64>,
}

/// One row per logged iteration. `val_metric` uses [`SelectionMetric`].
pub fn training_curves(ensemble: &Ensemble, validation: Option<&Dataset>) -> Result<Vec<CurveRow>> {
    let loss = ensemble.loss();
    let metric = SelectionMetric::for_loss(loss);
    let val = match validation {
        Some(v) => {
            let staged = ensemble.staged_predict(&v.features)?;
            let vals = staged
                .iter()
                .map(|s| metric.evaluate(loss, s, &v.labels))
                .collect::<Result<Vec<_>>>()?;
            Some(vals)
        }
        None => None,
    };
    let tree = matches!(ensemble.config.learner, LearnerConfig::Tree(_));
    Ok(ensemble
        .log
        .iter()
        .enumerate()
        .map(|(t, e)| CurveRow {
            iteration: e.iteration,
            train_loss: e.train_loss,
            val_metric: val.as_ref().map(|v| v[t]),
            rho: e.rho,
            admitted: e.admitted,
            mu_or_alpha: if tree { e.alpha } else { e.mu },
            beta: tree.then_some(e.beta),
        })
        .collect())
}

/// Header `iteration,train_loss,val_metric,rho,admitted,mu_or_alpha,beta`.
pub fn write_curves<W: Write>(rows: &[CurveRow], mut w: W) -> Result<()> {
    writeln!(w, "iteration,train_loss,val_metric,rho,admitted,mu_or_alpha,beta")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.iteration,
            r.train_loss,
            opt(r.val_metric),
            r.rho,
            u8::from(r.admitted),
            r.mu_or_alpha,
            opt(r.beta)
        )?;
    }
    Ok(())
}
