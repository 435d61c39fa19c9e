//! Evaluation metrics.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::losses::{loss_unchecked, LossKind};

pub const DEFAULT_F1_THRESHOLD: f64 = 0.5;

/// Named metric values plus an optional per-iteration curve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub values: BTreeMap<String, f64>,
    pub curve: Vec<(usize, f64)>,
}

fn check_binary(labels: &[f64]) -> Result<(usize, usize)> {
    let mut pos = 0;
    for &y in labels {
        if y == 1.0 {
            pos += 1;
        } else if y != 0.0 {
            return Err(Error::domain(format!("expected binary labels, got {y}")));
        }
    }
    Ok((pos, labels.len() - pos))
}

/// Area under the ROC curve via the Mann-Whitney rank statistic. Tied
/// scores share their average rank, so each tied pair counts one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::domain("scores and labels differ in length"));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::domain(format!("score {s} is not a number")));
    }
    let (n_pos, n_neg) = check_binary(labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC",
            "labels contain a single class".to_string(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean.
        let avg = (i + j + 2) as f64 / 2.0;
        let pos_in_run = order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count();
        rank_sum_pos += avg * pos_in_run as f64;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q))
}

/// F1 of the rule `score >= threshold`. Zero when there are no predicted or
/// no actual positives.
pub fn f1(scores: &[f64], labels: &[f64], threshold: f64) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::domain("scores and labels differ in length"));
    }
    check_binary(labels)?;
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp + fp == 0 || tp + fneg == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fneg) as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Mean instance loss of `predictions` (raw scores) against `labels`.
pub fn regression_loss(kind: LossKind, predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::domain("no predictions to score"));
    }
    for (&f, &y) in predictions.iter().zip(labels) {
        crate::error::ensure_finite("prediction", f)?;
        kind.validate_label(y)?;
    }
    let total: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(&f, &y)| loss_unchecked(kind, y, f))
        .sum();
    Ok(total / predictions.len() as f64)
}
