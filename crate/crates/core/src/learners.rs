//! Non-tree base learners fitted directly to the trust-region targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Diagonal added to the Gram matrix when it is (numerically) singular.
pub const RIDGE_EPSILON: f64 = 1e-8;

/// Relative pivot size below which the plain normal equations are rejected.
const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenericKind {
    #[default]
    Linear,
}

/// Affine model `w . x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericLearner {
    pub kind: GenericKind,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl GenericLearner {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }
}

/// Ordinary least squares with intercept. Singular designs fall back to a
/// ridge of [`RIDGE_EPSILON`].
pub fn fit_generic(features: &FeatureMatrix, targets: &[f64]) -> Result<GenericLearner> {
    let n = features.rows();
    let m = features.cols();
    if n == 0 {
        return Err(Error::domain("cannot fit a linear model on zero rows"));
    }
    if targets.len() != n {
        return Err(Error::domain(format!("{n} rows but {} targets", targets.len())));
    }
    let nf = n as f64;
    let x_mean: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| features.get(i, j)).sum::<f64>() / nf)
        .collect();
    let y_mean = targets.iter().sum::<f64>() / nf;

    // Centered Gram matrix and moment vector.
    let mut gram = vec![0.0; m * m];
    let mut moment = vec![0.0; m];
    for (i, &y) in targets.iter().enumerate() {
        let row = features.row(i);
        let yc = y - y_mean;
        for a in 0..m {
            let xa = row[a] - x_mean[a];
            moment[a] += xa * yc;
            for b in 0..=a {
                gram[a * m + b] += xa * (row[b] - x_mean[b]);
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[b * m + a] = gram[a * m + b];
        }
    }

    let weights = match cholesky_solve(&gram, &moment, m, PIVOT_TOLERANCE) {
        Some(w) => w,
        None => {
            let mut ridged = gram.clone();
            for a in 0..m {
                ridged[a * m + a] += RIDGE_EPSILON;
            }
            cholesky_solve(&ridged, &moment, m, 0.0)
                .ok_or_else(|| Error::domain("linear system is singular even with ridge"))?
        }
    };
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, x)| w * x).sum::<f64>();
    Ok(GenericLearner {
        kind: GenericKind::Linear,
        weights,
        intercept,
    })
}

pub fn predict_generic(learner: &GenericLearner, row: &[f64]) -> Result<f64> {
    if row.len() != learner.n_features() {
        return Err(Error::domain(format!(
            "row has {} features, learner expects {}",
            row.len(),
            learner.n_features()
        )));
    }
    Ok(learner.predict(row))
}

/// Solve `A x = b` for symmetric `A` via Cholesky. Returns `None` when a
/// pivot is not positive or falls below `rel_tol` times the largest diagonal.
fn cholesky_solve(a: &[f64], rhs: &[f64], m: usize, rel_tol: f64) -> Option<Vec<f64>> {
    let max_diag = (0..m).map(|i| a[i * m + i]).fold(0.0f64, f64::max);
    let floor = rel_tol * max_diag;
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if s <= floor || s <= 0.0 {
                    return None;
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    let mut y = vec![0.0; m];
    for i in 0..m {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * m + k] * y[k];
        }
        y[i] = s / l[i * m + i];
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = y[i];
        for k in i + 1..m {
            s -= l[k * m + i] * x[k];
        }
        x[i] = s / l[i * m + i];
    }
    Some(x)
}
