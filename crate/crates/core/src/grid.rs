//! Exhaustive hyperparameter search on a seeded validation split.

use crate::boosting::{BaselineKind, BoostConfig, Ensemble, LearnerConfig};
use crate::data::{holdout, Dataset};
use crate::engine::{fit, SelectionMetric};
use crate::error::{Error, Result};
use crate::exec::map_slice;

/// One searched hyperparameter and its candidate values, in user order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

pub const AXIS_NAMES: &[&str] = &[
    "alpha",
    "beta",
    "eps1",
    "eps2",
    "estimators",
    "eta",
    "gamma",
    "lambda",
    "max-depth",
    "min-gain",
    "min-leaf",
    "mu",
    "nu",
];

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::domain(format!("{name} needs a positive integer, got {v}")))
    }
}

/// Set one named hyperparameter.
pub fn apply(name: &str, v: f64, cfg: &mut BoostConfig, kind: &mut BaselineKind) -> Result<()> {
    fn tree<'a>(name: &str, cfg: &'a mut BoostConfig) -> Result<&'a mut crate::tree::TreeConfig> {
        match &mut cfg.learner {
            LearnerConfig::Tree(t) => Ok(t),
            LearnerConfig::Linear => Err(Error::domain(format!("{name} only applies to tree learners"))),
        }
    }
    match name {
        "alpha" => cfg.alpha = v,
        "beta" => cfg.beta = v,
        "mu" => cfg.mu = v,
        "eta" => cfg.trust.eta = v,
        "gamma" => cfg.trust.gamma = v,
        "eps1" => cfg.trust.eps1 = v,
        "eps2" => cfg.trust.eps2 = v,
        "estimators" => cfg.n_estimators = as_count(name, v)?,
        "max-depth" => tree(name, cfg)?.max_depth = as_count(name, v)?,
        "min-leaf" => tree(name, cfg)?.min_samples_leaf = as_count(name, v)?,
        "min-gain" => tree(name, cfg)?.min_gain = v,
        "nu" => match kind {
            BaselineKind::Gbdt { nu } | BaselineKind::NewtonGbm { nu, .. } => *nu = v,
            BaselineKind::TrBoost => return Err(Error::domain("nu only applies to baselines")),
        },
        "lambda" => match kind {
            BaselineKind::NewtonGbm { lambda, .. } => *lambda = v,
            _ => return Err(Error::domain("lambda only applies to the newton baseline")),
        },
        other => {
            return Err(Error::domain(format!(
                "unknown grid parameter '{other}' (expected one of {})",
                AXIS_NAMES.join(", ")
            )))
        }
    }
    Ok(())
}

/// A point of the grid: `(name, value)` pairs in axis order.
pub type Assignment = Vec<(String, f64)>;

/// Cartesian product with axes ordered by name and each axis in the order
/// given, so the first point in the result is the lexicographically first.
pub fn enumerate(axes: &[GridAxis]) -> Result<Vec<Assignment>> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::domain("grid is empty"));
    }
    let mut sorted: Vec<&GridAxis> = axes.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    if sorted.windows(2).any(|w| w[0].name == w[1].name) {
        return Err(Error::domain("grid names a parameter twice"));
    }
    let mut out: Vec<Assignment> = vec![Vec::new()];
    for axis in sorted {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push((axis.name.clone(), v));
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

#[derive(Debug)]
pub struct GridResult {
    pub assignment: Assignment,
    pub score: Result<f64>,
}

#[derive(Debug)]
pub struct GridReport {
    pub metric: SelectionMetric,
    pub results: Vec<GridResult>,
    pub best: usize,
    /// Indices of other points that tied the winner's score.
    pub tied_with_best: Vec<usize>,
    pub config: BoostConfig,
    pub kind: BaselineKind,
    /// Winner retrained on train + validation.
    pub model: Ensemble,
}

/// Try every grid point on a `val_fraction` holdout of `data`; retrain the
/// best on all of `data`. Earlier points win ties.
pub fn grid_search(
    data: &Dataset,
    base: &BoostConfig,
    kind: BaselineKind,
    axes: &[GridAxis],
    val_fraction: f64,
    seed: u64,
) -> Result<GridReport> {
    let points = enumerate(axes)?;
    let (train, val) = holdout(data, val_fraction, seed)?;
    let metric = SelectionMetric::for_loss(base.loss);

    let configure = |a: &Assignment| -> Result<(BoostConfig, BaselineKind)> {
        let mut cfg = base.clone();
        let mut k = kind;
        for (name, v) in a {
            apply(name, *v, &mut cfg, &mut k)?;
        }
        Ok((cfg, k))
    };
    // Configurations are independent; each one trains sequentially inside.
    let results: Vec<GridResult> = map_slice(base.execution, &points, |a| {
        let score = configure(a).and_then(|(mut cfg, k)| {
            cfg.execution = crate::exec::Execution::Sequential;
            let model = fit(&train, k, &cfg)?;
            let raw = model.predict(&val.features)?;
            metric.evaluate(cfg.loss, &raw, &val.labels)
        });
        GridResult {
            assignment: a.clone(),
            score,
        }
    });

    let mut best: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        if let Ok(s) = r.score {
            if best.is_none_or(|(_, b)| metric.better(s, b)) {
                best = Some((i, s));
            }
        }
    }
    let Some((best, best_score)) = best else {
        let first = results
            .iter()
            .find_map(|r| r.score.as_ref().err().map(ToString::to_string))
            .unwrap_or_default();
        return Err(Error::domain(format!("every grid point failed; first error: {first}")));
    };
    let tied_with_best = results
        .iter()
        .enumerate()
        .filter(|(i, r)| *i != best && matches!(r.score, Ok(s) if s == best_score))
        .map(|(i, _)| i)
        .collect();
    let (config, kind) = configure(&results[best].assignment)?;
    let model = fit(data, kind, &config)?;
    Ok(GridReport {
        metric,
        results,
        best,
        tied_with_best,
        config,
        kind,
        model,
    })
}
