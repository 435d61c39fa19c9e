//! Regression trees fitted to gradient statistics.
//!
//! Leaves take the constrained minimiser of `B C^2 / 2 + G C`, which is
//! `C = -G / (B + alpha n + beta)`. Splits are chosen by exact greedy search
//! over midpoints between consecutive distinct feature values, maximising the
//! drop of that same objective from parent to children.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::matrix::FeatureMatrix;

pub const DEFAULT_MAX_DEPTH: usize = 6;
pub const DEFAULT_MIN_SAMPLES_LEAF: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        count: usize,
        g_sum: f64,
        b_sum: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_gain: f64,
    /// Drop the curvature term: every `b` is treated as zero.
    pub first_order: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: DEFAULT_MAX_DEPTH,
            min_samples_leaf: DEFAULT_MIN_SAMPLES_LEAF,
            min_gain: 0.0,
            first_order: false,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::domain("max_depth must be >= 1"));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::domain("min_samples_leaf must be >= 1"));
        }
        if !self.min_gain.is_finite() {
            return Err(Error::domain("min_gain must be finite"));
        }
        Ok(())
    }
}

/// Leaf value `-G / (B + alpha n + beta)`.
pub fn leaf_value(g_sum: f64, b_sum: f64, alpha: f64, count: usize, beta: f64) -> Result<f64> {
    let d = b_sum + alpha * count as f64 + beta;
    if d > 0.0 {
        Ok(-g_sum / d)
    } else {
        Err(Error::InfeasibleRadius(format!(
            "leaf denominator B + alpha*n + beta = {d} <= 0"
        )))
    }
}

/// Quadratic model value `B C^2 / 2 + G C` at leaf value `C`.
pub fn leaf_objective(g_sum: f64, b_sum: f64, c: f64) -> f64 {
    0.5 * b_sum * c * c + g_sum * c
}

fn node_objective(g: f64, b: f64, n: usize, alpha: f64, beta: f64) -> Result<f64> {
    let c = leaf_value(g, b, alpha, n, beta)?;
    Ok(leaf_objective(g, b, c))
}

/// Drop of the leaf objective from parent to children. Positive means the
/// split lowers the quadratic model.
#[allow(clippy::too_many_arguments)]
pub fn split_gain(
    g_left: f64,
    b_left: f64,
    n_left: usize,
    g_right: f64,
    b_right: f64,
    n_right: usize,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let parent = node_objective(g_left + g_right, b_left + b_right, n_left + n_right, alpha, beta)?;
    let left = node_objective(g_left, b_left, n_left, alpha, beta)?;
    let right = node_objective(g_right, b_right, n_right, alpha, beta)?;
    Ok(parent - (left + right))
}

/// How leaves are valued and splits scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LeafRule {
    /// Trust-region leaves with shift `alpha n + beta`.
    TrustRegion { alpha: f64, beta: f64 },
    /// Regularised Newton leaves `-scale G / (B + lambda)` scored with the
    /// usual `G^2 / (B + lambda)` structure gain.
    Newton { lambda: f64, scale: f64 },
}

impl LeafRule {
    fn value(&self, g: f64, b: f64, n: usize) -> Result<f64> {
        match *self {
            LeafRule::TrustRegion { alpha, beta } => leaf_value(g, b, alpha, n, beta),
            LeafRule::Newton { lambda, scale } => {
                let d = b + lambda;
                if d > 0.0 {
                    Ok(-scale * g / d)
                } else {
                    Err(Error::HessianNotPositive(format!(
                        "leaf curvature B + lambda = {d} <= 0"
                    )))
                }
            }
        }
    }

    fn gain(&self, gl: f64, bl: f64, nl: usize, gr: f64, br: f64, nr: usize) -> Result<f64> {
        match *self {
            LeafRule::TrustRegion { alpha, beta } => split_gain(gl, bl, nl, gr, br, nr, alpha, beta),
            LeafRule::Newton { lambda, .. } => {
                let score = |g: f64, b: f64| -> Result<f64> {
                    let d = b + lambda;
                    if d > 0.0 {
                        Ok(g * g / d)
                    } else {
                        Err(Error::HessianNotPositive(format!(
                            "node curvature B + lambda = {d} <= 0"
                        )))
                    }
                };
                Ok(0.5 * (score(gl, bl)? + score(gr, br)? - score(gl + gr, bl + br)?))
            }
        }
    }
}

/// Fit a trust-region tree to per-instance `(g, b)`.
pub fn fit_tree(
    features: &FeatureMatrix,
    grads: &[f64],
    quads: &[f64],
    alpha: f64,
    beta: f64,
    config: &TreeConfig,
) -> Result<TreeNode> {
    fit_tree_with(
        features,
        grads,
        quads,
        LeafRule::TrustRegion { alpha, beta },
        config,
        Execution::default(),
    )
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    /// Number of instances routed left.
    n_left: usize,
}

struct Grower<'a> {
    features: &'a FeatureMatrix,
    grads: &'a [f64],
    quads: Vec<f64>,
    rule: LeafRule,
    config: &'a TreeConfig,
    exec: Execution,
}

pub(crate) fn fit_tree_with(
    features: &FeatureMatrix,
    grads: &[f64],
    quads: &[f64],
    rule: LeafRule,
    config: &TreeConfig,
    exec: Execution,
) -> Result<TreeNode> {
    config.validate()?;
    let n = features.rows();
    if n == 0 || features.cols() == 0 {
        return Err(Error::domain("cannot fit a tree on an empty matrix"));
    }
    if grads.len() != n || quads.len() != n {
        return Err(Error::domain(format!(
            "tree inputs disagree: {n} rows, {} gradients, {} quadratic terms",
            grads.len(),
            quads.len()
        )));
    }
    let quads = if config.first_order {
        vec![0.0; n]
    } else {
        quads.to_vec()
    };
    let grower = Grower {
        features,
        grads,
        quads,
        rule,
        config,
        exec,
    };
    // Per-feature instance orderings, sorted by value then index.
    let sorted: Vec<Vec<usize>> = map_range(exec, features.cols(), |j| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| features.get(a, j).total_cmp(&features.get(b, j)).then(a.cmp(&b)));
        idx
    });
    grower.grow(sorted, 0)
}

impl Grower<'_> {
    fn leaf(&self, members: &[usize]) -> Result<TreeNode> {
        let (g, b) = self.sums(members);
        let value = self.rule.value(g, b, members.len())?;
        Ok(TreeNode::Leaf {
            value,
            count: members.len(),
            g_sum: g,
            b_sum: b,
        })
    }

    fn sums(&self, members: &[usize]) -> (f64, f64) {
        members
            .iter()
            .fold((0.0, 0.0), |(g, b), &i| (g + self.grads[i], b + self.quads[i]))
    }

    fn grow(&self, sorted: Vec<Vec<usize>>, depth: usize) -> Result<TreeNode> {
        let members = &sorted[0];
        let n = members.len();
        let min_leaf = self.config.min_samples_leaf;
        if depth >= self.config.max_depth || n < 2 * min_leaf {
            return self.leaf(members);
        }
        let (g_total, b_total) = self.sums(members);
        // Validate the parent itself before scanning.
        self.rule.value(g_total, b_total, n)?;

        let per_feature: Vec<Result<Option<Candidate>>> = map_range(self.exec, sorted.len(), |j| {
            self.best_for_feature(j, &sorted[j], g_total, b_total)
        });
        let mut best: Option<Candidate> = None;
        for c in per_feature {
            if let Some(c) = c? {
                if best.is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best.filter(|c| c.gain > self.config.min_gain) else {
            return self.leaf(members);
        };

        let feature = best.feature;
        let goes_left = |i: usize| self.features.get(i, feature) <= best.threshold;
        let mut left_sorted = Vec::with_capacity(sorted.len());
        let mut right_sorted = Vec::with_capacity(sorted.len());
        for order in &sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&i| goes_left(i));
            left_sorted.push(l);
            right_sorted.push(r);
        }
        debug_assert_eq!(left_sorted[0].len(), best.n_left);
        drop(sorted);
        let left = self.grow(left_sorted, depth + 1)?;
        let right = self.grow(right_sorted, depth + 1)?;
        Ok(TreeNode::Split {
            feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn best_for_feature(
        &self,
        feature: usize,
        order: &[usize],
        g_total: f64,
        b_total: f64,
    ) -> Result<Option<Candidate>> {
        let n = order.len();
        let min_leaf = self.config.min_samples_leaf;
        let mut best: Option<Candidate> = None;
        let (mut g_left, mut b_left) = (0.0, 0.0);
        for k in 0..n - 1 {
            let i = order[k];
            g_left += self.grads[i];
            b_left += self.quads[i];
            let n_left = k + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let v = self.features.get(i, feature);
            let next = self.features.get(order[k + 1], feature);
            if v >= next {
                continue;
            }
            let g_right = g_total - g_left;
            let b_right = b_total - b_left;
            let gain = self.rule.gain(g_left, b_left, n_left, g_right, b_right, n - n_left)?;
            if !gain.is_finite() {
                continue;
            }
            if best.is_none_or(|b| gain > b.gain) {
                let mid = v + (next - v) / 2.0;
                let threshold = if mid < next { mid } else { v };
                best = Some(Candidate {
                    gain,
                    feature,
                    threshold,
                    n_left,
                });
            }
        }
        Ok(best)
    }
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Largest feature index referenced by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature, left, right, ..
            } => Some(
                [Some(*feature), left.max_feature(), right.max_feature()]
                    .into_iter()
                    .flatten()
                    .max()
                    .unwrap_or(*feature),
            ),
        }
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { .. } => out.push(node),
                TreeNode::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Route `row` to a leaf and return its value.
pub fn predict_tree(tree: &TreeNode, row: &[f64], n_features: usize) -> Result<f64> {
    if row.len() != n_features {
        return Err(Error::domain(format!(
            "row has {} features, tree was trained on {n_features}",
            row.len()
        )));
    }
    Ok(tree.predict(row))
}
