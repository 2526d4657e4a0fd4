//! Histogram gradient-boosted decision trees.
//!
//! Trees grow leaf-wise (best gain first) on binned features. Each split
//! learns which side missing values take, categorical features split on
//! category sets, and training can start from a caller-supplied margin so a
//! model fits the residual of another.

mod bins;
mod booster;
mod tree;

pub use booster::{predict, train, BoostModel};
pub use tree::{Node, SplitRule, Tree};

use crate::dataframe::Task;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` inside losses.
pub const PROB_EPS: f64 = 1e-15;
/// Minimum hessian sum on each side of a split.
pub const MIN_HESSIAN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Squared error on raw scores.
    Mse,
    /// Binary cross-entropy of `sigmoid(score)`, labels in {0, 1}.
    LogLoss,
    /// Cross-entropy of softmaxed per-class scores, labels are class ids.
    Softmax { n_classes: usize },
}

impl Objective {
    pub fn for_task(task: Task, n_classes: usize) -> Self {
        match task {
            Task::Regression => Objective::Mse,
            Task::Binary => Objective::LogLoss,
            Task::Multiclass => Objective::Softmax { n_classes },
        }
    }

    /// Scores per row.
    pub fn n_outputs(self) -> usize {
        match self {
            Objective::Softmax { n_classes } => n_classes,
            _ => 1,
        }
    }

    pub fn row_loss(self, y: f64, scores: &[f64]) -> f64 {
        match self {
            Objective::Mse => (scores[0] - y).powi(2),
            Objective::LogLoss => {
                let p = clamp_prob(sigmoid(scores[0]));
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            }
            Objective::Softmax { .. } => {
                let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
                let p = (scores[y as usize] - max).exp() / z;
                -clamp_prob(p).ln()
            }
        }
    }

    /// First and second derivative of [`Objective::row_loss`] per score
    /// (the diagonal of the hessian for softmax).
    pub fn grad_hess(self, y: f64, scores: &[f64], grad: &mut [f64], hess: &mut [f64]) {
        match self {
            Objective::Mse => {
                grad[0] = 2.0 * (scores[0] - y);
                hess[0] = 2.0;
            }
            Objective::LogLoss => {
                let p = sigmoid(scores[0]);
                grad[0] = p - y;
                hess[0] = (p * (1.0 - p)).max(PROB_EPS);
            }
            Objective::Softmax { .. } => {
                let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
                for (k, s) in scores.iter().enumerate() {
                    let p = (s - max).exp() / z;
                    grad[k] = p - if k == y as usize { 1.0 } else { 0.0 };
                    hess[k] = (p * (1.0 - p)).max(PROB_EPS);
                }
            }
        }
    }

    fn check_label(self, y: f64) -> bool {
        match self {
            Objective::Mse => y.is_finite(),
            Objective::LogLoss => (0.0..=1.0).contains(&y),
            Objective::Softmax { n_classes } => y >= 0.0 && y.fract() == 0.0 && (y as usize) < n_classes,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Mean loss; `scores` holds `n_outputs()` consecutive values per row.
pub fn loss(objective: Objective, y: &[f64], scores: &[f64]) -> f64 {
    let k = objective.n_outputs();
    assert_eq!(y.len() * k, scores.len(), "one score block per label");
    if y.is_empty() {
        return 0.0;
    }
    let total: f64 = y.iter().zip(scores.chunks(k)).map(|(&t, s)| objective.row_loss(t, s)).sum();
    total / y.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    /// Stop after this many rounds without a validation improvement; 0 disables.
    pub early_stopping_rounds: usize,
    pub min_child_samples: usize,
    pub max_bins: usize,
    pub lambda_l2: f64,
    /// Training is deterministic; the seed is carried for provenance.
    pub seed: u64,
    pub objective: Objective,
}

impl BoostParams {
    /// Cheap screening model used to score single candidates.
    pub fn stage1() -> Self {
        BoostParams {
            n_trees: 1000,
            learning_rate: 0.1,
            max_leaves: 16,
            early_stopping_rounds: 3,
            min_child_samples: 20,
            max_bins: 255,
            lambda_l2: 1.0,
            seed: 0,
            objective: Objective::Mse,
        }
    }

    /// Patient model used for joint attribution and final evaluation.
    pub fn stage2() -> Self {
        BoostParams { early_stopping_rounds: 50, ..Self::stage1() }
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning_rate={} must be positive", self.learning_rate)));
        }
        if self.max_leaves < 2 {
            return Err(Error::config(format!("max_leaves={} must be at least 2", self.max_leaves)));
        }
        if !(2..=u16::MAX as usize - 1).contains(&self.max_bins) {
            return Err(Error::config(format!("max_bins={} outside [2, 65534]", self.max_bins)));
        }
        if self.min_child_samples == 0 {
            return Err(Error::config("min_child_samples must be at least 1"));
        }
        if !(self.lambda_l2 >= 0.0) {
            return Err(Error::config(format!("lambda_l2={} must be non-negative", self.lambda_l2)));
        }
        if let Objective::Softmax { n_classes } = self.objective {
            if n_classes < 2 {
                return Err(Error::config("softmax needs at least 2 classes"));
            }
        }
        Ok(())
    }
}

/// Split gain per feature normalized to sum to 1; all zeros without splits.
pub fn mdi(model: &BoostModel) -> Vec<f64> {
    let total: f64 = model.per_feature_gain.iter().sum();
    if total <= 0.0 {
        return vec![0.0; model.per_feature_gain.len()];
    }
    model.per_feature_gain.iter().map(|g| g / total).collect()
}

#[cfg(test)]
mod tests;
