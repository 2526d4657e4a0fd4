//! Incremental scoring of feature sets by residual boosting.
//!
//! Base predictions are frozen margins. A candidate set is scored by
//! training a model that starts from those margins and sees only the
//! candidate columns, then comparing its loss with the margins' own loss on
//! an internal holdout.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataframe::{Column, Dataset};
use crate::error::{Error, Result};
use crate::gbdt::{self, BoostModel, BoostParams, Objective};

/// Smallest holdout a score is computed on.
pub const MIN_HOLDOUT: usize = 10;
/// Loss differences below this are treated as no improvement.
pub const DELTA_EPS: f64 = 1e-9;

/// Raw scores per dataset row, `n_outputs` consecutive values each.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePredictions {
    margins: Vec<f64>,
    n_outputs: usize,
    covered: Vec<bool>,
}

impl BasePredictions {
    /// `covered[r]` marks rows that actually received a prediction.
    pub fn new(margins: Vec<f64>, n_outputs: usize, covered: Vec<bool>) -> Result<Self> {
        if n_outputs == 0 || margins.len() != covered.len() * n_outputs {
            return Err(Error::contract("margins do not match the row count"));
        }
        Ok(BasePredictions { margins, n_outputs, covered })
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn n_rows(&self) -> usize {
        self.covered.len()
    }

    pub fn covers(&self, row: usize) -> bool {
        self.covered.get(row).copied().unwrap_or(false)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.margins[row * self.n_outputs..(row + 1) * self.n_outputs]
    }

    /// Margins of `rows`, in order.
    pub fn gather(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect()
    }

    /// Loss of the margins alone on `rows`.
    pub fn loss(&self, objective: Objective, y: &[f64], rows: &[usize]) -> f64 {
        let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        gbdt::loss(objective, &ys, &self.gather(rows))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaScore {
    /// `base_loss - boosted_loss`.
    pub delta: f64,
    pub base_loss: f64,
    pub boosted_loss: f64,
    pub rows_used: usize,
    pub trees_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub params: BoostParams,
    pub valid_fraction: f64,
    pub seed: u64,
    /// Score on every row of the subset instead of the holdout only.
    pub in_sample: bool,
}

impl EvalSettings {
    pub fn new(params: BoostParams, valid_fraction: f64, seed: u64) -> Self {
        EvalSettings { params, valid_fraction, seed, in_sample: false }
    }
}

/// Seeded split of `0..n` into (fit, holdout) positions, both sorted.
pub fn holdout_split(n: usize, valid_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_hold = (valid_fraction * n as f64).round() as usize;
    let mut hold = order[..n_hold].to_vec();
    let mut fit = order[n_hold..].to_vec();
    hold.sort_unstable();
    fit.sort_unstable();
    (fit, hold)
}

/// Score the columns in `columns` (each aligned with `rows`) on top of `base`.
pub fn feature_boost(
    ds: &Dataset,
    columns: &[&Column],
    base: &BasePredictions,
    rows: &[usize],
    settings: &EvalSettings,
) -> Result<DeltaScore> {
    if columns.is_empty() {
        return Err(Error::contract("feature_boost needs at least one column"));
    }
    residual_fit(ds, columns, base, rows, settings).map(|(score, _)| score)
}

/// Score base and candidate columns jointly, returning the residual model
/// whose columns are `base_columns` followed by `candidate_columns`.
pub fn evaluate_full(
    ds: &Dataset,
    base_columns: &[&Column],
    candidate_columns: &[&Column],
    base: &BasePredictions,
    rows: &[usize],
    settings: &EvalSettings,
) -> Result<(DeltaScore, BoostModel)> {
    let all: Vec<&Column> = base_columns.iter().chain(candidate_columns).copied().collect();
    residual_fit(ds, &all, base, rows, settings)
}

fn residual_fit(
    ds: &Dataset,
    columns: &[&Column],
    base: &BasePredictions,
    rows: &[usize],
    settings: &EvalSettings,
) -> Result<(DeltaScore, BoostModel)> {
    let objective = settings.params.objective;
    let k = objective.n_outputs();
    if base.n_outputs() != k || base.n_rows() != ds.n_rows() {
        return Err(Error::contract("base predictions do not match the dataset or objective"));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != rows.len()) {
        return Err(Error::contract(format!("column '{}' is not aligned with the row subset", c.name())));
    }
    if let Some(&r) = rows.iter().find(|&&r| !base.covers(r)) {
        return Err(Error::contract(format!("row {r} has no base prediction")));
    }
    let target = ds.target_values()?;
    let y: Vec<f64> = rows.iter().map(|&r| target[r]).collect();
    let margin = base.gather(rows);
    let (fit, hold) = holdout_split(rows.len(), settings.valid_fraction, settings.seed);
    if hold.len() < MIN_HOLDOUT {
        return Err(Error::Evaluation(format!(
            "holdout of {} rows is below {MIN_HOLDOUT}; the subset is too small",
            hold.len()
        )));
    }
    let (train_rows, scored) = if settings.in_sample { ((0..rows.len()).collect(), (0..rows.len()).collect()) } else { (fit, hold.clone()) };
    let model = gbdt::train(columns, &y, Some(&margin), &train_rows, &hold, &settings.params)?;
    let scored_margin: Vec<f64> = scored.iter().flat_map(|&i| margin[i * k..(i + 1) * k].iter().copied()).collect();
    let ys: Vec<f64> = scored.iter().map(|&i| y[i]).collect();
    let boosted = gbdt::predict(&model, columns, &scored, Some(&scored_margin))?;
    let base_loss = gbdt::loss(objective, &ys, &scored_margin);
    let boosted_loss = gbdt::loss(objective, &ys, &boosted);
    let score = DeltaScore {
        delta: base_loss - boosted_loss,
        base_loss,
        boosted_loss,
        rows_used: scored.len(),
        trees_used: model.best_iteration,
    };
    Ok((score, model))
}
