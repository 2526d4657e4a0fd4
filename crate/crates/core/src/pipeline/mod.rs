//! End-to-end feature generation.
//!
//! For each order: compute out-of-fold base predictions, expand the current
//! feature set, prune candidates by successive halving, rank survivors by
//! joint importance and accept the top `top_k`. Accepted expressions are then
//! fit into a [`TransformSpec`] and compared against the base features on the
//! held-out validation rows.

mod metric;
mod spec;

pub use metric::{accuracy, auc, rmse, Metric};
pub use spec::{apply, SpecEntry, TransformSpec};

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::boost_eval::{holdout_split, BasePredictions, EvalSettings};
use crate::dataframe::{format_number, make_split_plan, Column, Dataset, FeatureKind, SplitPlan, Task};
use crate::error::{Error, Result};
use crate::gbdt::{self, BoostParams, Objective};
use crate::ops::{
    canonical_string, catalog, expand, expand_features, fit_transform, FeatureExpr, FitMode, FittedStats, Operator,
};
use crate::pruning::{feature_attribution, select_top_k, successive_pruning, BoostScorer, HalvingSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// The training rows are split into `2^q` blocks for halving.
    pub q: u32,
    pub k_folds: usize,
    pub top_k: usize,
    pub max_order: usize,
    pub mode: FitMode,
    pub stage1_params: BoostParams,
    pub stage2_params: BoostParams,
    pub base_model_params: BoostParams,
    /// Share of rows held out for the final metric, also used for internal holdouts.
    pub valid_fraction: f64,
    pub seed: u64,
    /// Defaults to RMSE, AUC or accuracy by task.
    pub metric: Option<Metric>,
    /// Candidates of order > 1 must use a feature accepted in the previous order.
    pub fresh_only: bool,
    pub operators: Vec<Operator>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            q: 0,
            k_folds: 5,
            top_k: 10,
            max_order: 1,
            mode: FitMode::TrainFit,
            stage1_params: BoostParams::stage1(),
            stage2_params: BoostParams::stage2(),
            base_model_params: BoostParams::stage2(),
            valid_fraction: 0.2,
            seed: 0,
            metric: None,
            fresh_only: true,
            operators: catalog(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_order < 1 {
            return Err(Error::config("max_order must be at least 1"));
        }
        if self.top_k < 1 {
            return Err(Error::config("top_k must be at least 1"));
        }
        if self.operators.is_empty() {
            return Err(Error::config("operator list is empty"));
        }
        for p in [&self.stage1_params, &self.stage2_params, &self.base_model_params] {
            p.validate()?;
        }
        Ok(())
    }

    /// Stable `key=value` rendering; the config hash is taken over it.
    pub fn to_text(&self) -> String {
        let params = |p: &BoostParams| {
            format!(
                "n_trees={},learning_rate={},max_leaves={},early_stopping_rounds={},min_child_samples={},max_bins={},lambda_l2={}",
                p.n_trees,
                format_number(p.learning_rate),
                p.max_leaves,
                p.early_stopping_rounds,
                p.min_child_samples,
                p.max_bins,
                format_number(p.lambda_l2)
            )
        };
        let ops: Vec<&str> = self.operators.iter().map(|o| o.name()).collect();
        [
            format!("q={}", self.q),
            format!("k_folds={}", self.k_folds),
            format!("top_k={}", self.top_k),
            format!("max_order={}", self.max_order),
            format!("mode={}", self.mode.as_str()),
            format!("stage1={}", params(&self.stage1_params)),
            format!("stage2={}", params(&self.stage2_params)),
            format!("base_model={}", params(&self.base_model_params)),
            format!("valid_fraction={}", format_number(self.valid_fraction)),
            format!("seed={}", self.seed),
            format!("metric={}", self.metric.map_or("auto", Metric::as_str)),
            format!("fresh_only={}", self.fresh_only),
            format!("operators={}", ops.join(",")),
        ]
        .join("\n")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Stage counts for one expansion order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub order: usize,
    pub candidates: usize,
    pub halving: HalvingSchedule,
    pub ranked: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub expr: FeatureExpr,
    pub order: usize,
    pub delta: f64,
    pub importance: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub orders: Vec<OrderReport>,
    pub timings: Vec<(String, Duration)>,
    pub metric: Metric,
    pub base_metric: f64,
    pub augmented_metric: f64,
    pub scores: Vec<ScoreRow>,
    pub train_rows: usize,
    pub valid_rows: usize,
}

impl RunReport {
    /// Relative improvement of the augmented metric, positive when better.
    pub fn improvement(&self) -> f64 {
        let diff = self.augmented_metric - self.base_metric;
        let signed = if self.metric.higher_is_better() { diff } else { -diff };
        signed / self.base_metric.abs().max(f64::MIN_POSITIVE)
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows: train={} valid={}", self.train_rows, self.valid_rows)?;
        for o in &self.orders {
            writeln!(
                f,
                "order {}: candidates={} halving={:?} duplicates={:?} positive={} ranked={} selected={}",
                o.order,
                o.candidates,
                o.halving.survivors_per_iteration,
                o.halving.duplicates_per_iteration,
                o.halving.final_survivors,
                o.ranked,
                o.selected
            )?;
        }
        writeln!(f, "metric: {}", self.metric)?;
        writeln!(f, "base_metric: {}", format_number(self.base_metric))?;
        writeln!(f, "augmented_metric: {}", format_number(self.augmented_metric))?;
        writeln!(f, "scores:")?;
        writeln!(f, "rank\torder\timportance\tdelta\texpr")?;
        for (i, s) in self.scores.iter().enumerate() {
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}",
                i + 1,
                s.order,
                format_number(s.importance),
                format_number(s.delta),
                canonical_string(&s.expr)
            )?;
        }
        writeln!(f, "timings:")?;
        for (stage, d) in &self.timings {
            writeln!(f, "{stage}\t{:.3}s", d.as_secs_f64())?;
        }
        Ok(())
    }
}

fn objective_of(ds: &Dataset) -> Objective {
    Objective::for_task(ds.task(), ds.n_classes())
}

/// Out-of-fold margins for the training rows of `plan`.
///
/// Each fold is predicted by a model trained on the other folds, with an
/// early-stopping holdout carved from them. Validation rows stay uncovered.
pub fn base_predictions(
    ds: &Dataset,
    columns: &[&Column],
    plan: &SplitPlan,
    params: &BoostParams,
    holdout_fraction: f64,
) -> Result<BasePredictions> {
    let objective = params.objective;
    let k = objective.n_outputs();
    let y = ds.target_values()?;
    let folds = plan.train_folds();
    let per_fold: Vec<(Vec<usize>, Vec<f64>)> = folds
        .par_iter()
        .enumerate()
        .map(|(j, fold)| {
            let rest: Vec<usize> = {
                let mut r: Vec<usize> =
                    folds.iter().enumerate().filter(|(i, _)| *i != j).flat_map(|(_, f)| f.iter().copied()).collect();
                r.sort_unstable();
                r
            };
            if ds.task() != Task::Regression {
                let mut seen = vec![false; ds.n_classes()];
                for &r in &rest {
                    seen[y[r] as usize] = true;
                }
                if let Some(c) = seen.iter().position(|s| !s) {
                    return Err(Error::config(format!(
                        "class {c} is absent from the training part of fold {j}; use fewer folds or more rows"
                    )));
                }
            }
            let (fit, hold) = holdout_split(rest.len(), holdout_fraction, plan.seed.wrapping_add(j as u64));
            let fit_rows: Vec<usize> = fit.iter().map(|&i| rest[i]).collect();
            let hold_rows: Vec<usize> = hold.iter().map(|&i| rest[i]).collect();
            let model = gbdt::train(columns, &y, None, &fit_rows, &hold_rows, params)?;
            Ok((fold.clone(), gbdt::predict(&model, columns, fold, None)?))
        })
        .collect::<Result<_>>()?;
    let mut margins = vec![0.0; ds.n_rows() * k];
    let mut covered = vec![false; ds.n_rows()];
    for (rows, pred) in per_fold {
        for (i, r) in rows.into_iter().enumerate() {
            margins[r * k..(r + 1) * k].copy_from_slice(&pred[i * k..(i + 1) * k]);
            covered[r] = true;
        }
    }
    BasePredictions::new(margins, k, covered)
}

/// Train on `train_rows` (with an internal early-stopping holdout) and score `eval_rows`.
pub fn holdout_metric(
    ds: &Dataset,
    columns: &[&Column],
    train_rows: &[usize],
    eval_rows: &[usize],
    params: &BoostParams,
    metric: Metric,
    holdout_fraction: f64,
    seed: u64,
) -> Result<f64> {
    let y = ds.target_values()?;
    let (fit, hold) = holdout_split(train_rows.len(), holdout_fraction, seed);
    let fit_rows: Vec<usize> = fit.iter().map(|&i| train_rows[i]).collect();
    let hold_rows: Vec<usize> = hold.iter().map(|&i| train_rows[i]).collect();
    let model = gbdt::train(columns, &y, None, &fit_rows, &hold_rows, params)?;
    let pred = gbdt::predict(&model, columns, eval_rows, None)?;
    let ye: Vec<f64> = eval_rows.iter().map(|&r| y[r]).collect();
    metric.compute(&ye, &pred, params.objective.n_outputs())
}

struct Accepted {
    expr: FeatureExpr,
    kind: FeatureKind,
    column: Column,
    delta: f64,
    importance: f64,
    order: usize,
}

/// Run feature generation and return the fitted spec and a report.
pub fn run(ds: &Dataset, config: &PipelineConfig) -> Result<(TransformSpec, RunReport)> {
    config.validate()?;
    if ds.target().is_none() {
        return Err(Error::config("dataset has no target column"));
    }
    let objective = objective_of(ds);
    let metric = config.metric.unwrap_or(Metric::for_task(ds.task()));
    if metric == Metric::Auc && ds.task() != Task::Binary {
        return Err(Error::config("AUC is only defined for binary targets"));
    }
    let stage1 = config.stage1_params.clone().with_objective(objective);
    let stage2 = config.stage2_params.clone().with_objective(objective);
    let base_params = config.base_model_params.clone().with_objective(objective);
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: String, timings: &mut Vec<(String, Duration)>| {
        timings.push((name, clock.elapsed()));
        clock = Instant::now();
    };

    let plan = make_split_plan(ds, config.q, config.k_folds, config.valid_fraction, config.seed)?;
    let all_rows: Vec<usize> = (0..ds.n_rows()).collect();
    let stats_rows: &[usize] = match config.mode {
        FitMode::TrainFit => &plan.train_rows,
        FitMode::Transductive => &all_rows,
    };
    let base_kinds: Vec<(String, FeatureKind)> = ds.columns().iter().map(|c| (c.name().to_string(), c.kind())).collect();
    let mut pool: Vec<(FeatureExpr, FeatureKind)> =
        base_kinds.iter().map(|(n, k)| (FeatureExpr::base(n.clone()), *k)).collect();
    let mut fresh = vec![true; pool.len()];
    let mut accepted: Vec<Accepted> = Vec::new();
    let mut orders = Vec::new();

    for order in 1..=config.max_order {
        let current: Vec<&Column> = ds.columns().iter().chain(accepted.iter().map(|a| &a.column)).collect();
        let base = base_predictions(ds, &current, &plan, &base_params, config.valid_fraction)?;
        lap(format!("order{order}.base_predictions"), &mut timings);

        let candidates = if order == 1 {
            expand(&base_kinds, &config.operators)
        } else if config.fresh_only {
            expand_features(&pool, &fresh, &config.operators)
        } else {
            expand_features(&pool, &vec![true; pool.len()], &config.operators)
        };
        lap(format!("order{order}.expand"), &mut timings);
        let mut report =
            OrderReport { order, candidates: candidates.len(), halving: HalvingSchedule::default(), ranked: 0, selected: 0 };
        if candidates.is_empty() {
            orders.push(report);
            break;
        }

        let scorer = BoostScorer {
            dataset: ds,
            base: &base,
            fit_rows: stats_rows,
            mode: config.mode,
            settings: EvalSettings::new(stage1.clone(), config.valid_fraction, config.seed),
        };
        let (survivors, halving) =
            successive_pruning(&candidates, &plan.train_blocks(), config.seed.wrapping_add(order as u64), &scorer)?;
        report.halving = halving;
        lap(format!("order{order}.stage1"), &mut timings);
        if survivors.is_empty() {
            orders.push(report);
            break;
        }

        let train_rows = &plan.train_rows;
        let survivor_cols = survivors
            .par_iter()
            .map(|c| Ok(fit_transform(&c.expr, ds, stats_rows, train_rows, config.mode)?.0))
            .collect::<Result<Vec<Column>>>()?;
        let base_cols: Vec<Column> = current.iter().map(|c| c.gather(train_rows)).collect();
        let ranked = feature_attribution(
            survivors,
            &base_cols.iter().collect::<Vec<_>>(),
            &survivor_cols.iter().collect::<Vec<_>>(),
            ds,
            &base,
            train_rows,
            &EvalSettings::new(stage2.clone(), config.valid_fraction, config.seed),
        )?;
        drop(survivor_cols);
        report.ranked = ranked.len();
        let top = select_top_k(&ranked, config.top_k);
        report.selected = top.len();
        lap(format!("order{order}.stage2"), &mut timings);

        fresh = vec![false; pool.len()];
        for expr in top {
            let c = ranked.iter().find(|c| c.expr == expr).expect("selected from ranked");
            let kind = expr.kind_with(&|n| ds.column(n).map(Column::kind))?;
            let column = fit_transform(&expr, ds, stats_rows, &all_rows, config.mode)?.0.with_name(canonical_string(&expr));
            accepted.push(Accepted {
                expr: expr.clone(),
                kind,
                column,
                delta: c.delta_value(),
                importance: c.importance.unwrap_or(0.0),
                order,
            });
            pool.push((expr, kind));
            fresh.push(true);
        }
        orders.push(report);
    }

    let mut stats = FittedStats::new(config.mode, stats_rows.len());
    for a in &accepted {
        stats.merge(fit_transform(&a.expr, ds, stats_rows, &all_rows, config.mode)?.1);
    }
    let spec = TransformSpec {
        config_hash: config.hash(),
        seed: config.seed,
        dataset_fingerprint: ds.fingerprint(),
        mode: config.mode,
        base_features: base_kinds,
        entries: accepted
            .iter()
            .map(|a| SpecEntry { expr: a.expr.clone(), importance: a.importance, delta: a.delta })
            .collect(),
        stats,
    };

    let base_cols: Vec<&Column> = ds.columns().iter().collect();
    let aug_cols: Vec<&Column> = base_cols.iter().copied().chain(accepted.iter().map(|a| &a.column)).collect();
    let eval = |cols: &[&Column]| {
        holdout_metric(ds, cols, &plan.train_rows, &plan.valid_rows, &base_params, metric, config.valid_fraction, config.seed)
    };
    let base_metric = eval(&base_cols)?;
    let augmented_metric = if accepted.is_empty() { base_metric } else { eval(&aug_cols)? };
    lap("final_metric".to_string(), &mut timings);
    debug_assert!(accepted.iter().all(|a| a.kind == a.column.kind()));

    let report = RunReport {
        orders,
        timings,
        metric,
        base_metric,
        augmented_metric,
        scores: accepted
            .iter()
            .map(|a| ScoreRow { expr: a.expr.clone(), order: a.order, delta: a.delta, importance: a.importance })
            .collect(),
        train_rows: plan.train_rows.len(),
        valid_rows: plan.valid_rows.len(),
    };
    Ok((spec, report))
}
