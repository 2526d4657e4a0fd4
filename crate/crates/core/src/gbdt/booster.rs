use super::bins::FeatureBins;
use super::tree::{Grower, Tree};
use super::{BoostParams, Objective, PROB_EPS};
use crate::dataframe::{Column, ColumnData};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoostModel {
    pub objective: Objective,
    /// `trees[k][i]` is iteration `i`'s tree for output `k`.
    pub trees: Vec<Vec<Tree>>,
    pub base_score: Vec<f64>,
    pub per_feature_gain: Vec<f64>,
    /// Kept iteration count; `valid_curve[best_iteration]` is the minimum.
    pub best_iteration: usize,
    /// Loss after `i` iterations, starting with the initial scores at index 0.
    pub train_curve: Vec<f64>,
    pub valid_curve: Vec<f64>,
    bins: Vec<FeatureBins>,
}

impl BoostModel {
    pub fn n_features(&self) -> usize {
        self.bins.len()
    }

    pub fn n_iterations(&self) -> usize {
        self.trees.first().map_or(0, Vec::len)
    }

    fn check_schema(&self, x: &[&Column]) -> Result<usize> {
        if x.len() != self.bins.len() {
            return Err(Error::contract(format!("model has {} features, got {}", self.bins.len(), x.len())));
        }
        for (i, (c, b)) in x.iter().zip(&self.bins).enumerate() {
            if matches!(c.data(), ColumnData::Categorical { .. }) != b.is_categorical() {
                return Err(Error::contract(format!("feature {i} ('{}') changed kind since training", c.name())));
            }
        }
        column_len(x)
    }
}

fn column_len(x: &[&Column]) -> Result<usize> {
    let m = x.first().map_or(0, |c| c.len());
    if x.iter().any(|c| c.len() != m) {
        return Err(Error::contract("feature columns differ in length"));
    }
    Ok(m)
}

fn initial_scores(objective: Objective, y: &[f64], rows: &[usize]) -> Vec<f64> {
    let n = rows.len() as f64;
    match objective {
        Objective::Mse => vec![rows.iter().map(|&r| y[r]).sum::<f64>() / n],
        Objective::LogLoss => {
            let p = (rows.iter().map(|&r| y[r]).sum::<f64>() / n).clamp(PROB_EPS, 1.0 - PROB_EPS);
            vec![(p / (1.0 - p)).ln()]
        }
        Objective::Softmax { n_classes } => {
            let mut counts = vec![0.0; n_classes];
            for &r in rows {
                counts[y[r] as usize] += 1.0;
            }
            counts.iter().map(|c| (c / n).clamp(PROB_EPS, 1.0).ln()).collect()
        }
    }
}

fn subset_loss(objective: Objective, y: &[f64], scores: &[f64], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let k = objective.n_outputs();
    let total: f64 = rows.iter().map(|&r| objective.row_loss(y[r], &scores[r * k..(r + 1) * k])).sum();
    total / rows.len() as f64
}

/// Fit a boosted ensemble.
///
/// `x` holds feature columns over `m` local rows; `y` and the optional
/// `margin` (`m * n_outputs` values, row-major) are indexed the same way.
/// With a margin the ensemble starts from it and `base_score` is zero.
/// Early stopping watches `valid_rows`; when empty, all `n_trees` rounds run.
pub fn train(
    x: &[&Column],
    y: &[f64],
    margin: Option<&[f64]>,
    train_rows: &[usize],
    valid_rows: &[usize],
    params: &BoostParams,
) -> Result<BoostModel> {
    params.validate()?;
    let objective = params.objective;
    let k = objective.n_outputs();
    let m = if x.is_empty() { y.len() } else { column_len(x)? };
    if y.len() != m {
        return Err(Error::contract(format!("{} labels for {m} rows", y.len())));
    }
    if train_rows.is_empty() {
        return Err(Error::contract("train_rows is empty"));
    }
    if train_rows.iter().chain(valid_rows).any(|&r| r >= m) {
        return Err(Error::contract("row index out of range"));
    }
    if let Some(mg) = margin {
        if mg.len() != m * k {
            return Err(Error::contract(format!("margin has {} values, expected {}", mg.len(), m * k)));
        }
    }
    if let Some(&r) = train_rows.iter().chain(valid_rows).find(|&&r| !objective.check_label(y[r])) {
        return Err(Error::contract(format!("label {} at row {r} is invalid for {objective:?}", y[r])));
    }

    let bins: Vec<FeatureBins> = x.iter().map(|c| FeatureBins::fit(c, train_rows, params.max_bins)).collect();
    let binned: Vec<Vec<u16>> = bins.iter().zip(x).map(|(b, c)| b.bin_column(c)).collect();
    let base_score = if margin.is_some() { vec![0.0; k] } else { initial_scores(objective, y, train_rows) };
    let mut scores: Vec<f64> = match margin {
        Some(mg) => mg.to_vec(),
        None => vec![0.0; m * k],
    };
    for r in 0..m {
        for (j, b) in base_score.iter().enumerate() {
            scores[r * k + j] += b;
        }
    }

    let grower = Grower {
        bins: &binned,
        specs: &bins,
        lambda: params.lambda_l2,
        min_child_samples: params.min_child_samples,
        max_leaves: params.max_leaves,
        learning_rate: params.learning_rate,
    };
    let mut trees: Vec<Vec<Tree>> = vec![Vec::new(); k];
    let mut train_curve = vec![subset_loss(objective, y, &scores, train_rows)];
    let mut valid_curve = Vec::new();
    if !valid_rows.is_empty() {
        valid_curve.push(subset_loss(objective, y, &scores, valid_rows));
    }
    let mut best = 0usize;
    let mut grad = vec![vec![0.0; m]; k];
    let mut hess = vec![vec![0.0; m]; k];
    let (mut g, mut h) = (vec![0.0; k], vec![0.0; k]);

    for iteration in 1..=params.n_trees {
        for &r in train_rows {
            objective.grad_hess(y[r], &scores[r * k..(r + 1) * k], &mut g, &mut h);
            for j in 0..k {
                grad[j][r] = g[j];
                hess[j][r] = h[j];
            }
        }
        let grown: Vec<_> = (0..k).map(|j| grower.grow(&grad[j], &hess[j], train_rows.to_vec())).collect();
        if grown.iter().all(Option::is_none) {
            break;
        }
        for (j, gr) in grown.into_iter().enumerate() {
            let tree = match gr {
                None => Tree::leaf(0.0),
                Some(gr) => {
                    for (value, rows) in &gr.leaf_rows {
                        for &r in rows {
                            scores[r * k + j] += value;
                        }
                    }
                    for &r in valid_rows {
                        scores[r * k + j] += gr.tree.value_by(|f| (binned[f][r], bins[f].missing_bin()));
                    }
                    gr.tree
                }
            };
            trees[j].push(tree);
        }
        train_curve.push(subset_loss(objective, y, &scores, train_rows));
        if !valid_rows.is_empty() {
            let v = subset_loss(objective, y, &scores, valid_rows);
            valid_curve.push(v);
            if v < valid_curve[best] {
                best = iteration;
            }
            if params.early_stopping_rounds > 0 && iteration - best >= params.early_stopping_rounds {
                break;
            }
        }
    }

    let best_iteration = if valid_rows.is_empty() { trees[0].len() } else { best };
    for t in &mut trees {
        t.truncate(best_iteration);
    }
    let mut per_feature_gain = vec![0.0; x.len()];
    for t in trees.iter().flatten() {
        t.add_gains(&mut per_feature_gain);
    }
    Ok(BoostModel { objective, trees, base_score, per_feature_gain, best_iteration, train_curve, valid_curve, bins })
}

/// Raw scores (`n_outputs` per row, row-major) for `rows` of `x`.
///
/// `margin`, when given, has one block per entry of `rows` and is added to the
/// base score, which is zero for models trained from a margin.
pub fn predict(model: &BoostModel, x: &[&Column], rows: &[usize], margin: Option<&[f64]>) -> Result<Vec<f64>> {
    let m = model.check_schema(x)?;
    let k = model.objective.n_outputs();
    if !x.is_empty() && rows.iter().any(|&r| r >= m) {
        return Err(Error::contract("row index out of range"));
    }
    let mut out = match margin {
        Some(mg) if mg.len() != rows.len() * k => {
            return Err(Error::contract(format!("margin has {} values, expected {}", mg.len(), rows.len() * k)))
        }
        Some(mg) => mg.to_vec(),
        None => vec![0.0; rows.len() * k],
    };
    for (i, &r) in rows.iter().enumerate() {
        for j in 0..k {
            let mut s = out[i * k + j] + model.base_score[j];
            for t in &model.trees[j] {
                s += t.value_by(|f| (model.bins[f].bin(x[f], r), model.bins[f].missing_bin()));
            }
            out[i * k + j] = s;
        }
    }
    Ok(out)
}
