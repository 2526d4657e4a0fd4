//! Two-phase synthetic data: a hidden value `Z` is drawn per group, then the
//! rows of that group are drawn given `Z`. Learners see the rows and the
//! group id, never `Z`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::boost_eval::holdout_split;
use crate::dataframe::{Column, Dataset, Task};
use crate::error::{Error, Result};
use crate::gbdt::{self, BoostParams, Objective};
use crate::ops::{fit_transform, FeatureExpr, FitMode, Operator};

pub const GROUP_COLUMN: &str = "group_id";
pub const TARGET_COLUMN: &str = "y";
/// Bayes MSE of any predictor that sees only `x` under [`Scenario::BernoulliQuarters`].
pub const BERNOULLI_FLOOR: f64 = 3.0 / 64.0;
/// Per-coordinate std of `x` around `Z` in [`Scenario::GaussianMeans`].
pub const GAUSSIAN_SPREAD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `Z` uniform on {1/4, 3/4}; one column `x ~ Bernoulli(Z)`; `y = Z`.
    BernoulliQuarters,
    /// `Z ~ U([0,1]^d)`; `x ~ N(Z, 0.25 I)`; `y = mean(Z) + N(0, noise^2)`.
    GaussianMeans,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::BernoulliQuarters => "bernoulli",
            Scenario::GaussianMeans => "gaussian",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernoulli" | "bernoulliquarters" | "bernoulli_quarters" => Ok(Scenario::BernoulliQuarters),
            "gaussian" | "gaussianmeans" | "gaussian_means" => Ok(Scenario::GaussianMeans),
            other => Err(Error::config(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub k1: usize,
    pub k2: usize,
    pub h: usize,
    /// Ignored by [`Scenario::BernoulliQuarters`], which always has one column.
    pub d: usize,
    pub scenario: Scenario,
    pub noise: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(scenario: Scenario, k1: usize, k2: usize, h: usize, seed: u64) -> Self {
        SynthConfig { k1, k2, h, d: 3, scenario, noise: 0.1, seed }
    }

    pub fn dims(&self) -> usize {
        match self.scenario {
            Scenario::BernoulliQuarters => 1,
            Scenario::GaussianMeans => self.d,
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        match self.scenario {
            Scenario::BernoulliQuarters => vec!["x".to_string()],
            Scenario::GaussianMeans => (0..self.d).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 == 0 || self.k2 == 0 || self.h == 0 {
            return Err(Error::config("k1, k2 and h must all be at least 1"));
        }
        if self.scenario == Scenario::GaussianMeans && self.d == 0 {
            return Err(Error::config("d must be at least 1"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::config(format!("noise {} must be finite and non-negative", self.noise)));
        }
        Ok(())
    }
}

/// Generated train and test sets plus the hidden group values.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub train: Dataset,
    pub test: Dataset,
    /// `Z` of each training group, `dims()` values per group.
    pub train_z: Vec<Vec<f64>>,
    pub test_z: Vec<Vec<f64>>,
}

/// Raw draws for all `k1 + k2` groups; groups `0..k1` are training groups.
struct Draws {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    z: Vec<Vec<f64>>,
}

fn draw(config: &SynthConfig) -> Result<Draws> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = config.dims();
    let n_groups = config.k1 + config.k2;
    let n = n_groups * config.h;
    let mut x = vec![Vec::with_capacity(n); d];
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n_groups);
    let spread = Normal::new(0.0, GAUSSIAN_SPREAD).expect("valid std");
    let noise = Normal::new(0.0, config.noise).map_err(|e| Error::config(e.to_string()))?;
    for _ in 0..n_groups {
        match config.scenario {
            Scenario::BernoulliQuarters => {
                let zg = if rng.random_bool(0.5) { 0.25 } else { 0.75 };
                for _ in 0..config.h {
                    x[0].push(if rng.random_bool(zg) { 1.0 } else { 0.0 });
                    y.push(zg);
                }
                z.push(vec![zg]);
            }
            Scenario::GaussianMeans => {
                let zg: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let mean = zg.iter().sum::<f64>() / d as f64;
                for _ in 0..config.h {
                    for (col, &zj) in x.iter_mut().zip(&zg) {
                        col.push(zj + spread.sample(&mut rng));
                    }
                    y.push(mean + noise.sample(&mut rng));
                }
                z.push(zg);
            }
        }
    }
    Ok(Draws { x, y, z })
}

fn group_label(group: usize, k1: usize) -> String {
    if group < k1 {
        format!("train_{group}")
    } else {
        format!("test_{}", group - k1)
    }
}

/// Dataset over groups `groups`, whose labels become dictionary entries in order.
fn build(config: &SynthConfig, draws: &Draws, groups: std::ops::Range<usize>) -> Result<Dataset> {
    let h = config.h;
    let rows = groups.start * h..groups.end * h;
    let mut columns: Vec<Column> = config
        .feature_names()
        .into_iter()
        .zip(&draws.x)
        .map(|(name, col)| Column::numeric(name, col[rows.clone()].to_vec()))
        .collect();
    let dictionary: Vec<String> = groups.clone().map(|g| group_label(g, config.k1)).collect();
    let codes = (0..groups.len()).flat_map(|g| std::iter::repeat_n(Some(g as u32), h)).collect();
    columns.push(Column::from_codes(GROUP_COLUMN, codes, dictionary)?);
    Dataset::new(columns, Column::numeric(TARGET_COLUMN, draws.y[rows].to_vec()), Task::Regression)
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    let draws = draw(config)?;
    let n_groups = config.k1 + config.k2;
    Ok(SynthData {
        train: build(config, &draws, 0..config.k1)?,
        test: build(config, &draws, config.k1..n_groups)?,
        train_z: draws.z[..config.k1].to_vec(),
        test_z: draws.z[config.k1..].to_vec(),
    })
}

/// Bayes-optimal MSE using `x` alone.
pub fn floor_loss(scenario: Scenario) -> Result<f64> {
    match scenario {
        Scenario::BernoulliQuarters => Ok(BERNOULLI_FLOOR),
        other => Err(Error::Unsupported(format!("no closed-form floor for scenario '{other}'"))),
    }
}

/// Test losses of a model on raw features and of one that also sees the
/// transductive group mean of every feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOutcome {
    pub raw_mse: f64,
    pub augmented_mse: f64,
    pub floor: Option<f64>,
}

/// Boosting parameters used by [`simulate`]: the screening model with a
/// bounded tree count and more patient early stopping.
pub fn sim_params() -> BoostParams {
    BoostParams { n_trees: 100, early_stopping_rounds: 10, ..BoostParams::stage1() }
}

/// Training and test groups in one frame, training rows first.
struct Joint {
    all: Dataset,
    y: Vec<f64>,
    train_rows: Vec<usize>,
    test_rows: Vec<usize>,
}

fn joint(config: &SynthConfig) -> Result<Joint> {
    let draws = draw(config)?;
    let all = build(config, &draws, 0..config.k1 + config.k2)?;
    let n_train = config.k1 * config.h;
    let y = all.target_values()?;
    Ok(Joint { train_rows: (0..n_train).collect(), test_rows: (n_train..all.n_rows()).collect(), y, all })
}

fn raw_score(config: &SynthConfig, j: &Joint, params: &BoostParams) -> Result<f64> {
    let names = config.feature_names();
    let raw: Vec<&Column> = names.iter().map(|n| j.all.column(n).expect("feature column")).collect();
    fit_and_score(&raw, &j.y, &j.train_rows, &j.test_rows, params, config.seed)
}

fn augmented_score(config: &SynthConfig, j: &Joint, params: &BoostParams) -> Result<f64> {
    let names = config.feature_names();
    let all_rows: Vec<usize> = (0..j.all.n_rows()).collect();
    let mut means = Vec::with_capacity(names.len());
    for name in &names {
        let expr =
            FeatureExpr::binary(Operator::GroupByThenMean, FeatureExpr::base(name.as_str()), FeatureExpr::base(GROUP_COLUMN));
        let (col, _) = fit_transform(&expr, &j.all, &j.train_rows, &all_rows, FitMode::Transductive)?;
        means.push(col);
    }
    let features: Vec<&Column> =
        names.iter().map(|n| j.all.column(n).expect("feature column")).chain(means.iter()).collect();
    fit_and_score(&features, &j.y, &j.train_rows, &j.test_rows, params, config.seed)
}

fn mse_params(params: &BoostParams) -> BoostParams {
    BoostParams { objective: Objective::Mse, ..params.clone() }
}

/// Fit on the training groups, report MSE on the test groups.
pub fn simulate(config: &SynthConfig, params: &BoostParams) -> Result<SimOutcome> {
    let params = mse_params(params);
    let j = joint(config)?;
    Ok(SimOutcome {
        raw_mse: raw_score(config, &j, &params)?,
        augmented_mse: augmented_score(config, &j, &params)?,
        floor: floor_loss(config.scenario).ok(),
    })
}

/// Test MSE of a model on the raw features alone.
pub fn raw_mse(config: &SynthConfig, params: &BoostParams) -> Result<f64> {
    raw_score(config, &joint(config)?, &mse_params(params))
}

/// Test MSE of a model on the raw features plus their transductive group means.
pub fn augmented_mse(config: &SynthConfig, params: &BoostParams) -> Result<f64> {
    augmented_score(config, &joint(config)?, &mse_params(params))
}

fn fit_and_score(
    x: &[&Column],
    y: &[f64],
    train_rows: &[usize],
    test_rows: &[usize],
    params: &BoostParams,
    seed: u64,
) -> Result<f64> {
    let (fit, hold) = holdout_split(train_rows.len(), 0.2, seed);
    let fit: Vec<usize> = fit.iter().map(|&i| train_rows[i]).collect();
    let hold: Vec<usize> = hold.iter().map(|&i| train_rows[i]).collect();
    let model = gbdt::train(x, y, None, &fit, &hold, params)?;
    let pred = gbdt::predict(&model, x, test_rows, None)?;
    let yt: Vec<f64> = test_rows.iter().map(|&r| y[r]).collect();
    Ok(gbdt::loss(Objective::Mse, &yt, &pred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn bernoulli(k1: usize, k2: usize, h: usize, seed: u64) -> SynthConfig {
        SynthConfig::new(Scenario::BernoulliQuarters, k1, k2, h, seed)
    }

    #[test]
    fn group_means_concentrate_on_z() {
        let data = generate(&bernoulli(100, 1, 10_000, 1)).unwrap();
        let x = data.train.column("x").unwrap().numeric_values().unwrap();
        let close = x
            .chunks(10_000)
            .zip(&data.train_z)
            .filter(|(rows, z)| (rows.iter().sum::<f64>() / 10_000.0 - z[0]).abs() <= 0.02)
            .count();
        assert!(close >= 99, "{close}");
    }

    #[test]
    fn train_and_test_groups_are_disjoint() {
        let data = generate(&bernoulli(20, 7, 3, 2)).unwrap();
        let labels = |ds: &Dataset| -> HashSet<String> {
            let c = ds.column(GROUP_COLUMN).unwrap();
            (0..ds.n_rows()).map(|r| c.display_value(r)).collect()
        };
        let (a, b) = (labels(&data.train), labels(&data.test));
        assert_eq!((a.len(), b.len()), (20, 7));
        assert!(a.is_disjoint(&b));
        assert_eq!(data.train.n_rows(), 60);
        assert_eq!(data.test.n_rows(), 21);
    }

    #[test]
    fn bernoulli_marginal_is_one_half() {
        let data = generate(&bernoulli(10_000, 1, 100, 3)).unwrap();
        let x = data.train.column("x").unwrap().numeric_values().unwrap();
        let p = x.iter().sum::<f64>() / x.len() as f64;
        assert!((p - 0.5).abs() <= 0.01, "{p}");
    }

    #[test]
    fn target_equals_hidden_value() {
        let data = generate(&bernoulli(5, 5, 4, 4)).unwrap();
        let y = data.test.target_values().unwrap();
        for (g, z) in data.test_z.iter().enumerate() {
            assert!(y[g * 4..(g + 1) * 4].iter().all(|&v| v == z[0]));
        }
    }

    /// Best constant per value of x, found by minimising the population
    /// quadratic over a grid and refining in closed form.
    #[test]
    fn floor_matches_brute_force() {
        let zs = [0.25, 0.75];
        let mut total = 0.0;
        for x in [0.0, 1.0] {
            // P(Z=z, X=x) with P(Z=z) = 1/2
            let w: Vec<f64> = zs.iter().map(|&z| 0.5 * if x == 1.0 { z } else { 1.0 - z }).collect();
            let loss = |c: f64| w.iter().zip(&zs).map(|(wi, z)| wi * (z - c) * (z - c)).sum::<f64>();
            let best = (0..=1000).map(|i| i as f64 / 1000.0).min_by(|a, b| loss(*a).total_cmp(&loss(*b))).unwrap();
            assert_eq!(best, if x == 1.0 { 0.625 } else { 0.375 });
            total += loss(best);
        }
        assert!((total - floor_loss(Scenario::BernoulliQuarters).unwrap()).abs() < 1e-15);
        assert_eq!(BERNOULLI_FLOOR, 0.046875);
    }

    #[test]
    fn floor_is_unsupported_for_gaussian() {
        assert!(matches!(floor_loss(Scenario::GaussianMeans), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gaussian_has_d_columns_and_noisy_target() {
        let cfg = SynthConfig { d: 4, ..SynthConfig::new(Scenario::GaussianMeans, 30, 10, 50, 5) };
        let data = generate(&cfg).unwrap();
        assert_eq!(data.train.columns().len(), 5);
        let y = data.train.target_values().unwrap();
        let resid: Vec<f64> = data
            .train_z
            .iter()
            .flat_map(|z| std::iter::repeat_n(z.iter().sum::<f64>() / 4.0, 50))
            .zip(&y)
            .map(|(m, v)| v - m)
            .collect();
        let sd = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
        assert!((sd - 0.1).abs() < 0.01, "{sd}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&bernoulli(10, 3, 5, 9)).unwrap();
        let b = generate(&bernoulli(10, 3, 5, 9)).unwrap();
        assert_eq!(a.train.fingerprint(), b.train.fingerprint());
        assert_eq!(a.test.fingerprint(), b.test.fingerprint());
    }

    #[test]
    fn zero_groups_is_a_config_error() {
        assert!(generate(&bernoulli(0, 1, 1, 0)).unwrap_err().is_config());
    }

    #[test]
    fn group_means_help_on_gaussian() {
        let cfg = SynthConfig::new(Scenario::GaussianMeans, 300, 100, 50, 6);
        let out = simulate(&cfg, &sim_params()).unwrap();
        assert!(out.augmented_mse < out.raw_mse, "{out:?}");
        assert!(out.floor.is_none());
        assert_eq!(raw_mse(&cfg, &sim_params()).unwrap(), out.raw_mse);
        assert_eq!(augmented_mse(&cfg, &sim_params()).unwrap(), out.augmented_mse);
    }
}
