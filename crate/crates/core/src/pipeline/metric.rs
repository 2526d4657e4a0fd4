use std::fmt;
use std::str::FromStr;

use crate::dataframe::Task;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Rmse,
    Auc,
    Accuracy,
}

impl Metric {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Regression => Metric::Rmse,
            Task::Binary => Metric::Auc,
            Task::Multiclass => Metric::Accuracy,
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Rmse)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rmse => "RMSE",
            Metric::Auc => "AUC",
            Metric::Accuracy => "Accuracy",
        }
    }

    /// `scores` holds `n_outputs` raw scores per label.
    pub fn compute(self, y: &[f64], scores: &[f64], n_outputs: usize) -> Result<f64> {
        if n_outputs == 0 || y.len() * n_outputs != scores.len() {
            return Err(Error::contract("scores do not match labels"));
        }
        if y.is_empty() {
            return Err(Error::Undefined("metric over zero rows".into()));
        }
        match self {
            Metric::Rmse => Ok(rmse(y, scores)),
            Metric::Auc if n_outputs == 1 => auc(y, scores),
            Metric::Auc => Err(Error::Unsupported("AUC needs a single score per row".into())),
            Metric::Accuracy => Ok(accuracy(y, scores, n_outputs)),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmse" => Ok(Metric::Rmse),
            "auc" => Ok(Metric::Auc),
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            other => Err(Error::config(format!("unknown metric '{other}'"))),
        }
    }
}

pub fn rmse(y: &[f64], pred: &[f64]) -> f64 {
    let sse: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    (sse / y.len() as f64).sqrt()
}

/// Area under the ROC curve from the rank-sum statistic; tied scores share
/// their average rank. Labels are 0/1.
pub fn auc(y: &[f64], scores: &[f64]) -> Result<f64> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += idx[i..=j].iter().filter(|&&r| y[r] > 0.5).count() as f64 * avg_rank;
        i = j + 1;
    }
    let n_pos = y.iter().filter(|&&v| v > 0.5).count() as f64;
    let n_neg = y.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::Undefined("AUC with a single class".into()));
    }
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Share of rows whose highest score is the label; a single score is read as
/// the logit of class 1.
pub fn accuracy(y: &[f64], scores: &[f64], n_outputs: usize) -> f64 {
    let hits = y
        .iter()
        .zip(scores.chunks(n_outputs))
        .filter(|(&t, s)| {
            let predicted = if n_outputs == 1 {
                (s[0] > 0.0) as usize
            } else {
                s.iter().enumerate().fold(0, |best, (k, v)| if *v > s[best] { k } else { best })
            };
            predicted == t as usize
        })
        .count();
    hits as f64 / y.len() as f64
}
