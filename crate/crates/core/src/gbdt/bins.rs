use std::collections::HashMap;

use crate::dataframe::{Column, ColumnData};

/// Per-feature discretization learned from the training rows.
///
/// Bins `0..n_bins()` hold present values; bin `n_bins()` holds missing ones.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FeatureBins {
    /// Value `v` lands in bin `#{t in thresholds : t < v}`.
    Numeric { thresholds: Vec<f64> },
    /// The most frequent codes get their own bin; the last bin collects the rest.
    Categorical { bin_of: HashMap<u32, u16>, n_bins: usize },
}

impl FeatureBins {
    pub fn fit(col: &Column, rows: &[usize], max_bins: usize) -> Self {
        match col.data() {
            ColumnData::Numeric(values) => {
                let mut present: Vec<f64> =
                    rows.iter().filter(|&&r| !col.is_missing(r)).map(|&r| values[r]).collect();
                present.sort_by(f64::total_cmp);
                FeatureBins::Numeric { thresholds: numeric_thresholds(&present, max_bins) }
            }
            ColumnData::Categorical { codes, .. } => {
                let mut counts: HashMap<u32, usize> = HashMap::new();
                for &r in rows {
                    if !col.is_missing(r) {
                        *counts.entry(codes[r]).or_default() += 1;
                    }
                }
                let mut ranked: Vec<(u32, usize)> = counts.into_iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                ranked.truncate(max_bins - 1);
                ranked.sort_by_key(|&(code, _)| code);
                let bin_of: HashMap<u32, u16> =
                    ranked.iter().enumerate().map(|(i, &(code, _))| (code, i as u16)).collect();
                let n_bins = bin_of.len() + 1;
                FeatureBins::Categorical { bin_of, n_bins }
            }
        }
    }

    pub fn n_bins(&self) -> usize {
        match self {
            FeatureBins::Numeric { thresholds } => thresholds.len() + 1,
            FeatureBins::Categorical { n_bins, .. } => *n_bins,
        }
    }

    pub fn missing_bin(&self) -> u16 {
        self.n_bins() as u16
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, FeatureBins::Categorical { .. })
    }

    /// Raw threshold for a split after bin `b`; `+inf` for the last bin.
    pub fn threshold(&self, b: usize) -> f64 {
        match self {
            FeatureBins::Numeric { thresholds } => thresholds.get(b).copied().unwrap_or(f64::INFINITY),
            FeatureBins::Categorical { .. } => f64::NAN,
        }
    }

    pub fn bin(&self, col: &Column, row: usize) -> u16 {
        if col.is_missing(row) {
            return self.missing_bin();
        }
        match (self, col.data()) {
            (FeatureBins::Numeric { thresholds }, ColumnData::Numeric(v)) => {
                thresholds.partition_point(|&t| t < v[row]) as u16
            }
            (FeatureBins::Categorical { bin_of, n_bins }, ColumnData::Categorical { codes, .. }) => {
                bin_of.get(&codes[row]).copied().unwrap_or((*n_bins - 1) as u16)
            }
            _ => unreachable!("column kind checked against the model schema"),
        }
    }

    pub fn bin_column(&self, col: &Column) -> Vec<u16> {
        (0..col.len()).map(|r| self.bin(col, r)).collect()
    }
}

/// Point strictly between `a < b` that `a` falls at or below.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b || !m.is_finite() {
        a
    } else {
        m
    }
}

/// Midpoints between consecutive distinct values, or between quantile cut
/// points when there are more distinct values than bins.
fn numeric_thresholds(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &v in sorted {
        match distinct.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0].0, w[1].0)).collect();
    }
    let total = sorted.len();
    let mut thresholds = Vec::with_capacity(max_bins - 1);
    let mut cum = 0usize;
    let mut next_cut = 1usize;
    for i in 0..distinct.len() - 1 {
        cum += distinct[i].1;
        if cum * max_bins >= next_cut * total {
            thresholds.push(midpoint(distinct[i].0, distinct[i + 1].0));
            while next_cut * total <= cum * max_bins {
                next_cut += 1;
            }
        }
    }
    thresholds
}
