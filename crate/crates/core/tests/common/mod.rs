#![allow(dead_code)]

use featgen::dataframe::{Column, Dataset, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `y = 3 x1 x2 + x3 / x4 + N(0, 0.1)` over `n_features` columns `x1..`
/// drawn from U(0.5, 2).
pub fn planted(n: usize, n_features: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let xs: Vec<Vec<f64>> = (0..n_features).map(|_| (0..n).map(|_| r.random_range(0.5..2.0)).collect()).collect();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let y: Vec<f64> =
        (0..n).map(|i| 3.0 * xs[0][i] * xs[1][i] + xs[2][i] / xs[3][i] + noise.sample(&mut r)).collect();
    let cols = xs.into_iter().enumerate().map(|(j, v)| Column::numeric(format!("x{}", j + 1), v)).collect();
    Dataset::new(cols, Column::numeric("y", y), Task::Regression).unwrap()
}

/// `y = x1 x2 + x3 x4 + N(0, 0.1)` over `n_features` columns `x1..` drawn
/// from U(-1, 1); neither product is monotone in its inputs.
pub fn interactions(n: usize, n_features: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let xs: Vec<Vec<f64>> = (0..n_features).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let y: Vec<f64> =
        (0..n).map(|i| xs[0][i] * xs[1][i] + xs[2][i] * xs[3][i] + noise.sample(&mut r)).collect();
    let cols = xs.into_iter().enumerate().map(|(j, v)| Column::numeric(format!("x{}", j + 1), v)).collect();
    Dataset::new(cols, Column::numeric("y", y), Task::Regression).unwrap()
}

/// Mean of `x` per group over `rows`, with the overall mean for groups
/// without rows. Missing values of `x` are skipped; a missing `x` or group
/// at `at` gives a missing result.
pub fn group_mean(x: &[Option<f64>], g: &[Option<String>], rows: &[usize], at: usize) -> Option<f64> {
    x[at]?;
    g[at].as_ref()?;
    let values = |same: &dyn Fn(usize) -> bool| -> Vec<f64> {
        rows.iter().filter(|&&r| same(r)).filter_map(|&r| x[r]).collect()
    };
    let own = values(&|r| g[r] == g[at]);
    let pick = if own.is_empty() { values(&|_| true) } else { own };
    if pick.is_empty() {
        return None;
    }
    Some(pick.iter().sum::<f64>() / pick.len() as f64)
}

/// Rank-sum-free AUC: share of (positive, negative) pairs ordered correctly,
/// ties counting one half.
pub fn pairwise_auc(y: &[f64], s: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1.0 && y[j] == 0.0 {
                den += 1.0;
                num += if s[i] > s[j] {
                    1.0
                } else if s[i] == s[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

/// Best squared-error split threshold by scanning every midpoint between
/// adjacent distinct values. Ties keep the lowest threshold.
pub fn exhaustive_threshold(xs: &[f64], y: &[f64], lambda: f64, min_child: usize) -> Option<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    // MSE gradient at the mean, hessian 2 per row
    let g: Vec<f64> = y.iter().map(|v| 2.0 * (mean - v)).collect();
    let g_total: f64 = g.iter().sum();
    let h_total = 2.0 * y.len() as f64;
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    let mut best: Option<(f64, f64)> = None;
    let (mut gl, mut nl) = (0.0, 0usize);
    for w in 0..idx.len() - 1 {
        gl += g[idx[w]];
        nl += 1;
        let (a, b) = (xs[idx[w]], xs[idx[w + 1]]);
        if a == b || nl < min_child || idx.len() - nl < min_child {
            continue;
        }
        let hl = 2.0 * nl as f64;
        let gain = score(gl, hl) + score(g_total - gl, h_total - hl) - score(g_total, h_total);
        if gain > 1e-12 && best.is_none_or(|(bg, _)| gain > bg + 1e-9) {
            best = Some((gain, a + (b - a) / 2.0));
        }
    }
    best.map(|(_, t)| t)
}

/// Relative agreement at `tol`, with a floor on the scale.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-2)
}

pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
