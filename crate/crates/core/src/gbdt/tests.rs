use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataframe::Column;

fn params(objective: Objective) -> BoostParams {
    BoostParams { n_trees: 100, ..BoostParams::stage1() }.with_objective(objective)
}

fn refs(cols: &[Column]) -> Vec<&Column> {
    cols.iter().collect()
}

fn regression(n: usize, seed: u64) -> (Vec<Column>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = a.iter().zip(&b).map(|(x, z)| x * 2.0 + z * z + rng.random_range(-0.1..0.1)).collect();
    (vec![Column::numeric("a", a), Column::numeric("b", b)], y)
}

#[test]
fn loss_examples() {
    assert_eq!(loss(Objective::Mse, &[0.0, 2.0], &[0.0, 0.0]), 2.0);
    assert!((loss(Objective::LogLoss, &[1.0], &[0.0]) - 2f64.ln()).abs() < 1e-15);
    let soft = loss(Objective::Softmax { n_classes: 3 }, &[2.0], &[0.3, 0.3, 0.3]);
    assert!((soft - 3f64.ln()).abs() < 1e-15);
}

#[test]
fn extreme_scores_stay_finite() {
    assert!(loss(Objective::LogLoss, &[1.0, 0.0], &[-1e6, 1e6]).is_finite());
    assert!(loss(Objective::Softmax { n_classes: 2 }, &[0.0], &[-1e6, 1e6]).is_finite());
}

fn check_derivatives(objective: Objective, y: f64, scores: &[f64]) -> std::result::Result<(), TestCaseError> {
    let k = scores.len();
    let (mut g, mut h) = (vec![0.0; k], vec![0.0; k]);
    objective.grad_hess(y, scores, &mut g, &mut h);
    let step = 1e-5;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(1e-2);
    for j in 0..k {
        let mut up = scores.to_vec();
        let mut down = scores.to_vec();
        up[j] += step;
        down[j] -= step;
        let fd = (objective.row_loss(y, &up) - objective.row_loss(y, &down)) / (2.0 * step);
        prop_assert!(close(g[j], fd), "grad {j}: {} vs {fd}", g[j]);
        let (mut gu, mut gd, mut tmp) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        objective.grad_hess(y, &up, &mut gu, &mut tmp);
        objective.grad_hess(y, &down, &mut gd, &mut tmp);
        let fdh = (gu[j] - gd[j]) / (2.0 * step);
        prop_assert!(close(h[j], fdh), "hess {j}: {} vs {fdh}", h[j]);
    }
    Ok(())
}

proptest! {
    #[test]
    fn mse_derivatives(y in -5.0f64..5.0, s in -5.0f64..5.0) {
        check_derivatives(Objective::Mse, y, &[s])?;
    }

    #[test]
    fn logloss_derivatives(y in 0u8..2, s in -5.0f64..5.0) {
        check_derivatives(Objective::LogLoss, y as f64, &[s])?;
    }

    #[test]
    fn softmax_derivatives(y in 0u8..4, s in prop::collection::vec(-5.0f64..5.0, 4)) {
        check_derivatives(Objective::Softmax { n_classes: 4 }, y as f64, &s)?;
    }
}

#[test]
fn constant_target_gives_no_trees() {
    let x = Column::numeric("x", (0..100).map(|i| i as f64).collect());
    let y = vec![4.5; 100];
    let rows: Vec<usize> = (0..100).collect();
    let m = train(&[&x], &y, None, &rows, &[], &params(Objective::Mse)).unwrap();
    assert_eq!(m.n_iterations(), 0);
    assert_eq!(m.train_curve, vec![0.0]);
    assert!(predict(&m, &[&x], &rows, None).unwrap().iter().all(|&p| p == 4.5));
}

#[test]
fn all_missing_features_give_no_trees() {
    let x = Column::numeric("x", vec![f64::NAN; 50]);
    let y: Vec<f64> = (0..50).map(|i| i as f64).collect();
    let rows: Vec<usize> = (0..50).collect();
    let m = train(&[&x], &y, None, &rows, &[], &params(Objective::Mse)).unwrap();
    assert_eq!(m.n_iterations(), 0);
    assert_eq!(m.base_score, vec![24.5]);
}

#[test]
fn logloss_train_curve_decreases_strictly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = xs.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
    let x = Column::numeric("x", xs);
    let rows: Vec<usize> = (0..200).collect();
    let p = BoostParams { n_trees: 10, ..params(Objective::LogLoss) };
    let m = train(&[&x], &y, None, &rows, &[], &p).unwrap();
    assert_eq!(m.train_curve.len(), 11);
    assert!(m.train_curve.windows(2).all(|w| w[1] < w[0]), "{:?}", m.train_curve);
}

#[test]
fn mse_train_curve_is_monotone() {
    for seed in 0..5 {
        let (cols, y) = regression(400, seed);
        let rows: Vec<usize> = (0..400).collect();
        let m = train(&refs(&cols), &y, None, &rows, &[], &params(Objective::Mse)).unwrap();
        assert!(m.train_curve.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn predictions_reproduce_train_curve() {
    let (cols, y) = regression(300, 11);
    let train_rows: Vec<usize> = (0..240).collect();
    let valid_rows: Vec<usize> = (240..300).collect();
    let m = train(&refs(&cols), &y, None, &train_rows, &valid_rows, &params(Objective::Mse)).unwrap();
    assert!(m.best_iteration > 0);
    let p = predict(&m, &refs(&cols), &train_rows, None).unwrap();
    let yt: Vec<f64> = train_rows.iter().map(|&r| y[r]).collect();
    assert!((loss(Objective::Mse, &yt, &p) - m.train_curve[m.best_iteration]).abs() < 1e-9);
    let min = m.valid_curve.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(m.valid_curve[m.best_iteration], min);
    let pv = predict(&m, &refs(&cols), &valid_rows, None).unwrap();
    let yv: Vec<f64> = valid_rows.iter().map(|&r| y[r]).collect();
    assert!((loss(Objective::Mse, &yv, &pv) - min).abs() < 1e-9);
}

#[test]
fn gain_accounting_matches_kept_trees() {
    let (cols, y) = regression(300, 5);
    let rows: Vec<usize> = (0..300).collect();
    let m = train(&refs(&cols), &y, None, &rows[..250], &rows[250..], &params(Objective::Mse)).unwrap();
    let mut total = 0.0;
    for t in m.trees.iter().flatten() {
        for n in &t.nodes {
            if let Node::Split { gain, .. } = n {
                assert!(*gain >= 0.0);
                total += gain;
            }
        }
    }
    assert!(m.per_feature_gain.iter().all(|&g| g >= 0.0));
    let sum: f64 = m.per_feature_gain.iter().sum();
    assert!((sum - total).abs() <= 1e-9 * total.max(1.0));
    let imp = mdi(&m);
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(imp[0] > imp[1], "{imp:?}");
}

#[test]
fn missing_values_follow_learned_side() {
    // missing rows share the target of the high group
    let mut xs: Vec<f64> = (0..120).map(|i| i as f64).collect();
    let mut y: Vec<f64> = xs.iter().map(|&v| if v < 60.0 { 0.0 } else { 10.0 }).collect();
    for i in 0..30 {
        xs.push(f64::NAN);
        y.push(10.0 + i as f64 * 0.0);
    }
    let x = Column::numeric("x", xs);
    let rows: Vec<usize> = (0..150).collect();
    let p = BoostParams { n_trees: 1, max_leaves: 2, ..params(Objective::Mse) };
    let m = train(&[&x], &y, None, &rows, &[], &p).unwrap();
    let Node::Split { missing_left, left, right, .. } = &m.trees[0][0].nodes[0] else { panic!() };
    assert!(!missing_left);
    let Node::Leaf { value: right_value } = m.trees[0][0].nodes[*right] else { panic!() };
    let Node::Leaf { value: left_value } = m.trees[0][0].nodes[*left] else { panic!() };
    assert!(right_value > left_value);
    let pred = predict(&m, &[&x], &[149], None).unwrap();
    assert_eq!(pred[0], m.base_score[0] + right_value);
}

#[test]
fn categorical_split_groups_categories_by_response() {
    let labels = ["a", "b", "c", "d"];
    let means = [0.0, 5.0, 0.2, 5.1];
    let mut cats = Vec::new();
    let mut y = Vec::new();
    for i in 0..400 {
        cats.push(Some(labels[i % 4]));
        y.push(means[i % 4]);
    }
    let c = Column::categorical("c", &cats);
    let rows: Vec<usize> = (0..400).collect();
    let p = BoostParams { n_trees: 1, max_leaves: 2, ..params(Objective::Mse) };
    let m = train(&[&c], &y, None, &rows, &[], &p).unwrap();
    let Node::Split { rule: SplitRule::Categories { left }, .. } = &m.trees[0][0].nodes[0] else { panic!() };
    // low responders {a, c} on one side, {b, d} on the other
    assert_eq!(left[0], left[2]);
    assert_eq!(left[1], left[3]);
    assert_ne!(left[0], left[1]);
}

/// Exhaustive best threshold of a root split under squared error.
fn exhaustive_threshold(xs: &[f64], y: &[f64], lambda: f64, min_child: usize) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let g: Vec<f64> = y.iter().map(|t| 2.0 * (mean - t)).collect();
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let (gt, ht) = (g.iter().sum::<f64>(), 2.0 * xs.len() as f64);
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for w in distinct.windows(2) {
        let t = w[0] + (w[1] - w[0]) / 2.0;
        let (mut gl, mut n) = (0.0, 0usize);
        for (x, gi) in xs.iter().zip(&g) {
            if *x <= t {
                gl += gi;
                n += 1;
            }
        }
        if n < min_child || xs.len() - n < min_child {
            continue;
        }
        let hl = 2.0 * n as f64;
        let gr = gt - gl;
        let hr = ht - hl;
        let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - gt * gt / (ht + lambda);
        if gain > best.0 + 1e-9 {
            best = (gain, t);
        }
    }
    best.1
}

#[test]
fn histogram_split_matches_exhaustive_scan() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 500;
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..200) as f64 * 0.5).collect();
        let y: Vec<f64> = xs.iter().map(|&v| (v / 10.0).sin() + rng.random_range(-0.3..0.3)).collect();
        let x = Column::numeric("x", xs.clone());
        let rows: Vec<usize> = (0..n).collect();
        let p = BoostParams { n_trees: 1, max_leaves: 2, max_bins: 256, ..params(Objective::Mse) };
        let m = train(&[&x], &y, None, &rows, &[], &p).unwrap();
        let Node::Split { rule: SplitRule::Threshold { threshold, .. }, .. } = &m.trees[0][0].nodes[0] else {
            panic!()
        };
        assert_eq!(*threshold, exhaustive_threshold(&xs, &y, 1.0, 20), "seed {seed}");
    }
}

#[test]
fn margin_equals_residual_problem() {
    let (cols, y) = regression(300, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let margin: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
    let resid: Vec<f64> = y.iter().zip(&margin).map(|(a, b)| a - b).collect();
    let zeros = vec![0.0; 300];
    let (tr, va): (Vec<usize>, Vec<usize>) = ((0..250).collect(), (250..300).collect());
    let p = params(Objective::Mse);
    let a = train(&refs(&cols), &y, Some(&margin), &tr, &va, &p).unwrap();
    let b = train(&refs(&cols), &resid, Some(&zeros), &tr, &va, &p).unwrap();
    assert_eq!(a.train_curve.len(), b.train_curve.len());
    for (u, v) in a.train_curve.iter().zip(&b.train_curve).chain(a.valid_curve.iter().zip(&b.valid_curve)) {
        assert!((u - v).abs() < 1e-9);
    }
    // margin plus ensemble output, pointwise
    let pa = predict(&a, &refs(&cols), &va, Some(&margin[250..])).unwrap();
    let pb = predict(&b, &refs(&cols), &va, Some(&zeros[250..])).unwrap();
    for (i, r) in va.iter().enumerate() {
        assert!((pa[i] - (margin[*r] + pb[i])).abs() < 1e-9);
    }
}

#[test]
fn perfect_margin_leaves_nothing_to_learn() {
    let (cols, y) = regression(300, 2);
    let (tr, va): (Vec<usize>, Vec<usize>) = ((0..250).collect(), (250..300).collect());
    let m = train(&refs(&cols), &y, Some(&y), &tr, &va, &params(Objective::Mse)).unwrap();
    assert_eq!(m.best_iteration, 0);
    assert!(m.valid_curve[0] < 1e-20);
}

#[test]
fn training_is_deterministic() {
    let (cols, y) = regression(3000, 4);
    let rows: Vec<usize> = (0..3000).collect();
    let a = train(&refs(&cols), &y, None, &rows[..2500], &rows[2500..], &params(Objective::Mse)).unwrap();
    let b = train(&refs(&cols), &y, None, &rows[..2500], &rows[2500..], &params(Objective::Mse)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn softmax_learns_three_classes() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let xs: Vec<f64> = (0..600).map(|_| rng.random_range(0.0..3.0)).collect();
    let y: Vec<f64> = xs.iter().map(|v| v.floor()).collect();
    let x = Column::numeric("x", xs);
    let rows: Vec<usize> = (0..600).collect();
    let m = train(&[&x], &y, None, &rows[..500], &rows[500..], &params(Objective::Softmax { n_classes: 3 })).unwrap();
    assert_eq!(m.trees.len(), 3);
    assert!(m.valid_curve[m.best_iteration] < 0.2 * m.valid_curve[0]);
}

#[test]
fn stump_on_single_informative_feature() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cols: Vec<Column> = (0..5)
        .map(|j| Column::numeric(format!("x{j}"), (0..400).map(|_| rng.random_range(0.0..1.0)).collect()))
        .collect();
    let y: Vec<f64> = cols[3].numeric_values().unwrap().iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
    let rows: Vec<usize> = (0..400).collect();
    let p = BoostParams { n_trees: 1, max_leaves: 2, ..params(Objective::Mse) };
    let m = train(&refs(&cols), &y, None, &rows, &[], &p).unwrap();
    assert_eq!(mdi(&m), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
}

#[test]
fn schema_mismatch_is_rejected() {
    let (cols, y) = regression(100, 1);
    let rows: Vec<usize> = (0..100).collect();
    let m = train(&refs(&cols), &y, None, &rows, &[], &params(Objective::Mse)).unwrap();
    assert!(matches!(predict(&m, &[&cols[0]], &rows, None), Err(Error::Contract(_))));
    let cat = Column::categorical("b", &vec![Some("q"); 100]);
    assert!(matches!(predict(&m, &[&cols[0], &cat], &rows, None), Err(Error::Contract(_))));
}
