//! Two-stage candidate reduction.
//!
//! Stage one repeatedly scores every live candidate on a growing row subset
//! and keeps the better half. Stage two fits one residual model over the base
//! columns and all survivors and ranks survivors by their share of split gain.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boost_eval::{evaluate_full, feature_boost, BasePredictions, DeltaScore, EvalSettings};
use crate::dataframe::{Column, ColumnData, Dataset};
use crate::error::{Error, Result};
use crate::gbdt::mdi;
use crate::ops::{canonical_string, fit_transform, FeatureExpr, FitMode};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub expr: FeatureExpr,
    pub delta: Option<DeltaScore>,
    pub importance: Option<f64>,
    pub alive: bool,
    pub value_hash: u64,
}

impl Candidate {
    pub fn new(expr: FeatureExpr) -> Self {
        Candidate { expr, delta: None, importance: None, alive: true, value_hash: 0 }
    }

    pub fn delta_value(&self) -> f64 {
        self.delta.map_or(f64::NEG_INFINITY, |d| d.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HalvingSchedule {
    pub q: u32,
    /// Rows scored in iteration `i`; each set contains the previous one.
    pub subset_per_iteration: Vec<Vec<usize>>,
    /// Live candidates after iteration `i`.
    pub survivors_per_iteration: Vec<usize>,
    /// Candidates dropped as value duplicates in iteration `i`.
    pub duplicates_per_iteration: Vec<usize>,
    /// Survivors after dropping non-positive deltas.
    pub final_survivors: usize,
}

/// Materialized values quantized to 12 significant digits, for duplicate detection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueKey(Vec<u64>);

impl ValueKey {
    pub fn of(col: &Column) -> Self {
        const MISSING: u64 = u64::MAX;
        match col.data() {
            ColumnData::Numeric(v) => {
                let mut out = Vec::with_capacity(v.len() + 1);
                out.push(0);
                out.extend(v.iter().zip(col.missing()).map(|(&x, &m)| if m { MISSING } else { quantize(x) }));
                ValueKey(out)
            }
            ColumnData::Categorical { codes, .. } => {
                // codes renumbered by first appearance: equal partitions compare equal
                let mut remap: HashMap<u32, u64> = HashMap::new();
                let mut out = Vec::with_capacity(codes.len() + 1);
                out.push(1);
                for (&c, &m) in codes.iter().zip(col.missing()) {
                    let next = remap.len() as u64;
                    out.push(if m { MISSING } else { *remap.entry(c).or_insert(next) });
                }
                ValueKey(out)
            }
        }
    }

    pub fn hash64(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

fn quantize(v: f64) -> u64 {
    if v == 0.0 || !v.is_finite() {
        return (v + 0.0).to_bits();
    }
    let p = 11 - v.abs().log10().floor() as i32;
    if (-300..=300).contains(&p) {
        let s = 10f64.powi(p);
        ((v * s).round() / s).to_bits()
    } else {
        format!("{v:.11e}").parse::<f64>().map_or(v.to_bits(), f64::to_bits)
    }
}

/// Outcome of scoring one candidate on one subset.
#[derive(Debug, Clone)]
pub struct Scored {
    pub delta: DeltaScore,
    pub values: ValueKey,
}

/// Scores a candidate on a row subset.
pub trait CandidateScorer: Sync {
    fn score(&self, expr: &FeatureExpr, rows: &[usize]) -> Result<Scored>;
}

/// Materializes a candidate and scores it by residual boosting.
pub struct BoostScorer<'a> {
    pub dataset: &'a Dataset,
    pub base: &'a BasePredictions,
    /// Rows statistics are fit on.
    pub fit_rows: &'a [usize],
    pub mode: FitMode,
    pub settings: EvalSettings,
}

impl CandidateScorer for BoostScorer<'_> {
    fn score(&self, expr: &FeatureExpr, rows: &[usize]) -> Result<Scored> {
        let (col, _) = fit_transform(expr, self.dataset, self.fit_rows, rows, self.mode)?;
        let delta = feature_boost(self.dataset, &[&col], self.base, rows, &self.settings)?;
        Ok(Scored { delta, values: ValueKey::of(&col) })
    }
}

fn rank_by_delta(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.delta_value().total_cmp(&a.delta_value()).then_with(|| canonical_string(&a.expr).cmp(&canonical_string(&b.expr)))
}

/// Successive halving over `blocks.len() = 2^q` row blocks.
///
/// Iteration `i` scores the live candidates on `2^i` blocks (a seeded
/// order, so subsets nest), drops value duplicates keeping the first in
/// canonical order, and keeps the better half by delta. With a single block
/// no halving happens. Finally every candidate with delta <= 0 is dropped.
/// Survivors are returned best first.
pub fn successive_pruning(
    candidates: &[FeatureExpr],
    blocks: &[Vec<usize>],
    seed: u64,
    scorer: &dyn CandidateScorer,
) -> Result<(Vec<Candidate>, HalvingSchedule)> {
    if blocks.is_empty() || !blocks.len().is_power_of_two() {
        return Err(Error::contract(format!("{} blocks is not a power of two", blocks.len())));
    }
    let q = blocks.len().trailing_zeros();
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut alive: Vec<Candidate> = candidates.iter().cloned().map(Candidate::new).collect();
    alive.sort_by_cached_key(|c| canonical_string(&c.expr));
    alive.dedup_by(|a, b| a.expr == b.expr);

    let mut schedule = HalvingSchedule { q, ..Default::default() };
    let mut rows: Vec<usize> = Vec::new();
    for i in 0..=q {
        let lo = if i == 0 { 0 } else { 1usize << (i - 1) };
        for &b in &order[lo..1usize << i] {
            rows.extend_from_slice(&blocks[b]);
        }
        rows.sort_unstable();
        rows.dedup();

        let scored: Vec<Scored> = alive.par_iter().map(|c| scorer.score(&c.expr, &rows)).collect::<Result<_>>()?;
        let mut kept: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut duplicates = 0;
        for (idx, (c, s)) in alive.iter_mut().zip(&scored).enumerate() {
            c.delta = Some(s.delta);
            c.value_hash = s.values.hash64();
            let same_hash = kept.entry(c.value_hash).or_default();
            if same_hash.iter().any(|&j| scored[j].values == s.values) {
                c.alive = false;
                duplicates += 1;
            } else {
                same_hash.push(idx);
            }
        }
        drop(scored);
        alive.retain(|c| c.alive);
        alive.sort_by(rank_by_delta);
        if q > 0 {
            alive.truncate(alive.len().div_ceil(2));
        }
        alive.sort_by_cached_key(|c| canonical_string(&c.expr));
        schedule.subset_per_iteration.push(rows.clone());
        schedule.survivors_per_iteration.push(alive.len());
        schedule.duplicates_per_iteration.push(duplicates);
    }
    alive.retain(|c| c.delta_value() > 0.0);
    alive.sort_by(rank_by_delta);
    schedule.final_survivors = alive.len();
    Ok((alive, schedule))
}

/// Rank survivors by their normalized split gain in one joint residual model
/// over `base_columns` followed by `survivor_columns` (aligned with
/// `survivors`). Ties fall back to delta, then canonical string.
pub fn feature_attribution(
    survivors: Vec<Candidate>,
    base_columns: &[&Column],
    survivor_columns: &[&Column],
    dataset: &Dataset,
    base: &BasePredictions,
    rows: &[usize],
    settings: &EvalSettings,
) -> Result<Vec<Candidate>> {
    if survivors.len() != survivor_columns.len() {
        return Err(Error::contract("one column per survivor is required"));
    }
    if survivors.is_empty() {
        return Ok(survivors);
    }
    let (_, model) = evaluate_full(dataset, base_columns, survivor_columns, base, rows, settings)?;
    let importance = mdi(&model);
    let offset = base_columns.len();
    let mut ranked: Vec<Candidate> = survivors
        .into_iter()
        .enumerate()
        .map(|(i, mut c)| {
            c.importance = Some(importance[offset + i]);
            c
        })
        .collect();
    ranked.sort_by(|a, b| {
        let (ia, ib) = (a.importance.unwrap_or(0.0), b.importance.unwrap_or(0.0));
        ib.total_cmp(&ia).then_with(|| rank_by_delta(a, b))
    });
    Ok(ranked)
}

/// The first `min(k, len)` expressions.
pub fn select_top_k(sorted: &[Candidate], k: usize) -> Vec<FeatureExpr> {
    sorted.iter().take(k).map(|c| c.expr.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataframe::Task;
    use crate::gbdt::BoostParams;
    use crate::ops::{parse_expr, Operator};
    use rand::Rng;

    /// Deterministic scorer: delta from a lookup table, values unique per expression
    /// unless listed as aliases.
    struct TableScorer {
        deltas: HashMap<String, f64>,
        aliases: HashMap<String, String>,
    }

    impl CandidateScorer for TableScorer {
        fn score(&self, expr: &FeatureExpr, rows: &[usize]) -> Result<Scored> {
            let name = canonical_string(expr);
            let delta = self.deltas[&name];
            let key_name = self.aliases.get(&name).unwrap_or(&name);
            let seed = key_name.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
            let col = Column::numeric("v", rows.iter().map(|&r| (seed as f64) + r as f64).collect());
            let d = DeltaScore { delta, base_loss: 1.0, boosted_loss: 1.0 - delta, rows_used: rows.len(), trees_used: 1 };
            Ok(Scored { delta: d, values: ValueKey::of(&col) })
        }
    }

    fn names(n: usize) -> Vec<FeatureExpr> {
        (0..n).map(|i| FeatureExpr::unary(Operator::Abs, FeatureExpr::base(format!("x{i:02}")))).collect()
    }

    fn blocks(n_blocks: usize) -> Vec<Vec<usize>> {
        (0..n_blocks).map(|b| (b * 10..b * 10 + 10).collect()).collect()
    }

    fn table(exprs: &[FeatureExpr], deltas: &[f64]) -> TableScorer {
        TableScorer {
            deltas: exprs.iter().map(canonical_string).zip(deltas.iter().copied()).collect(),
            aliases: HashMap::new(),
        }
    }

    #[test]
    fn sixteen_candidates_two_rounds_leave_two() {
        let exprs = names(16);
        let deltas: Vec<f64> = (0..16).map(|i| 0.1 + i as f64 * 0.01).collect();
        let (out, schedule) = successive_pruning(&exprs, &blocks(4), 1, &table(&exprs, &deltas)).unwrap();
        assert_eq!(schedule.survivors_per_iteration, vec![8, 4, 2]);
        let got: Vec<String> = out.iter().map(|c| canonical_string(&c.expr)).collect();
        assert_eq!(got, vec!["abs(x15)", "abs(x14)"]);
        for w in schedule.subset_per_iteration.windows(2) {
            assert!(w[0].iter().all(|r| w[1].contains(r)));
            assert_eq!(w[1].len(), 2 * w[0].len());
        }
    }

    #[test]
    fn single_block_keeps_exactly_positive_deltas() {
        let exprs = names(20);
        let deltas: Vec<f64> = (0..20).map(|i| i as f64 - 9.5).collect();
        let (out, schedule) = successive_pruning(&exprs, &blocks(1), 1, &table(&exprs, &deltas)).unwrap();
        assert_eq!(schedule.survivors_per_iteration, vec![20]);
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|c| c.delta_value() > 0.0));
    }

    #[test]
    fn value_duplicates_are_merged() {
        let a = parse_expr("max(a,b)").unwrap();
        let b = parse_expr("max(a,c)").unwrap();
        let mut scorer = table(&[a.clone(), b.clone()], &[0.5, 0.7]);
        scorer.aliases.insert(canonical_string(&b), canonical_string(&a));
        let (out, schedule) = successive_pruning(&[b, a.clone()], &blocks(1), 3, &scorer).unwrap();
        assert_eq!(schedule.duplicates_per_iteration, vec![1]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].expr, a);
    }

    #[test]
    fn equal_values_from_real_columns_share_a_key() {
        let a = Column::numeric("a", vec![1.0, 2.0, 0.1 + 0.2]);
        let b = Column::numeric("b", vec![1.0, 2.0, 0.3]);
        assert_eq!(ValueKey::of(&a), ValueKey::of(&b));
        let c = Column::categorical("c", &[Some("x"), Some("y"), Some("x")]);
        let d = Column::categorical("d", &[Some("p"), Some("q"), Some("p")]);
        assert_eq!(ValueKey::of(&c), ValueKey::of(&d));
        assert_ne!(ValueKey::of(&a), ValueKey::of(&Column::numeric("e", vec![1.0, 2.0, 0.31])));
    }

    #[test]
    fn top_k_takes_a_prefix() {
        let cands: Vec<Candidate> = names(7).into_iter().map(Candidate::new).collect();
        assert!(select_top_k(&cands, 0).is_empty());
        assert_eq!(select_top_k(&cands, 10).len(), 7);
        assert_eq!(select_top_k(&cands, 3), names(3));
    }

    fn max_problem() -> (Dataset, BasePredictions) {
        // a dominates b and c, so max(a,b) and max(a,c) both equal a
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400;
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(10.0..11.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = a.iter().map(|v| v * v).collect();
        let ds = Dataset::new(
            vec![Column::numeric("a", a), Column::numeric("b", b), Column::numeric("c", c)],
            Column::numeric("y", y.clone()),
            Task::Regression,
        )
        .unwrap();
        let mean = y.iter().sum::<f64>() / n as f64;
        (ds, BasePredictions::new(vec![mean; n], 1, vec![true; n]).unwrap())
    }

    #[test]
    fn dominated_max_candidates_collapse() {
        let (ds, base) = max_problem();
        let rows: Vec<usize> = (0..400).collect();
        let scorer = BoostScorer {
            dataset: &ds,
            base: &base,
            fit_rows: &rows,
            mode: FitMode::TrainFit,
            settings: EvalSettings::new(BoostParams::stage1(), 0.2, 1),
        };
        let exprs = vec![parse_expr("max(a,b)").unwrap(), parse_expr("max(a,c)").unwrap()];
        let (out, schedule) = successive_pruning(&exprs, &[rows.clone()], 1, &scorer).unwrap();
        assert_eq!(schedule.duplicates_per_iteration, vec![1]);
        assert_eq!(out.len(), 1);
        assert_eq!(canonical_string(&out[0].expr), "max(a,b)");
    }

    #[test]
    fn attribution_orders_by_importance() {
        let (ds, base) = max_problem();
        let rows: Vec<usize> = (0..400).collect();
        let settings = EvalSettings::new(BoostParams::stage2(), 0.2, 1);
        let a = ds.column("a").unwrap().clone();
        let b = ds.column("b").unwrap().clone();
        let survivors = vec![Candidate::new(FeatureExpr::base("b")), Candidate::new(FeatureExpr::base("a"))];
        let ranked = feature_attribution(survivors, &[], &[&b, &a], &ds, &base, &rows, &settings).unwrap();
        assert_eq!(ranked[0].expr, FeatureExpr::base("a"));
        assert!(ranked[0].importance.unwrap() > ranked[1].importance.unwrap());
        let single = feature_attribution(vec![Candidate::new(FeatureExpr::base("a"))], &[], &[&a], &ds, &base, &rows, &settings).unwrap();
        assert_eq!(single[0].importance, Some(1.0));
    }
}
