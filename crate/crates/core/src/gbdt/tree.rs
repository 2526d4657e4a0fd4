use std::ops::{Add, Sub};

use rayon::prelude::*;

use super::bins::FeatureBins;
use super::MIN_HESSIAN;

/// Smallest gain that justifies a split.
const GAIN_EPS: f64 = 1e-12;
/// Below this many (row, feature) visits histograms are built serially.
const PARALLEL_WORK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Rows with `value <= threshold` (bin `<= bin`) go left.
    Threshold { threshold: f64, bin: u16 },
    /// Rows whose category bin is flagged go left.
    Categories { left: Vec<bool> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: usize, rule: SplitRule, missing_left: bool, left: usize, right: usize, gain: f64 },
    Leaf { value: f64 },
}

/// Node arena; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree { nodes: vec![Node::Leaf { value }] }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Routes a row given a lookup from feature index to (bin, missing bin).
    pub(crate) fn value_by(&self, mut bin_of: impl FnMut(usize) -> (u16, u16)) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, rule, missing_left, left, right, .. } => {
                    let (bin, missing) = bin_of(*feature);
                    i = if goes_left(rule, *missing_left, bin, missing) { *left } else { *right };
                }
            }
        }
    }

    /// Sum of split gains per feature.
    pub(crate) fn add_gains(&self, out: &mut [f64]) {
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = n {
                out[*feature] += gain;
            }
        }
    }
}

fn goes_left(rule: &SplitRule, missing_left: bool, bin: u16, missing: u16) -> bool {
    if bin == missing {
        return missing_left;
    }
    match rule {
        SplitRule::Threshold { bin: b, .. } => bin <= *b,
        SplitRule::Categories { left } => left.get(bin as usize).copied().unwrap_or(false),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Stat {
    g: f64,
    h: f64,
    n: u32,
}

impl Add for Stat {
    type Output = Stat;
    fn add(self, o: Stat) -> Stat {
        Stat { g: self.g + o.g, h: self.h + o.h, n: self.n + o.n }
    }
}

impl Sub for Stat {
    type Output = Stat;
    fn sub(self, o: Stat) -> Stat {
        Stat { g: self.g - o.g, h: self.h - o.h, n: self.n - o.n }
    }
}

type Histogram = Vec<Vec<Stat>>;

#[derive(Debug, Clone)]
struct BestSplit {
    gain: f64,
    feature: usize,
    rule: SplitRule,
    missing_left: bool,
}

struct OpenLeaf {
    node: usize,
    rows: Vec<usize>,
    hist: Histogram,
    total: Stat,
    best: Option<BestSplit>,
}

pub(crate) struct Grower<'a> {
    pub bins: &'a [Vec<u16>],
    pub specs: &'a [FeatureBins],
    pub lambda: f64,
    pub min_child_samples: usize,
    pub max_leaves: usize,
    pub learning_rate: f64,
}

/// A grown tree and the training rows that ended in each leaf.
pub(crate) struct Grown {
    pub tree: Tree,
    pub leaf_rows: Vec<(f64, Vec<usize>)>,
}

impl Grower<'_> {
    fn histogram(&self, grad: &[f64], hess: &[f64], rows: &[usize]) -> Histogram {
        let one = |f: usize| {
            let mut h = vec![Stat::default(); self.specs[f].n_bins() + 1];
            let col = &self.bins[f];
            for &r in rows {
                let s = &mut h[col[r] as usize];
                s.g += grad[r];
                s.h += hess[r];
                s.n += 1;
            }
            h
        };
        if rows.len() * self.specs.len() >= PARALLEL_WORK {
            (0..self.specs.len()).into_par_iter().map(one).collect()
        } else {
            (0..self.specs.len()).map(one).collect()
        }
    }

    fn score(&self, s: Stat) -> f64 {
        s.g * s.g / (s.h + self.lambda)
    }

    fn admissible(&self, s: Stat) -> bool {
        s.n as usize >= self.min_child_samples && s.h >= MIN_HESSIAN
    }

    fn best_split(&self, hist: &Histogram, total: Stat) -> Option<BestSplit> {
        let per_feature = |f: usize| self.best_for_feature(f, &hist[f], total);
        let found: Vec<Option<BestSplit>> = if total.n as usize * self.specs.len() >= PARALLEL_WORK {
            (0..self.specs.len()).into_par_iter().map(per_feature).collect()
        } else {
            (0..self.specs.len()).map(per_feature).collect()
        };
        let mut best: Option<BestSplit> = None;
        for s in found.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| s.gain > b.gain) {
                best = Some(s);
            }
        }
        best.filter(|b| b.gain > GAIN_EPS)
    }

    /// Try every prefix of `order` as the left side, with missing rows on either side.
    fn scan(&self, hist: &[Stat], order: &[usize], total: Stat) -> Option<(f64, usize, bool)> {
        let missing = hist[hist.len() - 1];
        let parent = self.score(total);
        let mut best: Option<(f64, usize, bool)> = None;
        let mut acc = Stat::default();
        for (j, &b) in order.iter().enumerate() {
            acc = acc + hist[b];
            if hist[b].n == 0 {
                continue;
            }
            let sides: &[bool] = if missing.n == 0 { &[true] } else { &[true, false] };
            for &missing_left in sides {
                let left = if missing_left { acc + missing } else { acc };
                let right = total - left;
                if !self.admissible(left) || !self.admissible(right) {
                    continue;
                }
                let gain = self.score(left) + self.score(right) - parent;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, j, missing_left));
                }
            }
        }
        best
    }

    fn best_for_feature(&self, f: usize, hist: &[Stat], total: Stat) -> Option<BestSplit> {
        let spec = &self.specs[f];
        let nb = spec.n_bins();
        if spec.is_categorical() {
            let mut order: Vec<usize> = (0..nb).filter(|&b| hist[b].n > 0).collect();
            order.sort_by(|&a, &b| {
                let ka = hist[a].g / (hist[a].h + self.lambda);
                let kb = hist[b].g / (hist[b].h + self.lambda);
                ka.total_cmp(&kb).then(a.cmp(&b))
            });
            let (gain, j, missing_left) = self.scan(hist, &order, total)?;
            let mut left = vec![false; nb];
            for &b in &order[..=j] {
                left[b] = true;
            }
            Some(BestSplit { gain: gain.max(0.0), feature: f, rule: SplitRule::Categories { left }, missing_left })
        } else {
            let order: Vec<usize> = (0..nb).collect();
            let (gain, j, missing_left) = self.scan(hist, &order, total)?;
            let rule = SplitRule::Threshold { threshold: spec.threshold(j), bin: j as u16 };
            Some(BestSplit { gain: gain.max(0.0), feature: f, rule, missing_left })
        }
    }

    fn open(&self, node: usize, rows: Vec<usize>, hist: Histogram) -> OpenLeaf {
        let total = hist.first().map_or_else(Stat::default, |h| h.iter().fold(Stat::default(), |a, &s| a + s));
        let best = self.best_split(&hist, total);
        OpenLeaf { node, rows, hist, total, best }
    }

    /// Leaf-wise growth up to `max_leaves`; `None` when the root cannot be split.
    pub fn grow(&self, grad: &[f64], hess: &[f64], rows: Vec<usize>) -> Option<Grown> {
        let hist = self.histogram(grad, hess, &rows);
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut leaves = vec![self.open(0, rows, hist)];
        while leaves.len() < self.max_leaves {
            let mut pick: Option<usize> = None;
            for (i, l) in leaves.iter().enumerate() {
                if let Some(b) = &l.best {
                    if pick.is_none_or(|p| b.gain > leaves[p].best.as_ref().unwrap().gain) {
                        pick = Some(i);
                    }
                }
            }
            let Some(i) = pick else { break };
            let leaf = leaves.remove(i);
            let split = leaf.best.expect("picked leaves have a split");
            let spec = &self.specs[split.feature];
            let missing = spec.missing_bin();
            let col = &self.bins[split.feature];
            let (lrows, rrows): (Vec<usize>, Vec<usize>) =
                leaf.rows.iter().partition(|&&r| goes_left(&split.rule, split.missing_left, col[r], missing));
            let (small, small_is_left) =
                if lrows.len() <= rrows.len() { (&lrows, true) } else { (&rrows, false) };
            let small_hist = self.histogram(grad, hess, small);
            let large_hist: Histogram = leaf
                .hist
                .iter()
                .zip(&small_hist)
                .map(|(p, s)| p.iter().zip(s).map(|(&a, &b)| a - b).collect())
                .collect();
            let (lhist, rhist) = if small_is_left { (small_hist, large_hist) } else { (large_hist, small_hist) };
            let (li, ri) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[leaf.node] = Node::Split {
                feature: split.feature,
                rule: split.rule,
                missing_left: split.missing_left,
                left: li,
                right: ri,
                gain: split.gain,
            };
            leaves.insert(i, self.open(li, lrows, lhist));
            leaves.push(self.open(ri, rrows, rhist));
        }
        if nodes.len() == 1 {
            return None;
        }
        let mut leaf_rows = Vec::with_capacity(leaves.len());
        for l in leaves {
            let value = -self.learning_rate * l.total.g / (l.total.h + self.lambda);
            nodes[l.node] = Node::Leaf { value };
            leaf_rows.push((value, l.rows));
        }
        Some(Grown { tree: Tree { nodes }, leaf_rows })
    }
}
