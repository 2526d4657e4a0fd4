//! Expression evaluation with fitted statistics.
//!
//! Elementwise operators are pure functions of a row. Everything else
//! (frequencies, group statistics, category combinations) is computed from a
//! fit row set and stored in [`FittedStats`] keyed by the canonical string of
//! the sub-expression, so the same numbers can be re-applied to unseen rows.
//! Statistics are keyed by category *labels*, never by ids, which keeps them
//! valid across separately loaded files.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{canonical_string, parse_expr, FeatureExpr, Operator};
use crate::dataframe::{format_number, Column, ColumnData, Dataset, FeatureKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FitMode {
    /// Statistics from the fit rows only.
    #[default]
    TrainFit,
    /// Statistics from fit rows and apply rows together.
    Transductive,
}

impl FitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMode::TrainFit => "TrainFit",
            FitMode::Transductive => "Transductive",
        }
    }
}

impl std::str::FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trainfit" | "train-fit" | "train" => Ok(FitMode::TrainFit),
            "transductive" => Ok(FitMode::Transductive),
            other => Err(Error::config(format!("unknown fit mode '{other}'"))),
        }
    }
}

/// Category key in a frequency table; missing is its own category.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CatKey {
    Missing,
    Label(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeStats {
    /// Share of fit rows per value.
    Frequency(BTreeMap<CatKey, f64>),
    /// One statistic per category plus the fallback for unseen categories.
    Group { table: BTreeMap<String, f64>, global: f64 },
    /// Sorted values per category, used to place a value within its group.
    Ranks { table: BTreeMap<String, Vec<f64>>, global: Vec<f64> },
    /// Combined labels; a label's id is its position.
    Combine { dictionary: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FittedStats {
    pub mode: FitMode,
    /// Number of rows the statistics were computed from.
    pub fit_rows: usize,
    nodes: BTreeMap<String, NodeStats>,
}

impl FittedStats {
    pub fn new(mode: FitMode, fit_rows: usize) -> Self {
        FittedStats { mode, fit_rows, nodes: BTreeMap::new() }
    }

    pub fn node(&self, key: &str) -> Option<&NodeStats> {
        self.nodes.get(key)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn merge(&mut self, other: FittedStats) {
        for (k, v) in other.nodes {
            self.nodes.entry(k).or_insert(v);
        }
    }

    /// `expr<TAB>key<TAB>value` lines in a fixed order.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (expr, stats) in &self.nodes {
            let e = escape(expr);
            match stats {
                NodeStats::Frequency(t) => {
                    for (k, v) in t {
                        let key = match k {
                            CatKey::Missing => MISSING_KEY.to_string(),
                            CatKey::Label(s) => escape(s),
                        };
                        out.push(format!("{e}\t{key}\t{}", format_number(*v)));
                    }
                }
                NodeStats::Group { table, global } => {
                    out.push(format!("{e}\t{GLOBAL_KEY}\t{}", format_number(*global)));
                    for (k, v) in table {
                        out.push(format!("{e}\t{}\t{}", escape(k), format_number(*v)));
                    }
                }
                NodeStats::Ranks { table, global } => {
                    out.push(format!("{e}\t{GLOBAL_KEY}\t{}", join_numbers(global)));
                    for (k, v) in table {
                        out.push(format!("{e}\t{}\t{}", escape(k), join_numbers(v)));
                    }
                }
                NodeStats::Combine { dictionary } => {
                    for (id, label) in dictionary.iter().enumerate() {
                        out.push(format!("{e}\t{}\t{id}", escape(label)));
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`FittedStats::to_lines`]; `first_line` is used for error positions.
    pub fn from_lines<'a>(
        mode: FitMode,
        fit_rows: usize,
        lines: impl IntoIterator<Item = &'a str>,
        first_line: usize,
    ) -> Result<Self> {
        let mut stats = FittedStats::new(mode, fit_rows);
        let mut combine_ids: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        for (i, line) in lines.into_iter().enumerate() {
            let line_no = first_line + i;
            let bad = |m: &str| Error::SpecFormat { line: line_no, message: m.to_string() };
            let mut parts = line.split('\t');
            let (Some(e), Some(k), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected three tab-separated fields"));
            };
            let expr_key = unescape(e).map_err(|m| bad(&m))?;
            let op = match parse_expr(&expr_key).map_err(|err| bad(&err.to_string()))? {
                FeatureExpr::Apply(op, _) if op.needs_stats() => op,
                _ => return Err(bad("statistics attached to an expression that takes none")),
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number '{s}'")));
            match op {
                Operator::Freq | Operator::CombineThenFreq => {
                    let key = if k == MISSING_KEY { CatKey::Missing } else { CatKey::Label(unescape(k).map_err(|m| bad(&m))?) };
                    let entry = stats.nodes.entry(expr_key).or_insert_with(|| NodeStats::Frequency(BTreeMap::new()));
                    let NodeStats::Frequency(t) = entry else { unreachable!() };
                    t.insert(key, num(v)?);
                }
                Operator::GroupByThenRank => {
                    let values = if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split(',').map(num).collect::<Result<Vec<_>>>()?
                    };
                    let entry = stats
                        .nodes
                        .entry(expr_key)
                        .or_insert_with(|| NodeStats::Ranks { table: BTreeMap::new(), global: Vec::new() });
                    let NodeStats::Ranks { table, global } = entry else { unreachable!() };
                    if k == GLOBAL_KEY {
                        *global = values;
                    } else {
                        table.insert(unescape(k).map_err(|m| bad(&m))?, values);
                    }
                }
                Operator::Combine => {
                    let id: usize = v.parse().map_err(|_| bad(&format!("bad id '{v}'")))?;
                    combine_ids.entry(expr_key).or_default().push((id, unescape(k).map_err(|m| bad(&m))?));
                }
                _ => {
                    let entry = stats
                        .nodes
                        .entry(expr_key)
                        .or_insert_with(|| NodeStats::Group { table: BTreeMap::new(), global: f64::NAN });
                    let NodeStats::Group { table, global } = entry else { unreachable!() };
                    if k == GLOBAL_KEY {
                        *global = num(v)?;
                    } else {
                        table.insert(unescape(k).map_err(|m| bad(&m))?, num(v)?);
                    }
                }
            }
        }
        for (expr_key, mut ids) in combine_ids {
            ids.sort();
            if ids.iter().enumerate().any(|(i, (id, _))| *id != i) {
                return Err(Error::SpecFormat { line: first_line, message: format!("non-dense ids for {expr_key}") });
            }
            stats.nodes.insert(expr_key, NodeStats::Combine { dictionary: ids.into_iter().map(|(_, l)| l).collect() });
        }
        Ok(stats)
    }
}

const MISSING_KEY: &str = "\\N";
const GLOBAL_KEY: &str = "\\G";

fn join_numbers(v: &[f64]) -> String {
    v.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(",")
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape sequence '\\{}'", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

/// Label of a (left, right) category pair; `|` and `\` inside parts are escaped.
pub fn combine_label(a: &str, b: &str) -> String {
    let esc = |s: &str| s.replace('\\', "\\\\").replace('|', "\\|");
    format!("{}|{}", esc(a), esc(b))
}

/// Category view of any column: dense ids plus their labels.
struct Keys {
    codes: Vec<Option<u32>>,
    labels: Vec<String>,
}

fn keys_of(col: &Column) -> Keys {
    match col.data() {
        ColumnData::Categorical { codes, dictionary } => Keys {
            codes: codes.iter().zip(col.missing()).map(|(&c, &m)| (!m).then_some(c)).collect(),
            labels: dictionary.clone(),
        },
        ColumnData::Numeric(values) => {
            let mut index: HashMap<u64, u32> = HashMap::new();
            let mut labels = Vec::new();
            let codes = values
                .iter()
                .zip(col.missing())
                .map(|(&v, &m)| {
                    if m {
                        return None;
                    }
                    let v = v + 0.0;
                    Some(*index.entry(v.to_bits()).or_insert_with(|| {
                        labels.push(format_number(v));
                        (labels.len() - 1) as u32
                    }))
                })
                .collect();
            Keys { codes, labels }
        }
    }
}

fn numbers(col: &Column) -> Result<Vec<Option<f64>>> {
    match col.data() {
        ColumnData::Numeric(v) => Ok(v.iter().zip(col.missing()).map(|(&x, &m)| (!m).then_some(x)).collect()),
        ColumnData::Categorical { .. } => Err(Error::contract(format!("'{}' is not numeric", col.name()))),
    }
}

fn compute_stats(op: Operator, cols: &[Column], positions: &[usize]) -> Result<NodeStats> {
    let n = positions.len() as f64;
    Ok(match op {
        Operator::Freq => {
            let keys = keys_of(&cols[0]);
            let mut counts = vec![0usize; keys.labels.len()];
            let mut missing = 0usize;
            for &p in positions {
                match keys.codes[p] {
                    Some(c) => counts[c as usize] += 1,
                    None => missing += 1,
                }
            }
            let mut t: BTreeMap<CatKey, f64> = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (CatKey::Label(keys.labels[i].clone()), c as f64 / n))
                .collect();
            if missing > 0 {
                t.insert(CatKey::Missing, missing as f64 / n);
            }
            NodeStats::Frequency(t)
        }
        Operator::CombineThenFreq => {
            let labels = combined_labels(&cols[0], &cols[1]);
            let mut counts: HashMap<CatKey, usize> = HashMap::new();
            for &p in positions {
                let k = labels[p].clone().map_or(CatKey::Missing, CatKey::Label);
                *counts.entry(k).or_default() += 1;
            }
            NodeStats::Frequency(counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
        }
        Operator::Combine => {
            let labels = combined_labels(&cols[0], &cols[1]);
            let mut seen = HashSet::new();
            let mut dictionary = Vec::new();
            for &p in positions {
                if let Some(l) = &labels[p] {
                    if seen.insert(l.as_str()) {
                        dictionary.push(l.clone());
                    }
                }
            }
            NodeStats::Combine { dictionary }
        }
        Operator::GroupByThenNUnique => {
            let inner = keys_of(&cols[0]);
            let outer = keys_of(&cols[1]);
            let mut per: Vec<HashSet<u32>> = vec![HashSet::new(); outer.labels.len()];
            let mut all = HashSet::new();
            for &p in positions {
                if let (Some(a), Some(g)) = (inner.codes[p], outer.codes[p]) {
                    per[g as usize].insert(a);
                    all.insert(a);
                }
            }
            let table = per
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.is_empty())
                .map(|(g, s)| (outer.labels[g].clone(), s.len() as f64))
                .collect();
            NodeStats::Group { table, global: all.len() as f64 }
        }
        _ => {
            let values = numbers(&cols[0])?;
            let keys = keys_of(&cols[1]);
            let mut groups: Vec<Vec<f64>> = vec![Vec::new(); keys.labels.len()];
            let mut all = Vec::new();
            for &p in positions {
                if let (Some(v), Some(g)) = (values[p], keys.codes[p]) {
                    groups[g as usize].push(v);
                    all.push(v);
                }
            }
            if op == Operator::GroupByThenRank {
                let sort = |mut v: Vec<f64>| {
                    v.sort_by(f64::total_cmp);
                    v
                };
                let table = groups
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_empty())
                    .map(|(g, v)| (keys.labels[g].clone(), sort(v)))
                    .collect();
                NodeStats::Ranks { table, global: sort(all) }
            } else {
                let table = groups
                    .iter_mut()
                    .enumerate()
                    .filter(|(_, v)| !v.is_empty())
                    .map(|(g, v)| (keys.labels[g].clone(), group_stat(op, v)))
                    .collect();
                let global = if all.is_empty() { f64::NAN } else { group_stat(op, &mut all) };
                NodeStats::Group { table, global }
            }
        }
    })
}

/// Statistic of a non-empty group. Std is the sample deviation, 0 for a singleton.
fn group_stat(op: Operator, v: &mut [f64]) -> f64 {
    match op {
        Operator::GroupByThenMin => v.iter().copied().fold(f64::INFINITY, f64::min),
        Operator::GroupByThenMax => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Operator::GroupByThenMean => v.iter().sum::<f64>() / v.len() as f64,
        Operator::GroupByThenMedian => {
            v.sort_by(f64::total_cmp);
            let m = v.len();
            if m % 2 == 1 {
                v[m / 2]
            } else {
                (v[m / 2 - 1] + v[m / 2]) / 2.0
            }
        }
        Operator::GroupByThenStd => {
            if v.len() < 2 {
                return 0.0;
            }
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (v.len() - 1) as f64).sqrt()
        }
        _ => unreachable!("{op} is not a group statistic"),
    }
}

/// Position of `v` among the sorted group values, scaled to [0, 1].
/// Ties take their average rank; a singleton group yields 0.5.
pub(crate) fn normalized_rank(sorted: &[f64], v: f64) -> f64 {
    let m = sorted.len();
    if m == 0 {
        return f64::NAN;
    }
    if m == 1 {
        return 0.5;
    }
    let less = sorted.partition_point(|&s| s < v);
    let le = sorted.partition_point(|&s| s <= v);
    let eq = le - less;
    let r = if eq > 0 { less as f64 + (eq - 1) as f64 / 2.0 } else { less as f64 - 0.5 };
    (r / (m - 1) as f64).clamp(0.0, 1.0)
}

fn combined_labels(a: &Column, b: &Column) -> Vec<Option<String>> {
    let ka = keys_of(a);
    let kb = keys_of(b);
    ka.codes
        .iter()
        .zip(&kb.codes)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some(combine_label(&ka.labels[*x as usize], &kb.labels[*y as usize])),
            _ => None,
        })
        .collect()
}

fn apply_stats(op: Operator, cols: &[Column], stats: &NodeStats, name: &str) -> Result<Column> {
    let mismatch = || Error::Evaluation(format!("statistics for '{name}' do not match its operator"));
    match (op, stats) {
        (Operator::Freq, NodeStats::Frequency(t)) => {
            let keys = keys_of(&cols[0]);
            let per_code: Vec<f64> =
                keys.labels.iter().map(|l| t.get(&CatKey::Label(l.clone())).copied().unwrap_or(0.0)).collect();
            let miss = t.get(&CatKey::Missing).copied().unwrap_or(0.0);
            let out = keys.codes.iter().map(|c| c.map_or(miss, |c| per_code[c as usize])).collect();
            Ok(Column::numeric(name, out))
        }
        (Operator::CombineThenFreq, NodeStats::Frequency(t)) => {
            let miss = t.get(&CatKey::Missing).copied().unwrap_or(0.0);
            let mut cache: HashMap<String, f64> = HashMap::new();
            let out = combined_labels(&cols[0], &cols[1])
                .into_iter()
                .map(|l| match l {
                    None => miss,
                    Some(l) => *cache.entry(l).or_insert_with_key(|l| {
                        t.get(&CatKey::Label(l.clone())).copied().unwrap_or(0.0)
                    }),
                })
                .collect();
            Ok(Column::numeric(name, out))
        }
        (Operator::Combine, NodeStats::Combine { dictionary }) => {
            let mut dictionary = dictionary.clone();
            let mut index: HashMap<String, u32> =
                dictionary.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
            let codes = combined_labels(&cols[0], &cols[1])
                .into_iter()
                .map(|l| {
                    l.map(|l| {
                        *index.entry(l).or_insert_with_key(|l| {
                            dictionary.push(l.clone());
                            (dictionary.len() - 1) as u32
                        })
                    })
                })
                .collect();
            Column::from_codes(name, codes, dictionary)
        }
        (Operator::GroupByThenNUnique, NodeStats::Group { table, global }) => {
            let inner = keys_of(&cols[0]);
            let outer = keys_of(&cols[1]);
            let per_code: Vec<f64> = outer.labels.iter().map(|l| table.get(l).copied().unwrap_or(*global)).collect();
            let out = inner
                .codes
                .iter()
                .zip(&outer.codes)
                .map(|(a, g)| match (a, g) {
                    (Some(_), Some(g)) => per_code[*g as usize],
                    _ => f64::NAN,
                })
                .collect();
            Ok(Column::numeric(name, out))
        }
        (Operator::GroupByThenRank, NodeStats::Ranks { table, global }) => {
            let values = numbers(&cols[0])?;
            let keys = keys_of(&cols[1]);
            let per_code: Vec<&[f64]> =
                keys.labels.iter().map(|l| table.get(l).map_or(global.as_slice(), Vec::as_slice)).collect();
            let out = values
                .iter()
                .zip(&keys.codes)
                .map(|(v, g)| match (v, g) {
                    (Some(v), Some(g)) => normalized_rank(per_code[*g as usize], *v),
                    _ => f64::NAN,
                })
                .collect();
            Ok(Column::numeric(name, out))
        }
        (
            Operator::GroupByThenMin
            | Operator::GroupByThenMax
            | Operator::GroupByThenMean
            | Operator::GroupByThenMedian
            | Operator::GroupByThenStd,
            NodeStats::Group { table, global },
        ) => {
            let values = numbers(&cols[0])?;
            let keys = keys_of(&cols[1]);
            let per_code: Vec<f64> = keys.labels.iter().map(|l| table.get(l).copied().unwrap_or(*global)).collect();
            let out = values
                .iter()
                .zip(&keys.codes)
                .map(|(v, g)| match (v, g) {
                    (Some(_), Some(g)) => per_code[*g as usize],
                    _ => f64::NAN,
                })
                .collect();
            Ok(Column::numeric(name, out))
        }
        _ => Err(mismatch()),
    }
}

fn elementwise(op: Operator, cols: &[Column], name: &str) -> Result<Column> {
    let a = numbers(&cols[0])?;
    let out: Vec<f64> = if op.arity() == 1 {
        a.iter()
            .map(|x| match *x {
                None => f64::NAN,
                Some(x) => match op {
                    Operator::Abs => x.abs(),
                    Operator::Log if x > 0.0 => x.ln(),
                    Operator::Sqrt if x >= 0.0 => x.sqrt(),
                    Operator::Sigmoid => 1.0 / (1.0 + (-x).exp()),
                    Operator::Round => x.round(),
                    Operator::Residual => x - x.trunc(),
                    _ => f64::NAN,
                },
            })
            .collect()
    } else {
        let b = numbers(&cols[1])?;
        a.iter()
            .zip(&b)
            .map(|(x, y)| match (*x, *y) {
                (Some(x), Some(y)) => match op {
                    Operator::Min => x.min(y),
                    Operator::Max => x.max(y),
                    Operator::Add => x + y,
                    Operator::Sub => x - y,
                    Operator::Mul => x * y,
                    Operator::Div if y != 0.0 => x / y,
                    _ => f64::NAN,
                },
                _ => f64::NAN,
            })
            .collect()
    };
    Ok(Column::numeric(name, out))
}

enum Stats<'a> {
    Fit { positions: &'a [usize], out: &'a mut FittedStats },
    Apply(&'a FittedStats),
}

fn eval_node(expr: &FeatureExpr, ds: &Dataset, rows: &[usize], stats: &mut Stats<'_>) -> Result<Column> {
    match expr {
        FeatureExpr::Base(name) => {
            let col = ds.column(name).ok_or_else(|| Error::Schema(vec![name.clone()]))?;
            Ok(col.gather(rows))
        }
        FeatureExpr::Apply(op, children) => {
            let cols = children.iter().map(|c| eval_node(c, ds, rows, stats)).collect::<Result<Vec<_>>>()?;
            let name = canonical_string(expr);
            if !op.needs_stats() {
                return elementwise(*op, &cols, &name);
            }
            let node = match stats {
                Stats::Fit { positions, out } => {
                    if !out.nodes.contains_key(&name) {
                        let s = compute_stats(*op, &cols, positions)?;
                        out.nodes.insert(name.clone(), s);
                    }
                    &out.nodes[&name]
                }
                Stats::Apply(fitted) => fitted
                    .nodes
                    .get(&name)
                    .ok_or_else(|| Error::Evaluation(format!("no fitted statistics for '{name}'")))?,
            };
            apply_stats(*op, &cols, node, &name)
        }
    }
}

fn check_types(expr: &FeatureExpr, ds: &Dataset) -> Result<FeatureKind> {
    let missing: Vec<String> =
        expr.base_columns().into_iter().filter(|n| ds.column(n).is_none()).map(str::to_string).collect();
    if !missing.is_empty() {
        return Err(Error::Schema(missing));
    }
    expr.kind_with(&|n| ds.column(n).map(Column::kind))
}

/// Fit the statistics `expr` needs and materialize it on `apply_rows`.
///
/// In `TrainFit` mode statistics come from `fit_rows` only; in
/// `Transductive` mode from `fit_rows ∪ apply_rows`. The returned column has
/// one entry per element of `apply_rows`, in order.
pub fn fit_transform(
    expr: &FeatureExpr,
    ds: &Dataset,
    fit_rows: &[usize],
    apply_rows: &[usize],
    mode: FitMode,
) -> Result<(Column, FittedStats)> {
    check_types(expr, ds)?;
    if fit_rows.is_empty() {
        return Err(Error::contract("fit_rows is empty"));
    }
    let mut union: Vec<usize> = fit_rows.iter().chain(apply_rows).copied().collect();
    union.sort_unstable();
    union.dedup();
    let locate = |r: &usize| union.binary_search(r).expect("row is in the union");
    let positions: Vec<usize> = match mode {
        FitMode::TrainFit => {
            let mut p: Vec<usize> = fit_rows.iter().map(locate).collect();
            p.sort_unstable();
            p.dedup();
            p
        }
        FitMode::Transductive => (0..union.len()).collect(),
    };
    let mut fitted = FittedStats::new(mode, positions.len());
    let col = eval_node(expr, ds, &union, &mut Stats::Fit { positions: &positions, out: &mut fitted })?;
    let out_positions: Vec<usize> = apply_rows.iter().map(locate).collect();
    Ok((col.gather(&out_positions), fitted))
}

/// Materialize `expr` on `rows` using previously fitted statistics.
pub fn transform(expr: &FeatureExpr, stats: &FittedStats, ds: &Dataset, rows: &[usize]) -> Result<Column> {
    check_types(expr, ds)?;
    eval_node(expr, ds, rows, &mut Stats::Apply(stats))
}
