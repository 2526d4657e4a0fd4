//! Typed columnar tables, CSV ingestion and deterministic row partitioning.
//!
//! A [`Dataset`] is built once and never mutated. Everything downstream works
//! on row-index lists into it: train/validation splits, cross-validation folds
//! and the equal-size data blocks used by successive halving.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Columns with fewer distinct numeric values than this are ordinal.
pub const ORDINAL_UNIQUE_LIMIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Numerical,
    Categorical,
    /// Discrete numeric column, usable both as a number and as a category.
    Ordinal,
}

impl FeatureKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, FeatureKind::Numerical | FeatureKind::Ordinal)
    }

    pub fn is_categorical(self) -> bool {
        matches!(self, FeatureKind::Categorical | FeatureKind::Ordinal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Numerical => "numerical",
            FeatureKind::Categorical => "categorical",
            FeatureKind::Ordinal => "ordinal",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "numerical" | "numeric" | "num" => Ok(FeatureKind::Numerical),
            "categorical" | "category" | "cat" => Ok(FeatureKind::Categorical),
            "ordinal" | "ord" => Ok(FeatureKind::Ordinal),
            other => Err(Error::config(format!("unknown feature kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    /// Numerical and ordinal payloads. Missing slots hold NaN.
    Numeric(Vec<f64>),
    /// Dense category ids into `dictionary`. Missing slots hold 0.
    Categorical { codes: Vec<u32>, dictionary: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    kind: FeatureKind,
    data: ColumnData,
    missing: Vec<bool>,
}

impl Column {
    /// Numeric column; NaN entries are treated as missing.
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self::numeric_with_kind(name, FeatureKind::Numerical, values)
    }

    pub fn ordinal(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self::numeric_with_kind(name, FeatureKind::Ordinal, values)
    }

    pub(crate) fn numeric_with_kind(name: impl Into<String>, kind: FeatureKind, mut values: Vec<f64>) -> Self {
        debug_assert!(kind.is_numeric());
        let missing: Vec<bool> = values.iter().map(|v| !v.is_finite()).collect();
        for (v, &m) in values.iter_mut().zip(&missing) {
            if m {
                *v = f64::NAN;
            }
        }
        Column { name: name.into(), kind, data: ColumnData::Numeric(values), missing }
    }

    /// Categorical column from optional labels; ids follow first appearance.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, labels: &[Option<S>]) -> Self {
        let mut index: HashMap<&str, u32> = HashMap::new();
        let mut dictionary = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        let mut missing = Vec::with_capacity(labels.len());
        for label in labels {
            match label {
                Some(s) => {
                    let s = s.as_ref();
                    let next = dictionary.len() as u32;
                    let code = *index.entry(s).or_insert_with(|| {
                        dictionary.push(s.to_string());
                        next
                    });
                    codes.push(code);
                    missing.push(false);
                }
                None => {
                    codes.push(0);
                    missing.push(true);
                }
            }
        }
        Column {
            name: name.into(),
            kind: FeatureKind::Categorical,
            data: ColumnData::Categorical { codes, dictionary },
            missing,
        }
    }

    /// Categorical column from raw codes. `None` marks a missing entry.
    pub fn from_codes(name: impl Into<String>, codes: Vec<Option<u32>>, dictionary: Vec<String>) -> Result<Self> {
        let n_cat = dictionary.len() as u32;
        let mut out = Vec::with_capacity(codes.len());
        let mut missing = Vec::with_capacity(codes.len());
        for c in codes {
            match c {
                Some(c) if c < n_cat => {
                    out.push(c);
                    missing.push(false);
                }
                Some(c) => return Err(Error::contract(format!("category id {c} outside dictionary of {n_cat}"))),
                None => {
                    out.push(0);
                    missing.push(true);
                }
            }
        }
        Ok(Column {
            name: name.into(),
            kind: FeatureKind::Categorical,
            data: ColumnData::Categorical { codes: out, dictionary },
            missing,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn missing(&self) -> &[bool] {
        &self.missing
    }

    pub fn is_missing(&self, row: usize) -> bool {
        self.missing[row]
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Numeric value at `row`, `None` when missing or when the column is categorical.
    pub fn value(&self, row: usize) -> Option<f64> {
        match &self.data {
            ColumnData::Numeric(v) if !self.missing[row] => Some(v[row]),
            _ => None,
        }
    }

    pub fn code(&self, row: usize) -> Option<u32> {
        match &self.data {
            ColumnData::Categorical { codes, .. } if !self.missing[row] => Some(codes[row]),
            _ => None,
        }
    }

    pub fn numeric_values(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical { .. } => None,
        }
    }

    pub fn dictionary(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical { dictionary, .. } => Some(dictionary),
            ColumnData::Numeric(_) => None,
        }
    }

    /// Text form of the entry at `row` as it would be written to CSV.
    pub fn display_value(&self, row: usize) -> String {
        if self.missing[row] {
            return String::new();
        }
        match &self.data {
            ColumnData::Numeric(v) => format_number(v[row]),
            ColumnData::Categorical { codes, dictionary } => dictionary[codes[row] as usize].clone(),
        }
    }

    /// Copy of the column restricted to `rows`, in that order.
    pub fn gather(&self, rows: &[usize]) -> Column {
        let missing = rows.iter().map(|&r| self.missing[r]).collect();
        let data = match &self.data {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical { codes, dictionary } => ColumnData::Categorical {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                dictionary: dictionary.clone(),
            },
        };
        Column { name: self.name.clone(), kind: self.kind, data, missing }
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Regression,
    Binary,
    Multiclass,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "regression" | "reg" => Ok(Task::Regression),
            "binary" => Ok(Task::Binary),
            "multiclass" | "multi" => Ok(Task::Multiclass),
            other => Err(Error::config(format!("unknown task '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<Column>,
    target: Option<Column>,
    task: Task,
    n_classes: usize,
    n_rows: usize,
}

impl Dataset {
    /// Labelled dataset. Classification targets must be categorical with
    /// class ids in `[0, n_classes)`; regression targets must be numeric.
    pub fn new(columns: Vec<Column>, target: Column, task: Task) -> Result<Self> {
        let n_rows = target.len();
        if target.missing().iter().any(|&m| m) {
            return Err(Error::contract(format!("target '{}' has missing values", target.name())));
        }
        let n_classes = match (task, target.data()) {
            (Task::Regression, ColumnData::Numeric(_)) => 1,
            (Task::Binary, ColumnData::Categorical { dictionary, .. }) => {
                if dictionary.len() != 2 {
                    return Err(Error::config(format!(
                        "binary target '{}' has {} classes",
                        target.name(),
                        dictionary.len()
                    )));
                }
                2
            }
            (Task::Multiclass, ColumnData::Categorical { dictionary, .. }) => {
                if dictionary.len() < 2 {
                    return Err(Error::config(format!("multiclass target '{}' has fewer than 2 classes", target.name())));
                }
                dictionary.len()
            }
            _ => return Err(Error::contract(format!("target '{}' payload does not match {task:?}", target.name()))),
        };
        let ds = Dataset { columns, target: Some(target), task, n_classes, n_rows };
        ds.check_columns()?;
        Ok(ds)
    }

    /// Feature-only table, e.g. rows a fitted transform is applied to.
    pub fn unlabeled(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        let ds = Dataset { columns, target: None, task: Task::Regression, n_classes: 1, n_rows };
        ds.check_columns()?;
        Ok(ds)
    }

    fn check_columns(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if c.len() != self.n_rows {
                return Err(Error::contract(format!(
                    "column '{}' has {} rows, expected {}",
                    c.name(),
                    c.len(),
                    self.n_rows
                )));
            }
            if !seen.insert(c.name()) {
                return Err(Error::config(format!("duplicate column name '{}'", c.name())));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn target(&self) -> Option<&Column> {
        self.target.as_ref()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Target as floats: the raw value for regression, the class id otherwise.
    pub fn target_values(&self) -> Result<Vec<f64>> {
        let t = self.target.as_ref().ok_or_else(|| Error::contract("dataset has no target"))?;
        Ok(match t.data() {
            ColumnData::Numeric(v) => v.clone(),
            ColumnData::Categorical { codes, .. } => codes.iter().map(|&c| c as f64).collect(),
        })
    }

    /// Class id per row for classification, `None` for regression.
    pub fn class_labels(&self) -> Option<Vec<u32>> {
        match self.target.as_ref()?.data() {
            ColumnData::Categorical { codes, .. } => Some(codes.clone()),
            ColumnData::Numeric(_) => None,
        }
    }

    /// New dataset with `extra` columns appended; originals are untouched.
    pub fn with_columns(&self, extra: Vec<Column>) -> Result<Self> {
        let mut columns = self.columns.clone();
        columns.extend(extra);
        let ds = Dataset { columns, target: self.target.clone(), task: self.task, n_classes: self.n_classes, n_rows: self.n_rows };
        ds.check_columns()?;
        Ok(ds)
    }

    /// Same features with a replacement target.
    pub fn with_target(&self, target: Column) -> Result<Self> {
        Dataset::new(self.columns.clone(), target, self.task)
    }

    /// Content hash over every column and the target (hex SHA-256).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut feed = |c: &Column| {
            h.update(c.name().as_bytes());
            h.update([0u8, c.kind() as u8]);
            for &m in c.missing() {
                h.update([m as u8]);
            }
            match c.data() {
                ColumnData::Numeric(v) => {
                    for (x, &m) in v.iter().zip(c.missing()) {
                        h.update(if m { 0u64 } else { x.to_bits() }.to_le_bytes());
                    }
                }
                ColumnData::Categorical { codes, dictionary } => {
                    for (&x, &m) in codes.iter().zip(c.missing()) {
                        let label = if m { "" } else { dictionary[x as usize].as_str() };
                        h.update(label.as_bytes());
                        h.update([0u8]);
                    }
                }
            }
        };
        for c in &self.columns {
            feed(c);
        }
        if let Some(t) = &self.target {
            feed(t);
        }
        hex::encode(h.finalize())
    }
}

/// Write feature columns followed by the target (if any) as CSV.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let cols: Vec<&Column> = dataset.columns().iter().chain(dataset.target()).collect();
    w.write_record(cols.iter().map(|c| c.name()))?;
    for r in 0..dataset.n_rows() {
        w.write_record(cols.iter().map(|c| c.display_value(r)))?;
    }
    w.flush()?;
    Ok(())
}

/// Result of kind inference for one raw text column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KindInference {
    pub kind: FeatureKind,
    pub warning: Option<String>,
}

pub fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na")
}

fn parse_finite(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Classify a raw text column: strings are categorical, numbers with fewer
/// than [`ORDINAL_UNIQUE_LIMIT`] distinct values are ordinal, the rest numerical.
pub fn infer_kind<S: AsRef<str>>(raw: &[S]) -> KindInference {
    let mut distinct: HashSet<u64> = HashSet::new();
    let mut any = false;
    for s in raw {
        let s = s.as_ref();
        if is_missing_token(s) {
            continue;
        }
        any = true;
        match parse_finite(s) {
            Some(v) => {
                // +0.0 and -0.0 are the same value
                distinct.insert((v + 0.0).to_bits());
            }
            None => return KindInference { kind: FeatureKind::Categorical, warning: None },
        }
    }
    if !any {
        return KindInference {
            kind: FeatureKind::Categorical,
            warning: Some("column is entirely missing; treated as categorical with no categories".into()),
        };
    }
    let kind = if distinct.len() < ORDINAL_UNIQUE_LIMIT { FeatureKind::Ordinal } else { FeatureKind::Numerical };
    KindInference { kind, warning: None }
}

/// Header plus raw text records of a CSV file.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl RawTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut records = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(i + 2, |p| p.line() as usize);
            if rec.len() != headers.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", headers.len(), rec.len()),
                });
            }
            records.push(rec.iter().map(str::to_string).collect());
        }
        Ok(RawTable { headers, records })
    }

    fn column_text(&self, idx: usize) -> Vec<&str> {
        self.records.iter().map(|r| r[idx].as_str()).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub schema_hints: HashMap<String, FeatureKind>,
    /// Forced task; inferred from the target column when absent.
    pub task: Option<Task>,
}

/// Loaded dataset plus non-fatal inference warnings.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

pub fn load_csv(path: &Path, target: &str, options: &LoadOptions) -> Result<Loaded> {
    let raw = RawTable::read(path)?;
    dataset_from_raw(&raw, Some(target), options)
}

/// Load every column of a CSV as a feature (no target).
pub fn load_features_csv(path: &Path, options: &LoadOptions) -> Result<Loaded> {
    let raw = RawTable::read(path)?;
    dataset_from_raw(&raw, None, options)
}

pub fn dataset_from_raw(raw: &RawTable, target: Option<&str>, options: &LoadOptions) -> Result<Loaded> {
    let target_idx = match target {
        Some(t) => Some(
            raw.headers
                .iter()
                .position(|h| h == t)
                .ok_or_else(|| Error::config(format!("target column '{t}' not found in header")))?,
        ),
        None => None,
    };
    let mut warnings = Vec::new();
    let mut columns = Vec::new();
    for (idx, name) in raw.headers.iter().enumerate() {
        if Some(idx) == target_idx {
            continue;
        }
        let text = raw.column_text(idx);
        let kind = match options.schema_hints.get(name) {
            Some(&k) => k,
            None => {
                let inf = infer_kind(&text);
                if let Some(w) = inf.warning {
                    warnings.push(format!("column '{name}': {w}"));
                }
                inf.kind
            }
        };
        columns.push(build_column(name, kind, &text)?);
    }
    let dataset = match target_idx {
        Some(ti) => {
            let text = raw.column_text(ti);
            let name = &raw.headers[ti];
            let (column, task) = build_target(name, &text, options.task)?;
            Dataset::new(columns, column, task)?
        }
        None => Dataset::unlabeled(columns)?,
    };
    Ok(Loaded { dataset, warnings })
}

fn build_column(name: &str, kind: FeatureKind, text: &[&str]) -> Result<Column> {
    match kind {
        FeatureKind::Categorical => {
            let labels: Vec<Option<&str>> = text.iter().map(|s| (!is_missing_token(s)).then_some(*s)).collect();
            Ok(Column::categorical(name, &labels))
        }
        FeatureKind::Numerical | FeatureKind::Ordinal => {
            let mut values = Vec::with_capacity(text.len());
            for (i, s) in text.iter().enumerate() {
                if is_missing_token(s) {
                    values.push(f64::NAN);
                } else {
                    let v = parse_finite(s).ok_or_else(|| Error::Parse {
                        line: i + 2,
                        message: format!("column '{name}': cannot parse '{s}' as a number"),
                    })?;
                    values.push(v);
                }
            }
            Ok(Column::numeric_with_kind(name, kind, values))
        }
    }
}

fn build_target(name: &str, text: &[&str], task: Option<Task>) -> Result<(Column, Task)> {
    if let Some(i) = text.iter().position(|s| is_missing_token(s)) {
        return Err(Error::Parse { line: i + 2, message: format!("target '{name}' is missing") });
    }
    let numeric: Option<Vec<f64>> = text.iter().map(|s| parse_finite(s)).collect();
    let mut distinct: Vec<&str> = text.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let task = match task {
        Some(t) => t,
        None if distinct.len() == 2 => Task::Binary,
        None if numeric.is_none() => Task::Multiclass,
        None => Task::Regression,
    };
    if task == Task::Regression {
        let values = numeric.ok_or_else(|| Error::config(format!("regression target '{name}' is not numeric")))?;
        return Ok((Column::numeric(name, values), task));
    }
    // Class ids follow sorted label order (numeric order when every label is a number).
    let mut classes: Vec<(Option<f64>, String)> = Vec::new();
    let mut seen = HashSet::new();
    for s in text {
        if seen.insert(*s) {
            classes.push((parse_finite(s), s.to_string()));
        }
    }
    if classes.iter().all(|(v, _)| v.is_some()) {
        classes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    } else {
        classes.sort_by(|a, b| a.1.cmp(&b.1));
    }
    let index: HashMap<&str, u32> = classes.iter().enumerate().map(|(i, (_, s))| (s.as_str(), i as u32)).collect();
    let codes = text.iter().map(|s| Some(index[s])).collect();
    let dictionary = classes.into_iter().map(|(_, s)| s).collect();
    Ok((Column::from_codes(name, codes, dictionary)?, task))
}

/// Deterministic partition of a dataset's rows.
///
/// All partitions come from one seeded shuffle: rows are grouped by class
/// (classification only), shuffled within each class, the first
/// `valid_fraction` of every class goes to validation, and the resulting
/// order (train rows first, then validation rows) is dealt round-robin into
/// folds and blocks. Every fold and block therefore has near-identical class
/// balance, and intersecting any of them with the training rows stays
/// balanced too.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train_rows: Vec<usize>,
    pub valid_rows: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
    pub blocks: Vec<Vec<usize>>,
    pub seed: u64,
}

pub const MAX_BLOCK_EXPONENT: u32 = 20;

pub fn make_split_plan(dataset: &Dataset, q: u32, k: usize, valid_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if q > MAX_BLOCK_EXPONENT {
        return Err(Error::config(format!("block exponent q={q} exceeds {MAX_BLOCK_EXPONENT}")));
    }
    if !(2..=20).contains(&k) {
        return Err(Error::config(format!("fold count k={k} outside [2, 20]")));
    }
    if !(valid_fraction > 0.0 && valid_fraction < 0.5) {
        return Err(Error::config(format!("valid_fraction={valid_fraction} outside (0, 0.5)")));
    }
    let n = dataset.n_rows();
    let n_blocks = 1usize << q;
    if n_blocks > n {
        return Err(Error::config(format!("2^q = {n_blocks} blocks exceed {n} rows")));
    }

    let mut strata: Vec<Vec<usize>> = match dataset.class_labels() {
        Some(labels) => {
            let mut s = vec![Vec::new(); dataset.n_classes()];
            for (row, &c) in labels.iter().enumerate() {
                s[c as usize].push(row);
            }
            s
        }
        None => vec![(0..n).collect()],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_order = Vec::with_capacity(n);
    let mut valid_order = Vec::new();
    for stratum in &mut strata {
        stratum.shuffle(&mut rng);
        let n_valid = (valid_fraction * stratum.len() as f64).round() as usize;
        valid_order.extend_from_slice(&stratum[..n_valid]);
        train_order.extend_from_slice(&stratum[n_valid..]);
    }
    let order: Vec<usize> = train_order.iter().chain(&valid_order).copied().collect();

    let deal = |parts: usize| {
        let mut out = vec![Vec::with_capacity(n / parts + 1); parts];
        for (pos, &row) in order.iter().enumerate() {
            out[pos % parts].push(row);
        }
        for p in &mut out {
            p.sort_unstable();
        }
        out
    };
    let folds = deal(k);
    let blocks = deal(n_blocks);
    train_order.sort_unstable();
    valid_order.sort_unstable();
    Ok(SplitPlan { train_rows: train_order, valid_rows: valid_order, folds, blocks, seed })
}

impl SplitPlan {
    fn restrict(parts: &[Vec<usize>], keep: &[usize]) -> Vec<Vec<usize>> {
        let keep: HashSet<usize> = keep.iter().copied().collect();
        parts.iter().map(|p| p.iter().copied().filter(|r| keep.contains(r)).collect()).collect()
    }

    /// Folds intersected with the training rows.
    pub fn train_folds(&self) -> Vec<Vec<usize>> {
        Self::restrict(&self.folds, &self.train_rows)
    }

    /// Blocks intersected with the training rows.
    pub fn train_blocks(&self) -> Vec<Vec<usize>> {
        Self::restrict(&self.blocks, &self.train_rows)
    }

    pub fn n_rows(&self) -> usize {
        self.train_rows.len() + self.valid_rows.len()
    }
}
