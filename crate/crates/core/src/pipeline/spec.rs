use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::dataframe::{format_number, Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::ops::{canonical_string, escape, parse_expr, transform, unescape, FeatureExpr, FitMode, FittedStats};

/// One accepted expression with its selection scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecEntry {
    pub expr: FeatureExpr,
    pub importance: f64,
    pub delta: f64,
}

/// Accepted expressions plus everything needed to recompute them.
///
/// Text form: `#key=value` header lines, one `rank<TAB>importance<TAB>delta<TAB>expr`
/// record per expression, then a `#stats` line followed by
/// `expr<TAB>key<TAB>value` triples. Fields are backslash-escaped.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    pub config_hash: String,
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub mode: FitMode,
    /// Base columns of the fit dataset with their kinds, in file order.
    pub base_features: Vec<(String, FeatureKind)>,
    pub entries: Vec<SpecEntry>,
    pub stats: FittedStats,
}

const STATS_MARKER: &str = "#stats";

impl TransformSpec {
    pub fn exprs(&self) -> Vec<&FeatureExpr> {
        self.entries.iter().map(|e| &e.expr).collect()
    }

    /// Base columns referenced by at least one entry.
    pub fn required_columns(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            for c in e.expr.base_columns() {
                if !out.iter().any(|o| o == c) {
                    out.push(c.to_string());
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("#config_hash={}\n", self.config_hash));
        out.push_str(&format!("#seed={}\n", self.seed));
        out.push_str(&format!("#dataset_fingerprint={}\n", self.dataset_fingerprint));
        out.push_str(&format!("#mode={}\n", self.mode.as_str()));
        out.push_str(&format!("#fit_rows={}\n", self.stats.fit_rows));
        for (name, kind) in &self.base_features {
            out.push_str(&format!("#feature={kind}\t{}\n", escape(name)));
        }
        for (rank, e) in self.entries.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                rank + 1,
                format_number(e.importance),
                format_number(e.delta),
                escape(&canonical_string(&e.expr))
            ));
        }
        out.push_str(STATS_MARKER);
        out.push('\n');
        for line in self.stats.to_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let bad = |line: usize, m: String| Error::SpecFormat { line, message: m };
        let mut config_hash = None;
        let mut seed = None;
        let mut fingerprint = None;
        let mut mode = None;
        let mut fit_rows = None;
        let mut base_features = Vec::new();
        let mut entries = Vec::new();
        let mut stats_start = None;
        for (i, &line) in lines.iter().enumerate() {
            let no = i + 1;
            if line == STATS_MARKER {
                stats_start = Some(i + 1);
                break;
            }
            if let Some(header) = line.strip_prefix('#') {
                let (key, value) = header.split_once('=').ok_or_else(|| bad(no, "header without '='".into()))?;
                match key {
                    "config_hash" => config_hash = Some(value.to_string()),
                    "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad(no, format!("bad seed '{value}'")))?),
                    "dataset_fingerprint" => fingerprint = Some(value.to_string()),
                    "mode" => mode = Some(FitMode::from_str(value).map_err(|e| bad(no, e.to_string()))?),
                    "fit_rows" => {
                        fit_rows = Some(value.parse::<usize>().map_err(|_| bad(no, format!("bad row count '{value}'")))?)
                    }
                    "feature" => {
                        let (kind, name) =
                            value.split_once('\t').ok_or_else(|| bad(no, "feature header needs kind and name".into()))?;
                        let kind = FeatureKind::from_str(kind).map_err(|e| bad(no, e.to_string()))?;
                        base_features.push((unescape(name).map_err(|m| bad(no, m))?, kind));
                    }
                    other => return Err(bad(no, format!("unknown header '{other}'"))),
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(bad(no, format!("expected 4 fields, found {}", fields.len())));
            }
            let rank: usize = fields[0].parse().map_err(|_| bad(no, format!("bad rank '{}'", fields[0])))?;
            if rank != entries.len() + 1 {
                return Err(bad(no, format!("rank {rank} out of sequence")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(no, format!("bad number '{s}'")));
            let expr_text = unescape(fields[3]).map_err(|m| bad(no, m))?;
            let expr = parse_expr(&expr_text).map_err(|e| bad(no, e.to_string()))?;
            entries.push(SpecEntry { expr, importance: num(fields[1])?, delta: num(fields[2])? });
        }
        let missing = |what: &str| bad(1, format!("missing '#{what}' header"));
        let mode = mode.ok_or_else(|| missing("mode"))?;
        let fit_rows = fit_rows.ok_or_else(|| missing("fit_rows"))?;
        let start = stats_start.ok_or_else(|| bad(lines.len(), format!("missing '{STATS_MARKER}' section")))?;
        let stats = FittedStats::from_lines(mode, fit_rows, lines[start..].iter().copied(), start + 1)?;
        Ok(TransformSpec {
            config_hash: config_hash.ok_or_else(|| missing("config_hash"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            dataset_fingerprint: fingerprint.ok_or_else(|| missing("dataset_fingerprint"))?,
            mode,
            base_features,
            entries,
            stats,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Append one column per spec entry, named by its canonical string.
pub fn apply(spec: &TransformSpec, dataset: &Dataset) -> Result<Dataset> {
    let missing: Vec<String> = spec.required_columns().into_iter().filter(|c| dataset.column(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::Schema(missing));
    }
    let rows: Vec<usize> = (0..dataset.n_rows()).collect();
    let extra = spec
        .entries
        .iter()
        .map(|e| Ok(transform(&e.expr, &spec.stats, dataset, &rows)?.with_name(canonical_string(&e.expr))))
        .collect::<Result<Vec<_>>>()?;
    dataset.with_columns(extra)
}
