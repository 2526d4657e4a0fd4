//! Operator catalog, candidate expressions and their evaluation.
//!
//! Operators are grouped by the kinds of features they take: unary
//! operators on numbers (plus `freq`, which accepts anything), arithmetic
//! on number pairs, group statistics of a number within the categories of
//! another feature, and category-pair combinations. Ordinal features satisfy
//! both numeric and categorical argument slots.

mod eval;
mod expand;
mod expr;

pub(crate) use eval::{escape, unescape};
pub use eval::{combine_label, fit_transform, transform, CatKey, FitMode, FittedStats, NodeStats};
pub use expand::{expand, expand_features};
pub use expr::{canonical_string, parse_expr, FeatureExpr};

use std::fmt;

use crate::dataframe::FeatureKind;

/// Kind constraint on one operator argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    Numeric,
    Categorical,
    Any,
}

impl ArgKind {
    pub fn accepts(self, kind: FeatureKind) -> bool {
        match self {
            ArgKind::Numeric => kind.is_numeric(),
            ArgKind::Categorical => kind.is_categorical(),
            ArgKind::Any => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    Freq,
    Abs,
    Log,
    Sqrt,
    Sigmoid,
    Round,
    Residual,
    Min,
    Max,
    Add,
    Sub,
    Mul,
    Div,
    GroupByThenMin,
    GroupByThenMax,
    GroupByThenMean,
    GroupByThenMedian,
    GroupByThenStd,
    GroupByThenRank,
    Combine,
    CombineThenFreq,
    GroupByThenNUnique,
}

impl Operator {
    /// The full catalog in enumeration order.
    pub const ALL: [Operator; 22] = [
        Operator::Freq,
        Operator::Abs,
        Operator::Log,
        Operator::Sqrt,
        Operator::Sigmoid,
        Operator::Round,
        Operator::Residual,
        Operator::Min,
        Operator::Max,
        Operator::Add,
        Operator::Sub,
        Operator::Mul,
        Operator::Div,
        Operator::GroupByThenMin,
        Operator::GroupByThenMax,
        Operator::GroupByThenMean,
        Operator::GroupByThenMedian,
        Operator::GroupByThenStd,
        Operator::GroupByThenRank,
        Operator::Combine,
        Operator::CombineThenFreq,
        Operator::GroupByThenNUnique,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::Freq => "freq",
            Operator::Abs => "abs",
            Operator::Log => "log",
            Operator::Sqrt => "sqrt",
            Operator::Sigmoid => "sigmoid",
            Operator::Round => "round",
            Operator::Residual => "residual",
            Operator::Min => "min",
            Operator::Max => "max",
            Operator::Add => "add",
            Operator::Sub => "sub",
            Operator::Mul => "mul",
            Operator::Div => "div",
            Operator::GroupByThenMin => "GroupByThenMin",
            Operator::GroupByThenMax => "GroupByThenMax",
            Operator::GroupByThenMean => "GroupByThenMean",
            Operator::GroupByThenMedian => "GroupByThenMedian",
            Operator::GroupByThenStd => "GroupByThenStd",
            Operator::GroupByThenRank => "GroupByThenRank",
            Operator::Combine => "Combine",
            Operator::CombineThenFreq => "CombineThenFreq",
            Operator::GroupByThenNUnique => "GroupByThenNUnique",
        }
    }

    /// Case-insensitive lookup by name.
    pub fn from_name(name: &str) -> Option<Operator> {
        Operator::ALL.iter().copied().find(|op| op.name().eq_ignore_ascii_case(name))
    }

    pub fn arity(self) -> usize {
        self.input_kinds().len()
    }

    pub fn input_kinds(self) -> &'static [ArgKind] {
        use ArgKind::*;
        match self {
            Operator::Freq => &[Any],
            Operator::Abs
            | Operator::Log
            | Operator::Sqrt
            | Operator::Sigmoid
            | Operator::Round
            | Operator::Residual => &[Numeric],
            Operator::Min | Operator::Max | Operator::Add | Operator::Sub | Operator::Mul | Operator::Div => {
                &[Numeric, Numeric]
            }
            Operator::GroupByThenMin
            | Operator::GroupByThenMax
            | Operator::GroupByThenMean
            | Operator::GroupByThenMedian
            | Operator::GroupByThenStd
            | Operator::GroupByThenRank => &[Numeric, Categorical],
            Operator::Combine | Operator::CombineThenFreq | Operator::GroupByThenNUnique => {
                &[Categorical, Categorical]
            }
        }
    }

    pub fn output_kind(self) -> FeatureKind {
        match self {
            Operator::Combine => FeatureKind::Categorical,
            _ => FeatureKind::Numerical,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            Operator::Add | Operator::Mul | Operator::Min | Operator::Max | Operator::Combine | Operator::CombineThenFreq
        )
    }

    /// Operators whose output depends on statistics over a row set.
    pub fn needs_stats(self) -> bool {
        matches!(
            self,
            Operator::Freq
                | Operator::GroupByThenMin
                | Operator::GroupByThenMax
                | Operator::GroupByThenMean
                | Operator::GroupByThenMedian
                | Operator::GroupByThenStd
                | Operator::GroupByThenRank
                | Operator::Combine
                | Operator::CombineThenFreq
                | Operator::GroupByThenNUnique
        )
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The complete operator catalog.
pub fn catalog() -> Vec<Operator> {
    Operator::ALL.to_vec()
}
