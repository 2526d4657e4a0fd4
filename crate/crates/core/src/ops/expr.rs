use std::fmt;

use super::Operator;
use crate::dataframe::FeatureKind;
use crate::error::{Error, Result};

/// Expression tree over base columns.
///
/// Values built through [`FeatureExpr::apply`] or [`parse_expr`] are in
/// canonical form: children of commutative operators are sorted by their
/// canonical strings, so structurally equal features compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureExpr {
    Base(String),
    Apply(Operator, Vec<FeatureExpr>),
}

impl FeatureExpr {
    pub fn base(name: impl Into<String>) -> Self {
        FeatureExpr::Base(name.into())
    }

    /// Canonicalizing constructor. Panics if the child count does not match the arity.
    pub fn apply(op: Operator, mut children: Vec<FeatureExpr>) -> Self {
        assert_eq!(children.len(), op.arity(), "{op} takes {} argument(s)", op.arity());
        if op.is_commutative() {
            children.sort_by_cached_key(canonical_string);
        }
        FeatureExpr::Apply(op, children)
    }

    pub fn unary(op: Operator, a: FeatureExpr) -> Self {
        Self::apply(op, vec![a])
    }

    pub fn binary(op: Operator, a: FeatureExpr, b: FeatureExpr) -> Self {
        Self::apply(op, vec![a, b])
    }

    /// 0 for base features, otherwise one more than the deepest child.
    pub fn order(&self) -> usize {
        match self {
            FeatureExpr::Base(_) => 0,
            FeatureExpr::Apply(_, ch) => 1 + ch.iter().map(FeatureExpr::order).max().unwrap_or(0),
        }
    }

    /// Base column names referenced anywhere in the tree, in first-visit order.
    pub fn base_columns(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_bases(&mut out);
        out
    }

    fn collect_bases<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            FeatureExpr::Base(n) => {
                if !out.contains(&n.as_str()) {
                    out.push(n);
                }
            }
            FeatureExpr::Apply(_, ch) => ch.iter().for_each(|c| c.collect_bases(out)),
        }
    }

    /// Output kind, checking every operator's argument kinds on the way.
    pub fn kind_with(&self, base_kind: &dyn Fn(&str) -> Option<FeatureKind>) -> Result<FeatureKind> {
        match self {
            FeatureExpr::Base(n) => base_kind(n).ok_or_else(|| Error::Schema(vec![n.clone()])),
            FeatureExpr::Apply(op, ch) => {
                for (child, slot) in ch.iter().zip(op.input_kinds()) {
                    let k = child.kind_with(base_kind)?;
                    if !slot.accepts(k) {
                        return Err(Error::contract(format!(
                            "{op} cannot take {k} argument {}",
                            canonical_string(child)
                        )));
                    }
                }
                Ok(op.output_kind())
            }
        }
    }
}

impl fmt::Display for FeatureExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical_string(self))
    }
}

fn is_plain_ident(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

/// Prefix notation, e.g. `GroupByThenMean(num_diagnose,age)`.
///
/// Column names outside `[A-Za-z0-9_.]` are wrapped in backticks with
/// embedded backticks doubled.
pub fn canonical_string(expr: &FeatureExpr) -> String {
    let mut out = String::new();
    write_canonical(expr, &mut out);
    out
}

fn write_canonical(expr: &FeatureExpr, out: &mut String) {
    match expr {
        FeatureExpr::Base(name) if is_plain_ident(name) => out.push_str(name),
        FeatureExpr::Base(name) => {
            out.push('`');
            out.push_str(&name.replace('`', "``"));
            out.push('`');
        }
        FeatureExpr::Apply(op, ch) => {
            out.push_str(op.name());
            out.push('(');
            for (i, c) in ch.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(c, out);
            }
            out.push(')');
        }
    }
}

/// Parse `expr := IDENT | OPNAME '(' expr (',' expr)? ')'`.
pub fn parse_expr(text: &str) -> Result<FeatureExpr> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Expr { offset: self.pos, message: msg.to_string() }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn expr(&mut self) -> Result<FeatureExpr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('`') => return self.quoted().map(FeatureExpr::Base),
            Some(c) if c.is_alphanumeric() || c == '_' || c == '.' => {}
            Some(c) => return Err(self.err(&format!("unexpected '{c}'"))),
            None => return Err(self.err("unexpected end of input")),
        }
        while let Some(c) = self.peek() {
            if !(c.is_alphanumeric() || c == '_' || c == '.') {
                break;
            }
            self.pos += c.len_utf8();
        }
        let ident = &self.src[start..self.pos];
        self.skip_ws();
        if self.peek() != Some('(') {
            return Ok(FeatureExpr::Base(ident.to_string()));
        }
        let op = Operator::from_name(ident)
            .ok_or_else(|| Error::Expr { offset: start, message: format!("unknown operator '{ident}'") })?;
        self.pos += 1;
        let mut args = vec![self.expr()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some(c) => return Err(self.err(&format!("expected ',' or ')', found '{c}'"))),
                None => return Err(self.err("unbalanced parentheses")),
            }
        }
        if args.len() != op.arity() {
            return Err(Error::Expr {
                offset: start,
                message: format!("{op} takes {} argument(s), got {}", op.arity(), args.len()),
            });
        }
        Ok(FeatureExpr::apply(op, args))
    }

    fn quoted(&mut self) -> Result<String> {
        let open = self.pos;
        self.pos += 1;
        let mut name = String::new();
        loop {
            match self.peek() {
                Some('`') => {
                    self.pos += 1;
                    if self.peek() == Some('`') {
                        name.push('`');
                        self.pos += 1;
                    } else {
                        return Ok(name);
                    }
                }
                Some(c) => {
                    name.push(c);
                    self.pos += c.len_utf8();
                }
                None => return Err(Error::Expr { offset: open, message: "unterminated quoted name".into() }),
            }
        }
    }
}
