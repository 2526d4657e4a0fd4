use std::collections::HashSet;

use super::{canonical_string, ArgKind, FeatureExpr, Operator};
use crate::dataframe::FeatureKind;

/// All type-valid first-order candidates over base columns.
pub fn expand(base: &[(String, FeatureKind)], catalog: &[Operator]) -> Vec<FeatureExpr> {
    let features: Vec<(FeatureExpr, FeatureKind)> =
        base.iter().map(|(n, k)| (FeatureExpr::base(n.clone()), *k)).collect();
    let fresh = vec![true; features.len()];
    expand_features(&features, &fresh, catalog)
}

/// Candidates built from `features` where at least one operand is marked
/// fresh. Expressions already present in `features` are not returned.
///
/// Unary operators apply to each fresh feature. Commutative binaries take
/// unordered pairs, the others ordered pairs. An operand is never paired
/// with itself.
pub fn expand_features(
    features: &[(FeatureExpr, FeatureKind)],
    fresh: &[bool],
    catalog: &[Operator],
) -> Vec<FeatureExpr> {
    assert_eq!(features.len(), fresh.len());
    let mut seen: HashSet<String> = features.iter().map(|(e, _)| canonical_string(e)).collect();
    let mut out = Vec::new();
    let mut push = |e: FeatureExpr, out: &mut Vec<FeatureExpr>| {
        if seen.insert(canonical_string(&e)) {
            out.push(e);
        }
    };
    let fits = |slot: ArgKind, i: usize| slot.accepts(features[i].1);
    let n = features.len();
    for &op in catalog {
        let slots = op.input_kinds();
        match slots {
            [a] => {
                for i in (0..n).filter(|&i| fresh[i] && fits(*a, i)) {
                    push(FeatureExpr::unary(op, features[i].0.clone()), &mut out);
                }
            }
            [a, b] => {
                for i in 0..n {
                    let j_start = if op.is_commutative() { i + 1 } else { 0 };
                    for j in j_start..n {
                        if i == j || !(fresh[i] || fresh[j]) || !fits(*a, i) || !fits(*b, j) {
                            continue;
                        }
                        push(FeatureExpr::binary(op, features[i].0.clone(), features[j].0.clone()), &mut out);
                    }
                }
            }
            _ => unreachable!("operators are unary or binary"),
        }
    }
    out
}
