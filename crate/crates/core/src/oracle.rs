//! Brute-force reference enumeration of minimal valid rules.
//!
//! Shares nothing with the generators beyond the rule predicates: every rule
//! in the rule space is built, and a rule is kept when it is valid and
//! [`is_minimal`]. Only usable on small tables.

use crate::generation::combinations;
use crate::rules::{is_minimal, is_valid, Rule, RuleKind, RuleSet};
use crate::table::ConstraintTable;
use crate::value::ValueSet;

/// All minimal valid rules of `kind` with at most `max_premise` premise
/// variables (default `arity - 1`).
///
/// Equality premises range over every value of each column's domain;
/// membership premises over every non-empty subset of the column `C[x]`.
pub fn minimal_valid_rules(table: &ConstraintTable, kind: RuleKind, max_premise: Option<usize>) -> RuleSet {
    let n = table.arity();
    let top = max_premise.unwrap_or(n.saturating_sub(1)).min(n.saturating_sub(1));
    let mut out = Vec::new();
    for size in 0..=top {
        for xs in combinations(n, size) {
            let choices: Vec<Vec<ValueSet>> = xs
                .iter()
                .map(|&x| match kind {
                    RuleKind::Equality => (0..table.domain(x).len()).map(ValueSet::singleton).collect(),
                    RuleKind::Membership => table.column(x).nonempty_subsets().collect(),
                })
                .collect();
            for_each_product(&choices, &mut |sets| {
                for y in (0..n).filter(|y| !xs.contains(y)) {
                    for d in 0..table.domain(y).len() {
                        let rule = Rule {
                            kind,
                            premise: xs.iter().copied().zip(sets.iter().copied()).collect(),
                            conclusion: (y, d),
                        };
                        if is_valid(&rule, table) && is_minimal(&rule, table) {
                            out.push(rule);
                        }
                    }
                }
            });
        }
    }
    RuleSet::new(table.name(), kind, out)
}

fn for_each_product(choices: &[Vec<ValueSet>], f: &mut dyn FnMut(&[ValueSet])) {
    fn go(choices: &[Vec<ValueSet>], acc: &mut Vec<ValueSet>, f: &mut dyn FnMut(&[ValueSet])) {
        match choices.split_first() {
            None => f(acc),
            Some((first, rest)) => {
                for &c in first {
                    acc.push(c);
                    go(rest, acc, f);
                    acc.pop();
                }
            }
        }
    }
    go(choices, &mut Vec::new(), f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{Domain, Value};

    #[test]
    fn and_oracle() {
        let vals = |s: &str| s.split_whitespace().map(Value::from).collect::<Vec<_>>();
        let vars: Vec<String> = ["x", "y", "z"].map(String::from).to_vec();
        let domains = vars.iter().map(|v| Domain::new(v, vals("0 1")).unwrap()).collect();
        let and = ConstraintTable::new(
            "and",
            vars,
            domains,
            ["0 0 0", "0 1 0", "1 0 0", "1 1 1"].map(vals),
        )
        .unwrap();
        let eq = minimal_valid_rules(&and, RuleKind::Equality, None);
        assert_eq!(eq.len(), 7);
        assert_eq!(eq.grouped_len(), 6);
    }
}
