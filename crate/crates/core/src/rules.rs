//! Equality and membership rules over a table, and their semantic
//! predicates: validity, feasibility, closure, extension and minimality.
//!
//! A rule refers to table columns and value positions of the table it was
//! built for. Equality rules are stored as membership rules with singleton
//! sets plus a kind tag, so both kinds share one firing path.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::table::ConstraintTable;
use crate::value::ValueSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Equality,
    Membership,
}

impl RuleKind {
    pub fn short_name(self) -> &'static str {
        match self {
            RuleKind::Equality => "eq",
            RuleKind::Membership => "mem",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eq" | "equality" => Some(RuleKind::Equality),
            "mem" | "membership" => Some(RuleKind::Membership),
            _ => None,
        }
    }
}

/// One premise atom: column index and allowed value positions.
pub type Premise = Vec<(usize, ValueSet)>;

/// An ungrouped rule `x_1 ∈ S_1, .., x_m ∈ S_m -> y != a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub kind: RuleKind,
    /// Sorted by column, columns distinct.
    pub premise: Premise,
    /// `(column, value position)`.
    pub conclusion: (usize, usize),
}

impl Rule {
    /// Builds a canonical rule, checking the structural invariants.
    pub fn new(kind: RuleKind, mut premise: Premise, conclusion: (usize, usize)) -> Result<Self> {
        premise.sort_by_key(|&(v, _)| v);
        if premise.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidRule("premise variables must be distinct".into()));
        }
        if premise.iter().any(|&(v, _)| v == conclusion.0) {
            return Err(Error::InvalidRule(
                "conclusion variable occurs in the premise".into(),
            ));
        }
        if premise.iter().any(|(_, s)| s.is_empty()) {
            return Err(Error::InvalidRule("empty membership set".into()));
        }
        if kind == RuleKind::Equality && premise.iter().any(|(_, s)| !s.is_singleton()) {
            return Err(Error::InvalidRule(
                "equality premise atoms must name one value".into(),
            ));
        }
        Ok(Rule {
            kind,
            premise,
            conclusion,
        })
    }

    /// `X = s -> y != a` from `(column, value)` pairs.
    pub fn equality(premise: &[(usize, usize)], conclusion: (usize, usize)) -> Result<Self> {
        let premise = premise
            .iter()
            .map(|&(v, a)| (v, ValueSet::singleton(a)))
            .collect();
        Rule::new(RuleKind::Equality, premise, conclusion)
    }

    pub fn membership(premise: Premise, conclusion: (usize, usize)) -> Result<Self> {
        Rule::new(RuleKind::Membership, premise, conclusion)
    }

    /// The same premise read as a membership rule.
    pub fn as_membership(&self) -> Rule {
        Rule {
            kind: RuleKind::Membership,
            ..self.clone()
        }
    }

    /// Checks that every column and value exists in `table`.
    pub fn check_against(&self, table: &ConstraintTable) -> Result<()> {
        let n = table.arity();
        let (y, a) = self.conclusion;
        if y >= n || a >= table.domain(y).len() {
            return Err(Error::InvalidRule("conclusion outside the table".into()));
        }
        for &(v, s) in &self.premise {
            if v >= n || !s.is_subset(table.domain(v).all()) {
                return Err(Error::InvalidRule("premise outside the table".into()));
            }
        }
        Ok(())
    }

    fn sort_key(&self) -> impl Ord + '_ {
        (
            self.premise.len(),
            self.premise.iter().map(|p| p.0).collect::<Vec<_>>(),
            self.premise.iter().map(|p| p.1).collect::<Vec<_>>(),
            self.conclusion,
            self.kind,
        )
    }
}

impl Ord for Rule {
    /// Smaller premises first, then by premise columns, premise sets and
    /// conclusion.
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Rule {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Rules sharing one premise, with all their conclusions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupedRule {
    pub premise: Premise,
    /// Sorted by column, then value position.
    pub conclusions: Vec<(usize, usize)>,
}

/// A canonically ordered, duplicate-free set of rules for one table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    pub table: String,
    pub kind: RuleKind,
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(table: impl Into<String>, kind: RuleKind, mut rules: Vec<Rule>) -> Self {
        rules.sort();
        rules.dedup();
        RuleSet {
            table: table.into(),
            kind,
            rules,
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Merges rules with identical premises.
    pub fn grouped(&self) -> Vec<GroupedRule> {
        let mut groups: BTreeMap<Premise, Vec<(usize, usize)>> = BTreeMap::new();
        let mut order: Vec<Premise> = Vec::new();
        for r in &self.rules {
            let entry = groups.entry(r.premise.clone()).or_default();
            if entry.is_empty() {
                order.push(r.premise.clone());
            }
            entry.push(r.conclusion);
        }
        order
            .into_iter()
            .map(|premise| {
                let mut conclusions = groups.remove(&premise).unwrap_or_default();
                conclusions.sort();
                GroupedRule {
                    premise,
                    conclusions,
                }
            })
            .collect()
    }

    pub fn grouped_len(&self) -> usize {
        self.grouped().len()
    }
}

/// Conjunction of the premise atoms on a position tuple.
pub fn premise_holds(rule: &Rule, row: &[u8]) -> bool {
    rule.premise
        .iter()
        .all(|&(v, s)| s.contains(row[v] as usize))
}

/// Every tuple satisfying the premise satisfies the conclusion.
pub fn is_valid(rule: &Rule, table: &ConstraintTable) -> bool {
    let (y, a) = rule.conclusion;
    table
        .rows()
        .iter()
        .all(|r| !premise_holds(rule, r) || r[y] as usize != a)
}

/// Some tuple satisfies the premise.
pub fn is_feasible(rule: &Rule, table: &ConstraintTable) -> bool {
    table.rows().iter().any(|r| premise_holds(rule, r))
}

/// Table-level closure: if every tuple of `table` satisfies the premise,
/// then every tuple satisfies the conclusion.
///
/// `rule` is read over the columns and domains of `base`; `table` must have
/// the same columns, with domains that are subsets of `base`'s (a
/// restriction). Values are matched by name.
pub fn is_closed_under(table: &ConstraintTable, rule: &Rule, base: &ConstraintTable) -> Result<bool> {
    if table.arity() != base.arity() {
        return Err(Error::ArityMismatch {
            expected: base.arity(),
            found: table.arity(),
        });
    }
    let lift = |col: usize, pos: u8| -> Result<usize> {
        let value = table.domain(col).value(pos as usize);
        base.domain(col)
            .index_of(value)
            .ok_or_else(|| Error::ValueOutsideDomain {
                var: table.vars()[col].clone(),
                value: value.to_string(),
            })
    };
    let mut all_premise = true;
    let mut all_conclusion = true;
    for row in table.rows() {
        let lifted = row
            .iter()
            .enumerate()
            .map(|(i, &p)| lift(i, p).map(|x| x as u8))
            .collect::<Result<Vec<u8>>>()?;
        all_premise &= premise_holds(rule, &lifted);
        all_conclusion &= lifted[rule.conclusion.0] as usize != rule.conclusion.1;
    }
    Ok(!all_premise || all_conclusion)
}

/// Syntactic extension: `r1` extends `r2` when `r2`'s premise variables are
/// among `r1`'s and, on each of them, `r1`'s set is inside `r2`'s. For
/// equality rules this is exactly "`r2`'s assignment is a subsequence of
/// `r1`'s".
pub fn extends(r1: &Rule, r2: &Rule) -> Result<bool> {
    if r1.kind != r2.kind {
        return Err(Error::IncomparableRules("different rule kinds".into()));
    }
    if r1.conclusion != r2.conclusion {
        return Err(Error::IncomparableRules("different conclusions".into()));
    }
    Ok(premise_extends(&r1.premise, &r2.premise))
}

/// `p1` is at least as strong as `p2`, syntactically.
pub(crate) fn premise_extends(p1: &[(usize, ValueSet)], p2: &[(usize, ValueSet)]) -> bool {
    let mut it = p1.iter();
    'outer: for &(v2, s2) in p2 {
        for &(v1, s1) in it.by_ref() {
            if v1 == v2 {
                if !s1.is_subset(s2) {
                    return false;
                }
                continue 'outer;
            }
            if v1 > v2 {
                return false;
            }
        }
        return false;
    }
    true
}

/// Feasible, and not a proper extension of any valid rule of the same kind.
///
/// Checked by enumerating every weaker rule: each subset of the premise
/// variables, and for membership rules each superset of each set within the
/// column `C[x]`. Membership rules whose sets leave `C[x]` lie outside the
/// rule space and are never minimal.
pub fn is_minimal(rule: &Rule, table: &ConstraintTable) -> bool {
    if rule.check_against(table).is_err() || !is_feasible(rule, table) {
        return false;
    }
    let columns: Vec<ValueSet> = (0..table.arity()).map(|i| table.column(i)).collect();
    if rule.kind == RuleKind::Membership
        && rule.premise.iter().any(|&(v, s)| !s.is_subset(columns[v]))
    {
        return false;
    }
    let m = rule.premise.len();
    for mask in 0u32..(1 << m) {
        let kept: Vec<(usize, ValueSet)> = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| rule.premise[i])
            .collect();
        let found = match rule.kind {
            RuleKind::Equality => {
                kept.len() < m && {
                    let weaker = Rule {
                        premise: kept,
                        ..rule.clone()
                    };
                    is_valid(&weaker, table)
                }
            }
            RuleKind::Membership => {
                let choices: Vec<Vec<ValueSet>> = kept
                    .iter()
                    .map(|&(v, s)| {
                        columns[v]
                            .nonempty_subsets()
                            .filter(|t| s.is_subset(*t))
                            .collect()
                    })
                    .collect();
                any_product(&choices, &mut |sets| {
                    let premise: Premise = kept.iter().zip(sets).map(|(&(v, _), &t)| (v, t)).collect();
                    if premise == rule.premise {
                        return false;
                    }
                    is_valid(
                        &Rule {
                            premise,
                            ..rule.clone()
                        },
                        table,
                    )
                })
            }
        };
        if found {
            return false;
        }
    }
    true
}

/// Calls `f` on each element of the cartesian product until it returns true.
pub(crate) fn any_product<T: Copy>(choices: &[Vec<T>], f: &mut dyn FnMut(&[T]) -> bool) -> bool {
    fn go<T: Copy>(choices: &[Vec<T>], acc: &mut Vec<T>, f: &mut dyn FnMut(&[T]) -> bool) -> bool {
        match choices.split_first() {
            None => f(acc),
            Some((first, rest)) => first.iter().any(|&c| {
                acc.push(c);
                let hit = go(rest, acc, f);
                acc.pop();
                hit
            }),
        }
    }
    go(choices, &mut Vec::with_capacity(choices.len()), f)
}
