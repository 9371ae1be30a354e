//! Generation of all minimal valid equality and membership rules of a table.
//!
//! Both generators walk premise variable sets `X` by increasing size. For a
//! fixed size, every candidate rule is checked against the rules kept at
//! smaller sizes, so a rule that extends a kept rule is dropped. Sets of the
//! same size are independent, which lets each stage run in parallel and be
//! merged in a fixed order.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rules::{premise_extends, Rule, RuleKind, RuleSet};
use crate::table::ConstraintTable;
use crate::value::{Domain, ValueSet};

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub kind: RuleKind,
    /// Largest number of premise variables; `None` means `arity - 1`.
    pub max_premise: Option<usize>,
    /// Abort with [`Error::Timeout`] once this instant passes.
    pub deadline: Option<Instant>,
}

impl GenConfig {
    pub fn new(kind: RuleKind) -> Self {
        GenConfig {
            kind,
            max_premise: None,
            deadline: None,
        }
    }

    pub fn with_max_premise(mut self, k: usize) -> Self {
        self.max_premise = Some(k);
        self
    }

    pub fn with_timeout(mut self, budget: Duration) -> Self {
        self.deadline = Some(Instant::now() + budget);
        self
    }

    fn top_size(&self, arity: usize) -> Result<usize> {
        let full = arity.saturating_sub(1);
        match self.max_premise {
            Some(k) if k > full => Err(Error::InvalidPremiseCap { cap: k, arity }),
            Some(k) => Ok(k),
            None => Ok(full),
        }
    }

    fn check_deadline(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() > d => Err(Error::Timeout),
            _ => Ok(()),
        }
    }
}

/// Per-stage counters, one entry per premise size.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StageStats {
    pub premise_size: usize,
    /// (Weak) assignments enumerated.
    pub assignments: usize,
    /// Candidate rules tested for validity.
    pub candidates: usize,
    pub kept: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct GenStats {
    pub stages: Vec<StageStats>,
    pub elapsed: Duration,
}

impl GenStats {
    pub fn candidates(&self) -> usize {
        self.stages.iter().map(|s| s.candidates).sum()
    }
}

/// A set of table rows as a bitset.
#[derive(Clone, PartialEq, Eq)]
struct RowSet(Vec<u64>);

impl RowSet {
    fn empty(rows: usize) -> Self {
        RowSet(vec![0; rows.div_ceil(64)])
    }

    fn full(rows: usize) -> Self {
        let mut s = Self::empty(rows);
        for i in 0..rows {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn and_with(&mut self, other: &RowSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= b;
        }
    }

    fn or_with(&mut self, other: &RowSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let i = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(w * 64 + i)
            })
        })
    }
}

/// Row sets per (column, value).
struct RowIndex {
    by_value: Vec<Vec<RowSet>>,
}

impl RowIndex {
    fn new(table: &ConstraintTable) -> Self {
        let n = table.len();
        let by_value = (0..table.arity())
            .map(|c| {
                let mut sets = vec![RowSet::empty(n); table.domain(c).len()];
                for (i, r) in table.rows().iter().enumerate() {
                    sets[r[c] as usize].insert(i);
                }
                sets
            })
            .collect();
        RowIndex { by_value }
    }

    fn rows_in(&self, col: usize, set: ValueSet, rows: usize) -> RowSet {
        let mut out = RowSet::empty(rows);
        for v in set {
            out.or_with(&self.by_value[col][v]);
        }
        out
    }
}

/// Values of column `col` over the rows in `rows`.
fn column_values(table: &ConstraintTable, rows: &RowSet, col: usize) -> ValueSet {
    let data = table.rows();
    rows.iter().map(|i| data[i][col] as usize).collect()
}

/// All `k`-element subsets of `0..n`, lexicographically.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.len() == k {
            out.push(acc.clone());
            return;
        }
        for i in start..n {
            if n - i < k - acc.len() {
                break;
            }
            acc.push(i);
            go(i + 1, n, k, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Distinct projections of the table onto the columns `xs`, sorted.
pub fn enumerate_assignments(table: &ConstraintTable, xs: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = table
        .rows()
        .iter()
        .map(|r| xs.iter().map(|&x| r[x] as usize).collect())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Weak assignments to `xs`: one non-empty `S_j ⊆ C[x_j]` per column such
/// that some row has `row[x_j] ∈ S_j` for every `j`.
///
/// The result is in decreasing order: larger total cardinality first, ties
/// broken by the lexicographic order of the set sequence. If `U_j ⊆ S_j`
/// for all `j` then `S` precedes `U`.
pub fn enumerate_weak_assignments(table: &ConstraintTable, xs: &[usize]) -> Vec<Vec<ValueSet>> {
    let index = RowIndex::new(table);
    weak_assignments(table, &index, xs, None).unwrap_or_default()
}

fn weak_assignments(
    table: &ConstraintTable,
    index: &RowIndex,
    xs: &[usize],
    cfg: Option<&GenConfig>,
) -> Result<Vec<Vec<ValueSet>>> {
    let n = table.len();
    let subsets: Vec<Vec<(ValueSet, RowSet)>> = xs
        .iter()
        .map(|&x| {
            table
                .column(x)
                .nonempty_subsets()
                .map(|s| (s, index.rows_in(x, s, n)))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut acc = Vec::with_capacity(xs.len());
    let mut ticks = 0usize;
    fn go(
        subsets: &[Vec<(ValueSet, RowSet)>],
        rows: &RowSet,
        acc: &mut Vec<ValueSet>,
        out: &mut Vec<Vec<ValueSet>>,
        ticks: &mut usize,
        cfg: Option<&GenConfig>,
    ) -> Result<()> {
        let depth = acc.len();
        if depth == subsets.len() {
            out.push(acc.clone());
            *ticks += 1;
            if ticks.is_multiple_of(4096) {
                if let Some(cfg) = cfg {
                    cfg.check_deadline()?;
                }
            }
            return Ok(());
        }
        for (s, r) in &subsets[depth] {
            let mut next = rows.clone();
            next.and_with(r);
            if next.is_empty() {
                continue;
            }
            acc.push(*s);
            go(subsets, &next, acc, out, ticks, cfg)?;
            acc.pop();
        }
        Ok(())
    }
    go(&subsets, &RowSet::full(n), &mut acc, &mut out, &mut ticks, cfg)?;
    out.sort_by(|a, b| {
        let ca: usize = a.iter().map(|s| s.len()).sum();
        let cb: usize = b.iter().map(|s| s.len()).sum();
        cb.cmp(&ca).then_with(|| a.cmp(b))
    });
    Ok(out)
}

/// Generates the minimal valid rules of `cfg.kind` for `table`.
pub fn generate(table: &ConstraintTable, cfg: &GenConfig) -> Result<RuleSet> {
    generate_with_stats(table, cfg).map(|(r, _)| r)
}

pub fn generate_equality_rules(table: &ConstraintTable, cfg: &GenConfig) -> Result<RuleSet> {
    let cfg = GenConfig {
        kind: RuleKind::Equality,
        ..cfg.clone()
    };
    generate(table, &cfg)
}

pub fn generate_membership_rules(table: &ConstraintTable, cfg: &GenConfig) -> Result<RuleSet> {
    let cfg = GenConfig {
        kind: RuleKind::Membership,
        ..cfg.clone()
    };
    generate(table, &cfg)
}

pub fn generate_with_stats(table: &ConstraintTable, cfg: &GenConfig) -> Result<(RuleSet, GenStats)> {
    if table.is_empty() {
        return Err(Error::EmptyTable(table.name().to_string()));
    }
    let top = cfg.top_size(table.arity())?;
    let start = Instant::now();
    let (rules, stages) = match cfg.kind {
        RuleKind::Equality => equality_stages(table, cfg, top)?,
        RuleKind::Membership => membership_stages(table, cfg, top)?,
    };
    let stats = GenStats {
        stages,
        elapsed: start.elapsed(),
    };
    Ok((RuleSet::new(table.name(), cfg.kind, rules), stats))
}

struct Candidates {
    rules: Vec<Rule>,
    assignments: usize,
    candidates: usize,
}

fn equality_stages(
    table: &ConstraintTable,
    cfg: &GenConfig,
    top: usize,
) -> Result<(Vec<Rule>, Vec<StageStats>)> {
    let n = table.arity();
    let index = RowIndex::new(table);
    // keys (premise columns mask, premise values, y, d) of kept rules
    let mut kept: HashSet<(u64, Vec<usize>, usize, usize)> = HashSet::new();
    let mut out = Vec::new();
    let mut stages = Vec::new();
    for size in 0..=top {
        let t0 = Instant::now();
        let subsets = combinations(n, size);
        let results: Vec<Result<Candidates>> = subsets
            .par_iter()
            .map(|xs| {
                cfg.check_deadline()?;
                let mut found = Candidates {
                    rules: Vec::new(),
                    assignments: 0,
                    candidates: 0,
                };
                let mask: u64 = xs.iter().map(|&x| 1u64 << x).sum();
                for s in enumerate_assignments(table, xs) {
                    found.assignments += 1;
                    let mut rows = RowSet::full(table.len());
                    for (&x, &v) in xs.iter().zip(&s) {
                        rows.and_with(&index.by_value[x][v]);
                    }
                    for y in (0..n).filter(|y| mask & (1 << y) == 0) {
                        let present = column_values(table, &rows, y);
                        for d in 0..table.domain(y).len() {
                            found.candidates += 1;
                            if present.contains(d) {
                                continue;
                            }
                            if extends_kept_equality(&kept, xs, &s, y, d) {
                                continue;
                            }
                            let premise: Vec<(usize, usize)> =
                                xs.iter().copied().zip(s.iter().copied()).collect();
                            found.rules.push(Rule::equality(&premise, (y, d))?);
                        }
                    }
                }
                Ok(found)
            })
            .collect();
        let mut stage = StageStats {
            premise_size: size,
            ..Default::default()
        };
        for r in results {
            let r = r?;
            stage.assignments += r.assignments;
            stage.candidates += r.candidates;
            stage.kept += r.rules.len();
            for rule in &r.rules {
                let mask = rule.premise.iter().map(|&(v, _)| 1u64 << v).sum();
                let vals = rule.premise.iter().map(|&(_, s)| s.first().unwrap_or(0)).collect();
                kept.insert((mask, vals, rule.conclusion.0, rule.conclusion.1));
            }
            out.extend(r.rules);
        }
        stage.elapsed = t0.elapsed();
        stages.push(stage);
    }
    Ok((out, stages))
}

/// Whether some kept rule has a premise that is a proper sub-assignment of
/// `xs = s` and the conclusion `y != d`.
fn extends_kept_equality(
    kept: &HashSet<(u64, Vec<usize>, usize, usize)>,
    xs: &[usize],
    s: &[usize],
    y: usize,
    d: usize,
) -> bool {
    let m = xs.len();
    (0u32..(1 << m)).filter(|&sub| sub != (1 << m) - 1).any(|sub| {
        let mut mask = 0u64;
        let mut vals = Vec::new();
        for i in 0..m {
            if sub & (1 << i) != 0 {
                mask |= 1 << xs[i];
                vals.push(s[i]);
            }
        }
        kept.contains(&(mask, vals, y, d))
    })
}

fn membership_stages(
    table: &ConstraintTable,
    cfg: &GenConfig,
    top: usize,
) -> Result<(Vec<Rule>, Vec<StageStats>)> {
    let n = table.arity();
    let index = RowIndex::new(table);
    // kept rules by conclusion
    let mut kept: HashMap<(usize, usize), Vec<Rule>> = HashMap::new();
    let mut out = Vec::new();
    let mut stages = Vec::new();
    for size in 0..=top {
        let t0 = Instant::now();
        let subsets = combinations(n, size);
        let results: Vec<Result<Candidates>> = subsets
            .par_iter()
            .map(|xs| {
                let weak = weak_assignments(table, &index, xs, Some(cfg))?;
                let mut found = Candidates {
                    rules: Vec::new(),
                    assignments: weak.len(),
                    candidates: 0,
                };
                let mask: u64 = xs.iter().map(|&x| 1u64 << x).sum();
                // rules kept for this X, by conclusion; earlier weak
                // assignments are never extended by later ones' supersets
                let mut local: HashMap<(usize, usize), Vec<Rule>> = HashMap::new();
                for (k, sets) in weak.iter().enumerate() {
                    if k % 4096 == 0 {
                        cfg.check_deadline()?;
                    }
                    let mut rows = RowSet::full(table.len());
                    for (&x, &s) in xs.iter().zip(sets) {
                        rows.and_with(&index.rows_in(x, s, table.len()));
                    }
                    let premise: Vec<(usize, ValueSet)> =
                        xs.iter().copied().zip(sets.iter().copied()).collect();
                    for y in (0..n).filter(|y| mask & (1 << y) == 0) {
                        let present = column_values(table, &rows, y);
                        for d in 0..table.domain(y).len() {
                            found.candidates += 1;
                            if present.contains(d) {
                                continue;
                            }
                            let hit = |list: Option<&Vec<Rule>>| {
                                list.is_some_and(|l| l.iter().any(|r| premise_extends(&premise, &r.premise)))
                            };
                            if hit(kept.get(&(y, d))) || hit(local.get(&(y, d))) {
                                continue;
                            }
                            let rule = Rule::membership(premise.clone(), (y, d))?;
                            local.entry((y, d)).or_default().push(rule.clone());
                            found.rules.push(rule);
                        }
                    }
                }
                Ok(found)
            })
            .collect();
        let mut stage = StageStats {
            premise_size: size,
            ..Default::default()
        };
        for r in results {
            let r = r?;
            stage.assignments += r.assignments;
            stage.candidates += r.candidates;
            stage.kept += r.rules.len();
            for rule in &r.rules {
                kept.entry(rule.conclusion).or_default().push(rule.clone());
            }
            out.extend(r.rules);
        }
        stage.elapsed = t0.elapsed();
        stages.push(stage);
    }
    Ok((out, stages))
}

/// `x_i = a -> x_j != a` for every ordered pair `i != j` and every `a`,
/// attached to an all-different table named `name` over `vars`, each with
/// `domain`. The table itself is returned with the rules.
pub fn all_different_rules(name: &str, vars: &[&str], domain: &Domain) -> Result<(ConstraintTable, RuleSet)> {
    if vars.len() < 2 {
        return Err(Error::ArityMismatch {
            expected: 2,
            found: vars.len(),
        });
    }
    let n = vars.len();
    let k = domain.len();
    let mut rows = Vec::new();
    let mut row = vec![0u8; n];
    // all injective assignments
    fn fill(i: usize, n: usize, k: usize, row: &mut Vec<u8>, rows: &mut Vec<Box<[u8]>>) {
        if i == n {
            rows.push(row.clone().into_boxed_slice());
            return;
        }
        for v in 0..k as u8 {
            if !row[..i].contains(&v) {
                row[i] = v;
                fill(i + 1, n, k, row, rows);
            }
        }
    }
    fill(0, n, k, &mut row, &mut rows);
    let table = ConstraintTable::from_rows(
        name.to_string(),
        vars.iter().map(|v| v.to_string()).collect(),
        vec![domain.clone(); n],
        rows,
    )?;
    let mut rules = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                for a in 0..k {
                    rules.push(Rule::equality(&[(i, a)], (j, a))?);
                }
            }
        }
    }
    Ok((table, RuleSet::new(name, RuleKind::Equality, rules)))
}

/// Caches generated rule sets per (table name, kind).
#[derive(Default)]
pub struct RuleLibrary {
    cache: Mutex<HashMap<(String, RuleKind), Arc<RuleSet>>>,
    max_premise: Option<usize>,
}

impl RuleLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_max_premise(max_premise: Option<usize>) -> Self {
        RuleLibrary {
            max_premise,
            ..Self::default()
        }
    }

    /// Adds an externally obtained rule set, e.g. one read from a file.
    pub fn insert(&self, rules: RuleSet) {
        let key = (rules.table.clone(), rules.kind);
        self.cache.lock().expect("rule cache").insert(key, Arc::new(rules));
    }

    /// Rules of `kind` for `table`, generated on first use.
    pub fn get(&self, table: &ConstraintTable, kind: RuleKind) -> Result<Arc<RuleSet>> {
        let key = (table.name().to_string(), kind);
        if let Some(r) = self.cache.lock().expect("rule cache").get(&key) {
            return Ok(r.clone());
        }
        let mut cfg = GenConfig::new(kind);
        cfg.max_premise = self.max_premise.map(|k| k.min(table.arity().saturating_sub(1)));
        let rules = Arc::new(generate(table, &cfg)?);
        self.cache
            .lock()
            .expect("rule cache")
            .insert(key, rules.clone());
        Ok(rules)
    }

    pub fn lookup(&self, table: &str, kind: RuleKind) -> Option<Arc<RuleSet>> {
        self.cache
            .lock()
            .expect("rule cache")
            .get(&(table.to_string(), kind))
            .cloned()
    }
}
