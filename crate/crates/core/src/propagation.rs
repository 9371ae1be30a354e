//! Applying rules to CSPs: firing, relevance, fixpoint computation and the
//! rule / membership-rule / arc consistency checks.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use crate::csp::Csp;
use crate::error::{Error, Result};
use crate::generation::RuleLibrary;
use crate::rules::{Rule, RuleKind, RuleSet};
use crate::value::ValueSet;

/// A rule attached to one constraint instance, compiled to CSP variables
/// and CSP value positions.
#[derive(Clone, Debug)]
pub struct RuleInstance {
    pub instance: usize,
    /// Index of the rule in its rule set.
    pub rule_id: usize,
    pub rule: Rule,
    /// `(CSP variable, allowed CSP positions)`.
    pub premise: Vec<(usize, ValueSet)>,
    /// `None` when the conclusion value is outside the CSP variable's
    /// universe; such a rule can never be relevant.
    pub conclusion: Option<(usize, usize)>,
    /// Conclusion CSP variable, kept even when the value is absent.
    pub conclusion_var: usize,
}

impl RuleInstance {
    /// Compiles `rule` (over the instance's base table) for `csp`.
    pub fn new(csp: &Csp, instance: usize, rule_id: usize, rule: &Rule) -> Result<Self> {
        let inst = csp
            .instances()
            .get(instance)
            .ok_or_else(|| Error::InvalidRule(format!("no constraint instance {instance}")))?;
        rule.check_against(inst.table())?;
        let premise = rule
            .premise
            .iter()
            .map(|&(role, set)| (inst.binding()[role], inst.to_csp_set(role, set)))
            .collect();
        let (role, value) = rule.conclusion;
        let var = inst.binding()[role];
        Ok(RuleInstance {
            instance,
            rule_id,
            rule: rule.clone(),
            premise,
            conclusion: inst.csp_pos(role, value).map(|p| (var, p)),
            conclusion_var: var,
        })
    }

    /// Every premise variable's domain lies inside its set.
    pub fn fires(&self, domains: &[ValueSet]) -> bool {
        self.premise.iter().all(|&(v, s)| domains[v].is_subset(s))
    }

    /// The conclusion value is still in its variable's domain.
    pub fn is_relevant(&self, domains: &[ValueSet]) -> bool {
        self.conclusion.is_some_and(|(v, p)| domains[v].contains(p))
    }
}

/// Attaches every rule of `rules` to every instance of the matching table.
pub fn instantiate(csp: &Csp, rules: &[&RuleSet]) -> Result<Vec<RuleInstance>> {
    let mut out = Vec::new();
    for (i, inst) in csp.instances().iter().enumerate() {
        for set in rules.iter().filter(|s| s.table == inst.table().name()) {
            for (id, r) in set.rules().iter().enumerate() {
                out.push(RuleInstance::new(csp, i, id, r)?);
            }
        }
    }
    Ok(out)
}

/// Attaches the minimal rules of `kind` to every instance, generating them
/// through `library` when needed.
pub fn instantiate_kind(csp: &Csp, library: &RuleLibrary, kind: RuleKind) -> Result<Vec<RuleInstance>> {
    let mut sets: Vec<Arc<RuleSet>> = Vec::new();
    for inst in csp.instances() {
        if !sets.iter().any(|s| s.table == inst.table().name()) {
            sets.push(library.get(inst.table(), kind)?);
        }
    }
    let refs: Vec<&RuleSet> = sets.iter().map(|s| s.as_ref()).collect();
    instantiate(csp, &refs)
}

/// `fires` on a whole CSP.
pub fn fires(csp: &Csp, ri: &RuleInstance) -> bool {
    ri.fires(&csp.domains())
}

pub fn is_relevant(csp: &Csp, ri: &RuleInstance) -> bool {
    ri.is_relevant(&csp.domains())
}

/// Removes the conclusion value. Errors if the rule does not fire.
pub fn apply_rule(csp: &Csp, ri: &RuleInstance) -> Result<Csp> {
    let mut domains = csp.domains();
    if !ri.fires(&domains) {
        return Err(Error::RuleDoesNotFire);
    }
    if let Some((v, p)) = ri.conclusion {
        domains[v].remove(p);
    }
    let mut out = csp.clone();
    out.set_domains(&domains);
    Ok(out)
}

/// One pruning step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: usize,
    pub var: usize,
    pub value: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `step <n>: <table>.<rule-id> prunes <var> != <value>` per line.
    pub fn render(&self, csp: &Csp, rules: &[RuleInstance]) -> String {
        let mut out = String::new();
        for (n, s) in self.steps.iter().enumerate() {
            let ri = &rules[s.rule];
            let table = csp.instances()[ri.instance].table().name();
            let var = csp.var(s.var);
            out.push_str(&format!(
                "step {}: {}.{} prunes {} != {}\n",
                n + 1,
                table,
                ri.rule_id + 1,
                var.name,
                var.universe.value(s.value)
            ));
        }
        out
    }
}

/// A compiled rule collection with per-variable watch lists.
pub struct Propagator<'a> {
    rules: &'a [RuleInstance],
    watchers: Vec<Vec<usize>>,
}

impl<'a> Propagator<'a> {
    pub fn new(num_vars: usize, rules: &'a [RuleInstance]) -> Self {
        let mut watchers = vec![Vec::new(); num_vars];
        for (i, r) in rules.iter().enumerate() {
            for &(v, _) in &r.premise {
                watchers[v].push(i);
            }
        }
        Propagator { rules, watchers }
    }

    pub fn rules(&self) -> &[RuleInstance] {
        self.rules
    }

    /// Runs to a fixpoint starting from every rule.
    pub fn run(&self, domains: &mut [ValueSet], trace: Option<&mut Trace>) -> usize {
        self.run_from(domains, 0..self.rules.len(), trace)
    }

    /// Runs to a fixpoint after `var` changed, assuming `domains` was closed
    /// before the change.
    pub fn run_after_change(&self, domains: &mut [ValueSet], var: usize, trace: Option<&mut Trace>) -> usize {
        let start: Vec<usize> = self.watchers[var].clone();
        self.run_from(domains, start, trace)
    }

    /// Runs from the given initial worklist. Rules outside it are retried
    /// only when one of their premise variables changes.
    pub fn run_from(
        &self,
        domains: &mut [ValueSet],
        start: impl IntoIterator<Item = usize>,
        mut trace: Option<&mut Trace>,
    ) -> usize {
        let mut queued = vec![false; self.rules.len()];
        let mut queue = VecDeque::new();
        for i in start {
            if !std::mem::replace(&mut queued[i], true) {
                queue.push_back(i);
            }
        }
        let mut removed = 0;
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            let r = &self.rules[i];
            if !r.fires(domains) || !r.is_relevant(domains) {
                continue;
            }
            let (v, p) = r.conclusion.expect("relevant rules have a conclusion");
            domains[v].remove(p);
            removed += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.steps.push(Step {
                    rule: i,
                    var: v,
                    value: p,
                });
            }
            for &w in &self.watchers[v] {
                if !std::mem::replace(&mut queued[w], true) {
                    queue.push_back(w);
                }
            }
        }
        removed
    }
}

/// Closes `csp` under `rules`.
pub fn propagate(csp: &Csp, rules: &[RuleInstance]) -> (Csp, Trace) {
    let mut domains = csp.domains();
    let mut trace = Trace::default();
    Propagator::new(csp.vars().len(), rules).run(&mut domains, Some(&mut trace));
    let mut out = csp.clone();
    out.set_domains(&domains);
    (out, trace)
}

/// Closes `csp` under `rules` with the initial worklist in the given order,
/// which must list every rule. Used to exercise different schedules.
pub fn propagate_in_order(csp: &Csp, rules: &[RuleInstance], order: &[usize]) -> (Csp, Trace) {
    let mut domains = csp.domains();
    let mut trace = Trace::default();
    let prop = Propagator::new(csp.vars().len(), rules);
    prop.run_from(&mut domains, order.iter().copied(), Some(&mut trace));
    let mut out = csp.clone();
    out.set_domains(&domains);
    (out, trace)
}

/// No rule has a relevant application.
pub fn is_closed(csp: &Csp, rules: &[RuleInstance]) -> bool {
    let domains = csp.domains();
    !rules.iter().any(|r| r.fires(&domains) && r.is_relevant(&domains))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    NotConsistent,
    /// Some domain is empty; the notion is not checked.
    Failed,
}

impl Consistency {
    pub fn is_consistent(self) -> bool {
        self == Consistency::Consistent
    }
}

impl fmt::Display for Consistency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Consistency::Consistent => "yes",
            Consistency::NotConsistent => "no",
            Consistency::Failed => "failed",
        })
    }
}

fn closed_under_kind(csp: &Csp, library: &RuleLibrary, kind: RuleKind) -> Result<Consistency> {
    if csp.is_failed() {
        return Ok(Consistency::Failed);
    }
    let rules = instantiate_kind(csp, library, kind)?;
    Ok(if is_closed(csp, &rules) {
        Consistency::Consistent
    } else {
        Consistency::NotConsistent
    })
}

/// Closed under every minimal valid equality rule of every base table.
pub fn check_rule_consistent(csp: &Csp, library: &RuleLibrary) -> Result<Consistency> {
    closed_under_kind(csp, library, RuleKind::Equality)
}

/// Closed under every minimal valid membership rule of every base table.
pub fn check_membership_rule_consistent(csp: &Csp, library: &RuleLibrary) -> Result<Consistency> {
    closed_under_kind(csp, library, RuleKind::Membership)
}

/// Values of each bound variable that occur in a live row of the instance.
fn supported(csp: &Csp, domains: &[ValueSet], instance: usize) -> Vec<ValueSet> {
    let inst = &csp.instances()[instance];
    let mut sup = vec![ValueSet::EMPTY; inst.binding().len()];
    for row in inst.live_rows(domains) {
        for (role, &p) in row.iter().enumerate() {
            sup[role].insert(p as usize);
        }
    }
    sup.iter()
        .enumerate()
        .map(|(role, &s)| inst.to_csp_set(role, s))
        .collect()
}

/// Every value of every constrained variable has a support in each of its
/// instances.
pub fn check_arc_consistent(csp: &Csp) -> Consistency {
    if csp.is_failed() {
        return Consistency::Failed;
    }
    let domains = csp.domains();
    for (i, inst) in csp.instances().iter().enumerate() {
        let sup = supported(csp, &domains, i);
        for (role, &v) in inst.binding().iter().enumerate() {
            if !domains[v].is_subset(sup[role]) {
                return Consistency::NotConsistent;
            }
        }
    }
    Consistency::Consistent
}

/// Reference arc consistency: deletes unsupported values until none are
/// left. An empty domain leaves its instances without live rows, so every
/// variable they bind ends up empty as well.
pub fn gac_oracle(csp: &Csp) -> Csp {
    let mut domains = csp.domains();
    loop {
        let mut changed = false;
        for (i, inst) in csp.instances().iter().enumerate() {
            let sup = supported(csp, &domains, i);
            for (role, &v) in inst.binding().iter().enumerate() {
                let next = domains[v].intersection(sup[role]);
                if next != domains[v] {
                    domains[v] = next;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = csp.clone();
    out.set_domains(&domains);
    out
}
