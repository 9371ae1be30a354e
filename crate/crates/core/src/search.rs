//! Complete solving: rule propagation interleaved with binary labeling.

use std::str::FromStr;

use crate::csp::Csp;
use crate::propagation::{Propagator, RuleInstance};
use crate::value::{Value, ValueSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LabelingStrategy {
    /// First unfixed variable in declaration order.
    #[default]
    Declaration,
    /// Unfixed variable with the fewest values, ties by declaration order.
    SmallestDomain,
}

impl FromStr for LabelingStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "declaration" | "decl" => Ok(LabelingStrategy::Declaration),
            "smallest" | "smallest-domain" | "ff" => Ok(LabelingStrategy::SmallestDomain),
            _ => Err(format!("unknown labeling strategy `{s}`")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Search nodes, the root included.
    pub nodes: usize,
    /// Domain splits performed.
    pub splits: usize,
    /// Nodes where propagation emptied a domain or a leaf failed its check.
    pub failures: usize,
    /// Values removed by rule applications over the whole search.
    pub prunes: usize,
    pub solutions: usize,
    /// Domains after propagating at the root.
    pub root_domains: Vec<ValueSet>,
}

impl SearchStats {
    /// No labeling was needed.
    pub fn solved_by_propagation(&self) -> bool {
        self.splits == 0
    }

    pub fn root_failed(&self) -> bool {
        self.root_domains.iter().any(|d| d.is_empty())
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchOutcome {
    /// Value positions per variable, in the order found.
    pub solutions: Vec<Vec<usize>>,
    pub stats: SearchStats,
}

/// All solutions (or the first `limit`), as values in declaration order.
pub fn solve(
    csp: &Csp,
    rules: &[RuleInstance],
    strategy: LabelingStrategy,
    limit: Option<usize>,
) -> Vec<Vec<Value>> {
    solve_report(csp, rules, strategy, limit)
        .solutions
        .iter()
        .map(|s| csp.values_of(s))
        .collect()
}

pub fn solve_report(
    csp: &Csp,
    rules: &[RuleInstance],
    strategy: LabelingStrategy,
    limit: Option<usize>,
) -> SearchOutcome {
    solve_with_observer(csp, rules, strategy, limit, &mut |_, _| {})
}

/// Like [`solve_report`], calling `observer(before, after)` with the domains
/// before and after propagation at every node.
pub fn solve_with_observer(
    csp: &Csp,
    rules: &[RuleInstance],
    strategy: LabelingStrategy,
    limit: Option<usize>,
    observer: &mut dyn FnMut(&[ValueSet], &[ValueSet]),
) -> SearchOutcome {
    let prop = Propagator::new(csp.vars().len(), rules);
    let mut out = SearchOutcome::default();
    if limit == Some(0) {
        return out;
    }
    // (domains, variable changed by the split that produced this node)
    let mut stack: Vec<(Vec<ValueSet>, Option<usize>)> = vec![(csp.domains(), None)];
    while let Some((mut domains, changed)) = stack.pop() {
        out.stats.nodes += 1;
        let before = domains.clone();
        out.stats.prunes += match changed {
            None => prop.run(&mut domains, None),
            Some(v) => prop.run_after_change(&mut domains, v, None),
        };
        observer(&before, &domains);
        if changed.is_none() {
            out.stats.root_domains = domains.clone();
        }
        if domains.iter().any(|d| d.is_empty()) {
            out.stats.failures += 1;
            continue;
        }
        let Some(var) = pick(&domains, strategy) else {
            let assignment: Vec<usize> = domains.iter().map(|d| d.first().unwrap_or(0)).collect();
            if csp.instances().iter().all(|i| i.accepts(&assignment)) {
                out.solutions.push(assignment);
                out.stats.solutions += 1;
                if limit.is_some_and(|l| out.solutions.len() >= l) {
                    break;
                }
            } else {
                out.stats.failures += 1;
            }
            continue;
        };
        out.stats.splits += 1;
        let v = domains[var].first().expect("non-empty domain");
        let mut rest = domains.clone();
        rest[var].remove(v);
        domains[var] = ValueSet::singleton(v);
        stack.push((rest, Some(var)));
        stack.push((domains, Some(var)));
    }
    out
}

fn pick(domains: &[ValueSet], strategy: LabelingStrategy) -> Option<usize> {
    let open = domains.iter().enumerate().filter(|(_, d)| d.len() > 1);
    match strategy {
        LabelingStrategy::Declaration => open.map(|(i, _)| i).next(),
        LabelingStrategy::SmallestDomain => open.min_by_key(|(i, d)| (d.len(), *i)).map(|(i, _)| i),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::RuleLibrary;
    use crate::propagation::instantiate_kind;
    use crate::rules::RuleKind;
    use crate::table::ConstraintTable;
    use crate::value::Domain;
    use std::sync::Arc;

    fn xor_chain() -> Csp {
        let vals = |s: &str| s.split_whitespace().map(Value::from).collect::<Vec<_>>();
        let vars: Vec<String> = ["x", "y", "z"].map(String::from).to_vec();
        let domains = vars.iter().map(|v| Domain::new(v, vals("0 1")).unwrap()).collect();
        let xor = Arc::new(
            ConstraintTable::new("xor", vars, domains, ["0 0 0", "0 1 1", "1 0 1", "1 1 0"].map(vals))
                .unwrap(),
        );
        let mut csp = Csp::new();
        for v in ["a", "b", "c", "d", "e"] {
            csp.add_var(v, Domain::new(v, vals("0 1")).unwrap()).unwrap();
        }
        csp.add_instance(xor.clone(), &["a", "b", "c"]).unwrap();
        csp.add_instance(xor, &["c", "d", "e"]).unwrap();
        csp
    }

    #[test]
    fn matches_brute_force() {
        let csp = xor_chain();
        let lib = RuleLibrary::new();
        let want = csp.solutions();
        for kind in [RuleKind::Equality, RuleKind::Membership] {
            let rules = instantiate_kind(&csp, &lib, kind).unwrap();
            for strat in [LabelingStrategy::Declaration, LabelingStrategy::SmallestDomain] {
                let mut got = solve(&csp, &rules, strat, None);
                got.sort();
                assert_eq!(got, want);
            }
        }
        assert_eq!(solve(&csp, &[], LabelingStrategy::Declaration, None), want);
    }

    #[test]
    fn limit_and_failure() {
        let mut csp = xor_chain();
        assert_eq!(solve(&csp, &[], LabelingStrategy::Declaration, Some(3)).len(), 3);
        assert!(solve(&csp, &[], LabelingStrategy::Declaration, Some(0)).is_empty());
        csp.restrict_var("a", &[]).unwrap();
        let out = solve_report(&csp, &[], LabelingStrategy::Declaration, None);
        assert!(out.solutions.is_empty());
        assert!(out.stats.root_failed());
    }
}
