mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rulesmith::corpus;
use rulesmith::export;
use rulesmith::format;
use rulesmith::generation::{self, RuleLibrary};
use rulesmith::oracle;
use rulesmith::propagation::{self, Consistency};
use rulesmith::rules::{self, extends, is_feasible, is_valid, premise_holds};
use rulesmith::search::{self, LabelingStrategy};
use rulesmith::table::{is_based_on, permute, restrict, restrict_to_sets};
use rulesmith::{ConstraintTable, Csp, Domain, GenConfig, Permutation, Rule, RuleKind, RuleSet, Value, ValueSet};

use common::random_csp;

/// A table over columns `v0..` with domains `0..size`, keeping the tuples
/// whose bit is set in `mask` (at least one).
fn table_from(sizes: &[usize], mask: u64) -> ConstraintTable {
    let vars: Vec<String> = (0..sizes.len()).map(|i| format!("v{i}")).collect();
    let domains: Vec<Domain> = vars
        .iter()
        .zip(sizes)
        .map(|(v, &n)| Domain::new(v, (0..n).map(|i| i.to_string())).unwrap())
        .collect();
    let total: usize = sizes.iter().product();
    let mut rows = Vec::new();
    for code in 0..total {
        if mask >> (code % 64) & 1 == 1 || (code == 0 && mask.trailing_zeros() as usize >= total) {
            let mut c = code;
            let mut row = vec![Value::from("0"); sizes.len()];
            for i in (0..sizes.len()).rev() {
                row[i] = Value::from((c % sizes[i]).to_string());
                c /= sizes[i];
            }
            rows.push(row);
        }
    }
    rows.sort();
    rows.dedup();
    ConstraintTable::new("t", vars, domains, rows).unwrap()
}

fn small_table() -> impl Strategy<Value = ConstraintTable> {
    (1usize..=3)
        .prop_flat_map(|n| (prop::collection::vec(1usize..=4, n), any::<u64>()))
        .prop_map(|(sizes, mask)| table_from(&sizes, mask))
}

fn table_with_perms() -> impl Strategy<Value = (ConstraintTable, Vec<usize>, Vec<usize>)> {
    (1usize..=4)
        .prop_flat_map(|n| {
            let idx: Vec<usize> = (0..n).collect();
            (
                prop::collection::vec(1usize..=3, n),
                any::<u64>(),
                Just(idx.clone()).prop_shuffle(),
                Just(idx).prop_shuffle(),
            )
        })
        .prop_map(|(sizes, mask, p, r)| (table_from(&sizes, mask), p, r))
}

fn kind() -> impl Strategy<Value = RuleKind> {
    prop_oneof![Just(RuleKind::Equality), Just(RuleKind::Membership)]
}

/// Nonempty subsets per column, drawn from `bits`.
fn subsets(t: &ConstraintTable, bits: u64) -> Vec<ValueSet> {
    t.domains()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let s = ValueSet::from_bits((bits >> (8 * i)) & d.all().bits());
            if s.is_empty() {
                ValueSet::singleton(0)
            } else {
                s
            }
        })
        .collect()
}

fn rules_for(t: &ConstraintTable, k: RuleKind) -> RuleSet {
    generation::generate(t, &GenConfig::new(k)).unwrap()
}

fn csp_pool() -> Vec<Arc<ConstraintTable>> {
    ["and", "or", "xor", "not", "and3", "equiv", "msign", "fork", "t", "line", "arrow", "l", "nonarc", "full_adder"]
        .iter()
        .map(|n| corpus::shared(n).unwrap())
        .collect()
}

fn boolean_pool() -> Vec<Arc<ConstraintTable>> {
    ["and", "or", "xor", "not", "full_adder"]
        .iter()
        .map(|n| corpus::shared(n).unwrap())
        .collect()
}

fn seeded_csp(seed: u64, pool: &[Arc<ConstraintTable>]) -> Csp {
    random_csp(&mut ChaCha8Rng::seed_from_u64(seed), pool, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn permute_composes((t, p, r) in table_with_perms()) {
        let pi = Permutation::new(p).unwrap();
        let rho = Permutation::new(r).unwrap();
        let twice = permute(&permute(&t, &pi).unwrap(), &rho).unwrap();
        prop_assert_eq!(twice, permute(&t, &rho.compose(&pi)).unwrap());
        prop_assert_eq!(permute(&t, &Permutation::identity(t.arity())).unwrap(), t.clone());
        prop_assert_eq!(permute(&permute(&t, &pi).unwrap(), &pi.inverse()).unwrap(), t);
    }

    #[test]
    fn restrict_is_idempotent_and_based_on(t in small_table(), bits in any::<u64>()) {
        let sets = subsets(&t, bits);
        let doms: Vec<Domain> = t.domains().iter().zip(&sets).map(|(d, &s)| d.subdomain(s)).collect();
        let once = restrict(&t, &doms).unwrap();
        prop_assert_eq!(restrict(&once, &doms).unwrap(), once.clone());
        prop_assert!(is_based_on(&once, &t).unwrap());
        prop_assert_eq!(restrict_to_sets(&t, &sets).len(), once.len());
    }

    #[test]
    fn table_text_round_trips(t in small_table()) {
        let text = format::print_table(&t);
        let back = format::parse_tables(&text, "t.ct").unwrap();
        prop_assert_eq!(back, vec![t]);
    }

    #[test]
    fn materialize_identity(t in small_table()) {
        let t = Arc::new(t);
        let mut csp = Csp::new();
        for (v, d) in t.vars().iter().zip(t.domains()) {
            csp.add_var(v, d.clone()).unwrap();
        }
        csp.add_instance(t.clone(), t.vars()).unwrap();
        prop_assert_eq!(&csp.materialize(t.vars(), "t").unwrap(), t.as_ref());
    }

    #[test]
    fn solutions_shrink_with_domains(seed in any::<u64>(), var in any::<prop::sample::Index>(), drop in any::<prop::sample::Index>()) {
        let csp = seeded_csp(seed, &csp_pool());
        let mut domains = csp.domains();
        let v = var.index(domains.len());
        let vals: Vec<usize> = domains[v].iter().collect();
        domains[v].remove(vals[drop.index(vals.len())]);
        let mut smaller = csp.clone();
        smaller.set_domains(&domains);
        let all = csp.solutions();
        for s in smaller.solutions() {
            prop_assert!(all.contains(&s));
        }
    }

    #[test]
    fn generated_rules_are_sound_and_minimal(t in small_table(), k in kind()) {
        let rs = rules_for(&t, k);
        for r in rs.rules() {
            prop_assert!(is_valid(r, &t));
            prop_assert!(is_feasible(r, &t));
            for other in rs.rules() {
                if other != r && other.conclusion == r.conclusion {
                    prop_assert!(!extends(r, other).unwrap());
                }
            }
        }
        let brute = oracle::minimal_valid_rules(&t, k, None);
        prop_assert_eq!(rs.rules(), brute.rules());
    }

    #[test]
    fn extending_a_valid_rule_keeps_it_valid(t in small_table(), k in kind(), pick in any::<prop::sample::Index>(), bits in any::<u64>()) {
        let rs = rules_for(&t, k);
        prop_assume!(!rs.is_empty());
        let r = &rs.rules()[pick.index(rs.len())];
        let sets = subsets(&t, bits);
        for (x, &s) in sets.iter().enumerate() {
            if x == r.conclusion.0 || r.premise.iter().any(|&(v, _)| v == x) {
                continue;
            }
            let set = match k {
                RuleKind::Equality => ValueSet::singleton(s.first().unwrap()),
                RuleKind::Membership => s,
            };
            let mut premise = r.premise.clone();
            premise.push((x, set));
            let wider = Rule::new(k, premise, r.conclusion).unwrap();
            prop_assert!(extends(&wider, r).unwrap());
            prop_assert!(is_valid(&wider, &t));
        }
        if k == RuleKind::Membership {
            let shrunk: Vec<(usize, ValueSet)> = r
                .premise
                .iter()
                .map(|&(v, s)| (v, ValueSet::singleton(s.first().unwrap())))
                .collect();
            prop_assert!(is_valid(&Rule::membership(shrunk, r.conclusion).unwrap(), &t));
        }
    }

    #[test]
    fn infeasible_rules_are_valid(t in small_table(), k in kind(), bits in any::<u64>(), y in any::<prop::sample::Index>()) {
        prop_assume!(t.arity() >= 2);
        let sets = subsets(&t, bits);
        let y = y.index(t.arity());
        let premise: Vec<(usize, ValueSet)> = (0..t.arity())
            .filter(|&x| x != y)
            .map(|x| match k {
                RuleKind::Equality => (x, ValueSet::singleton(sets[x].first().unwrap())),
                RuleKind::Membership => (x, sets[x]),
            })
            .collect();
        for a in 0..t.domain(y).len() {
            let r = Rule::new(k, premise.clone(), (y, a)).unwrap();
            if !is_feasible(&r, &t) {
                prop_assert!(is_valid(&r, &t));
            }
        }
    }

    #[test]
    fn extends_is_a_partial_order(t in small_table(), k in kind()) {
        let rs = oracle_space(&t, k);
        for a in &rs {
            prop_assert!(extends(a, a).unwrap());
            for b in rs.iter().filter(|b| b.conclusion == a.conclusion) {
                let ab = extends(a, b).unwrap();
                if ab && extends(b, a).unwrap() {
                    prop_assert_eq!(a, b);
                }
                if !ab {
                    continue;
                }
                for c in rs.iter().filter(|c| c.conclusion == a.conclusion) {
                    if extends(b, c).unwrap() {
                        prop_assert!(extends(a, c).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn equality_rule_as_membership_agrees(t in small_table()) {
        let rs = rules_for(&t, RuleKind::Equality);
        for r in rs.rules() {
            let m = r.as_membership();
            prop_assert_eq!(is_valid(r, &t), is_valid(&m, &t));
            prop_assert_eq!(is_feasible(r, &t), is_feasible(&m, &t));
            for row in t.rows() {
                prop_assert_eq!(premise_holds(r, row), premise_holds(&m, row));
            }
        }
    }

    #[test]
    fn rules_text_and_chr_round_trip(t in small_table(), k in kind()) {
        let rs = rules_for(&t, k);
        let text = export::print_rules(&rs, &t);
        let back = export::parse_rules_for(&text, "t.rules", &t).unwrap();
        prop_assert_eq!(back.rules(), rs.rules());
        let chr = export::to_chr(&rs, &t);
        let rule_lines = chr.lines().filter(|l| l.contains("==>")).count();
        prop_assert_eq!(rule_lines, rs.grouped_len());
        let extra = usize::from(chr.contains(export::CHR_IN_DEFINITION));
        prop_assert_eq!(chr.lines().count(), rs.grouped_len() + 1 + extra);
    }

    #[test]
    fn chr_is_injective(t in small_table(), k in kind(), drop in any::<prop::sample::Index>()) {
        let rs = rules_for(&t, k);
        prop_assume!(!rs.is_empty());
        let mut fewer = rs.rules().to_vec();
        fewer.remove(drop.index(fewer.len()));
        let other = RuleSet::new(t.name(), k, fewer);
        prop_assert_ne!(export::to_chr(&rs, &t), export::to_chr(&other, &t));
    }

    #[test]
    fn generation_is_deterministic_across_pools(t in small_table(), k in kind()) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| rules_for(&t, k));
        let parallel = rules_for(&t, k);
        prop_assert_eq!(export::print_rules(&single, &t), export::print_rules(&parallel, &t));
    }
}

/// Every well-formed rule over `t` of kind `k` whose membership sets stay
/// within the columns; used where an exhaustive rule space is needed.
fn oracle_space(t: &ConstraintTable, k: RuleKind) -> Vec<Rule> {
    let n = t.arity();
    let mut out = Vec::new();
    for y in 0..n {
        for a in 0..t.domain(y).len() {
            let others: Vec<usize> = (0..n).filter(|&x| x != y).collect();
            for mask in 0..(1u32 << others.len()) {
                let vars: Vec<usize> = others.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect();
                let mut premises: Vec<Vec<(usize, ValueSet)>> = vec![Vec::new()];
                for &x in &vars {
                    let choices: Vec<ValueSet> = match k {
                        RuleKind::Equality => t.column(x).iter().map(ValueSet::singleton).collect(),
                        RuleKind::Membership => t.column(x).nonempty_subsets().collect(),
                    };
                    premises = premises
                        .into_iter()
                        .flat_map(|p| {
                            choices.iter().map(move |&s| {
                                let mut q = p.clone();
                                q.push((x, s));
                                q
                            })
                        })
                        .collect();
                }
                for p in premises {
                    out.push(Rule::new(k, p, (y, a)).unwrap());
                }
            }
        }
    }
    // keep the pairwise checks affordable
    out.truncate(200);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn propagation_steps_remove_one_value_each(seed in any::<u64>(), k in kind()) {
        let csp = seeded_csp(seed, &csp_pool());
        let lib = RuleLibrary::new();
        let rules = propagation::instantiate_kind(&csp, &lib, k).unwrap();
        let (closed, trace) = propagation::propagate(&csp, &rules);
        let total: usize = csp.domains().iter().map(|d| d.len()).sum();
        prop_assert!(trace.len() <= total);
        let mut domains = csp.domains();
        for s in &trace.steps {
            prop_assert!(rules[s.rule].fires(&domains));
            prop_assert!(domains[s.var].remove(s.value));
        }
        prop_assert_eq!(domains, closed.domains());
        prop_assert!(propagation::is_closed(&closed, &rules));
    }

    #[test]
    fn membership_consistency_is_arc_consistency(seed in any::<u64>()) {
        let csp = seeded_csp(seed, &csp_pool());
        let lib = RuleLibrary::new();
        for p in [csp.clone(), propagation::gac_oracle(&csp)] {
            let mem = propagation::check_membership_rule_consistent(&p, &lib).unwrap();
            let arc = propagation::check_arc_consistent(&p);
            prop_assert_eq!(mem, arc);
            if arc == Consistency::Consistent {
                prop_assert_eq!(propagation::check_rule_consistent(&p, &lib).unwrap(), Consistency::Consistent);
            }
        }
    }

    #[test]
    fn boolean_rule_consistency_is_arc_consistency(seed in any::<u64>()) {
        let csp = seeded_csp(seed, &boolean_pool());
        let lib = RuleLibrary::new();
        let rules = propagation::instantiate_kind(&csp, &lib, RuleKind::Equality).unwrap();
        let closed = propagation::propagate(&csp, &rules).0;
        for p in [csp, closed] {
            prop_assert_eq!(
                propagation::check_rule_consistent(&p, &lib).unwrap(),
                propagation::check_arc_consistent(&p)
            );
        }
    }

    #[test]
    fn solutions_ignore_strategy_and_rule_kind(seed in any::<u64>()) {
        let csp = seeded_csp(seed, &csp_pool());
        let lib = RuleLibrary::new();
        let mut want = csp.solutions();
        want.sort();
        for k in [RuleKind::Equality, RuleKind::Membership] {
            let rules = propagation::instantiate_kind(&csp, &lib, k).unwrap();
            for s in [LabelingStrategy::Declaration, LabelingStrategy::SmallestDomain] {
                let mut got = search::solve(&csp, &rules, s, None);
                got.sort();
                prop_assert_eq!(&got, &want);
            }
        }
    }

    #[test]
    fn membership_search_nodes_are_arc_consistent(seed in any::<u64>()) {
        let csp = seeded_csp(seed, &csp_pool());
        let lib = RuleLibrary::new();
        let rules = propagation::instantiate_kind(&csp, &lib, RuleKind::Membership).unwrap();
        let mut bad = 0;
        search::solve_with_observer(&csp, &rules, LabelingStrategy::SmallestDomain, None, &mut |before, after| {
            let mut node = csp.clone();
            node.set_domains(before);
            let gac = propagation::gac_oracle(&node);
            let failed = after.iter().any(|d| d.is_empty());
            if failed != gac.is_failed() || (!failed && gac.domains() != after) {
                bad += 1;
            }
        });
        prop_assert_eq!(bad, 0);
    }

    #[test]
    fn membership_prunes_at_least_as_much(seed in any::<u64>()) {
        let csp = seeded_csp(seed, &csp_pool());
        let lib = RuleLibrary::new();
        let close = |k| {
            let rules = propagation::instantiate_kind(&csp, &lib, k).unwrap();
            propagation::propagate(&csp, &rules).0
        };
        let (mem, eq) = (close(RuleKind::Membership), close(RuleKind::Equality));
        prop_assert!(mem.is_failed() || mem.domains().iter().zip(eq.domains()).all(|(m, e)| m.is_subset(e)));
    }
}

#[test]
fn corpus_closure_under_valid_rules() {
    // a table is closed under each of its own minimal valid rules
    for name in ["and", "fork", "msign", "equiv", "and3"] {
        let t = corpus::table(name).unwrap();
        for k in [RuleKind::Equality, RuleKind::Membership] {
            for r in rules_for(&t, k).rules() {
                assert!(rules::is_closed_under(&t, r, &t).unwrap(), "{name}");
            }
        }
    }
}
