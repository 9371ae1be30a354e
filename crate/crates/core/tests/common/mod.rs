#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rulesmith::{ConstraintTable, Csp, Domain, Value, ValueSet};

/// A random table with the given arity and per-column domain sizes.
pub fn random_table<R: Rng>(rng: &mut R, name: &str, arity: usize, max_dom: usize) -> ConstraintTable {
    let vars: Vec<String> = (0..arity).map(|i| format!("v{i}")).collect();
    let sizes: Vec<usize> = (0..arity).map(|_| rng.gen_range(1..=max_dom)).collect();
    let domains: Vec<Domain> = vars
        .iter()
        .zip(&sizes)
        .map(|(v, &n)| Domain::new(v, (0..n).map(|i| i.to_string())).unwrap())
        .collect();
    let total: usize = sizes.iter().product();
    let density = rng.gen_range(0.15..0.9);
    let mut rows: Vec<Vec<Value>> = Vec::new();
    for code in 0..total {
        if rng.gen_bool(density) {
            rows.push(decode(code, &sizes));
        }
    }
    if rows.is_empty() {
        rows.push(decode(rng.gen_range(0..total), &sizes));
    }
    ConstraintTable::new(name, vars, domains, rows).unwrap()
}

fn decode(mut code: usize, sizes: &[usize]) -> Vec<Value> {
    let mut out = vec![Value::from("0"); sizes.len()];
    for i in (0..sizes.len()).rev() {
        out[i] = Value::from((code % sizes[i]).to_string());
        code /= sizes[i];
    }
    out
}

/// A random CSP built from instances of `pool`. Positions are shared between
/// instances when their declared domains agree, and every variable gets a
/// random nonempty subdomain.
pub fn random_csp<R: Rng>(rng: &mut R, pool: &[Arc<ConstraintTable>], max_instances: usize) -> Csp {
    let mut csp = Csp::new();
    let mut universes: Vec<Vec<Value>> = Vec::new();
    let n = rng.gen_range(1..=max_instances);
    for _ in 0..n {
        let t = pool.choose(rng).unwrap().clone();
        let mut binding: Vec<String> = Vec::new();
        for pos in 0..t.arity() {
            let want = t.domain(pos).values();
            let reusable: Vec<usize> = (0..universes.len())
                .filter(|&i| universes[i] == want && !binding.contains(&format!("x{i}")))
                .collect();
            let idx = if !reusable.is_empty() && rng.gen_bool(0.5) {
                *reusable.choose(rng).unwrap()
            } else {
                let i = universes.len();
                csp.add_var(&format!("x{i}"), t.domain(pos).clone()).unwrap();
                universes.push(want.to_vec());
                i
            };
            binding.push(format!("x{idx}"));
        }
        csp.add_instance(t, &binding).unwrap();
    }
    let mut domains = csp.domains();
    for d in domains.iter_mut() {
        if rng.gen_bool(0.6) {
            let mut sub = ValueSet::EMPTY;
            for v in d.iter() {
                if rng.gen_bool(0.6) {
                    sub.insert(v);
                }
            }
            if sub.is_empty() {
                sub.insert(d.iter().collect::<Vec<_>>()[rng.gen_range(0..d.len())]);
            }
            *d = sub;
        }
    }
    csp.set_domains(&domains);
    csp
}

pub fn search_space(csp: &Csp) -> f64 {
    csp.domains().iter().map(|d| d.len() as f64).product()
}
