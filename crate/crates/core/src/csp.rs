//! CSPs: variables with current domains plus table-constraint instances.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::table::{ConstraintTable, IndexTuple};
use crate::value::{Domain, Value, ValueSet};

/// A CSP variable. `universe` is its declared domain and fixes the value
/// positions; `current` is the live subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub universe: Domain,
    pub current: ValueSet,
}

/// One use of a base table. Role `i` of the table is played by CSP variable
/// `binding[i]`.
#[derive(Clone, Debug)]
pub struct ConstraintInstance {
    table: Arc<ConstraintTable>,
    binding: Vec<usize>,
    // per role: CSP value position -> table value position
    to_table: Vec<Vec<u8>>,
    // per role: table value position -> CSP value position
    to_csp: Vec<Vec<Option<u8>>>,
}

impl ConstraintInstance {
    pub fn table(&self) -> &Arc<ConstraintTable> {
        &self.table
    }

    pub fn binding(&self) -> &[usize] {
        &self.binding
    }

    /// Table position of CSP value `pos` for role `role`.
    pub fn table_pos(&self, role: usize, pos: usize) -> usize {
        self.to_table[role][pos] as usize
    }

    /// CSP position of table value `pos` for role `role`, if the CSP
    /// variable's universe contains it.
    pub fn csp_pos(&self, role: usize, pos: usize) -> Option<usize> {
        self.to_csp[role][pos].map(usize::from)
    }

    /// Translates a set of table positions for `role` into CSP positions.
    pub fn to_csp_set(&self, role: usize, set: ValueSet) -> ValueSet {
        set.iter().filter_map(|p| self.csp_pos(role, p)).collect()
    }

    /// Translates a set of CSP positions for `role` into table positions.
    pub fn to_table_set(&self, role: usize, set: ValueSet) -> ValueSet {
        set.iter().map(|p| self.table_pos(role, p)).collect()
    }

    /// Whether a full CSP assignment (positions) satisfies this instance.
    pub fn accepts(&self, assignment: &[usize]) -> bool {
        let row: IndexTuple = self
            .binding
            .iter()
            .enumerate()
            .map(|(role, &v)| self.to_table[role][assignment[v]])
            .collect();
        self.table.contains_row(&row)
    }

    /// Base rows that lie inside the current domains, i.e. the tuples of the
    /// instance's induced relation.
    pub fn live_rows<'a>(&'a self, domains: &'a [ValueSet]) -> impl Iterator<Item = &'a IndexTuple> {
        let allowed: Vec<ValueSet> = self
            .binding
            .iter()
            .enumerate()
            .map(|(role, &v)| self.to_table_set(role, domains[v]))
            .collect();
        self.table
            .rows()
            .iter()
            .filter(move |r| r.iter().enumerate().all(|(i, &p)| allowed[i].contains(p as usize)))
    }
}

#[derive(Clone, Debug, Default)]
pub struct Csp {
    vars: Vec<Variable>,
    instances: Vec<ConstraintInstance>,
    names: HashMap<String, usize>,
}

impl Csp {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable with the given domain as both universe and
    /// current domain.
    pub fn add_var(&mut self, name: &str, domain: Domain) -> Result<usize> {
        if self.names.contains_key(name) {
            return Err(Error::RepeatedVariable(name.to_string()));
        }
        let idx = self.vars.len();
        self.vars.push(Variable {
            name: name.to_string(),
            current: domain.all(),
            universe: domain,
        });
        self.names.insert(name.to_string(), idx);
        Ok(idx)
    }

    /// Binds `table` to the named variables, role by role.
    ///
    /// Every value in a bound variable's universe must belong to the table's
    /// domain for that role, so the instance is a restriction of the base.
    pub fn add_instance<S: AsRef<str>>(&mut self, table: Arc<ConstraintTable>, vars: &[S]) -> Result<usize> {
        if vars.len() != table.arity() {
            return Err(Error::ArityMismatch {
                expected: table.arity(),
                found: vars.len(),
            });
        }
        let binding = vars
            .iter()
            .map(|v| self.var_index(v.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = BTreeSet::new();
        for &b in &binding {
            if !seen.insert(b) {
                return Err(Error::RepeatedVariable(self.vars[b].name.clone()));
            }
        }
        let mut to_table = Vec::new();
        let mut to_csp = Vec::new();
        for (role, &v) in binding.iter().enumerate() {
            let var = &self.vars[v];
            let tdom = table.domain(role);
            let mut fwd = Vec::with_capacity(var.universe.len());
            let mut back = vec![None; tdom.len()];
            for (p, value) in var.universe.values().iter().enumerate() {
                let tp = tdom.index_of(value).ok_or_else(|| Error::ValueOutsideDomain {
                    var: format!("{}.{}", table.name(), table.vars()[role]),
                    value: value.to_string(),
                })?;
                fwd.push(tp as u8);
                back[tp] = Some(p as u8);
            }
            to_table.push(fwd);
            to_csp.push(back);
        }
        self.instances.push(ConstraintInstance {
            table,
            binding,
            to_table,
            to_csp,
        });
        Ok(self.instances.len() - 1)
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, idx: usize) -> &Variable {
        &self.vars[idx]
    }

    pub fn instances(&self) -> &[ConstraintInstance] {
        &self.instances
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn var_names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn domains(&self) -> Vec<ValueSet> {
        self.vars.iter().map(|v| v.current).collect()
    }

    pub fn set_domains(&mut self, domains: &[ValueSet]) {
        for (v, &d) in self.vars.iter_mut().zip(domains) {
            v.current = d.intersection(v.universe.all());
        }
    }

    /// Replaces the current domain of `var` with the given values.
    pub fn restrict_var(&mut self, name: &str, values: &[Value]) -> Result<()> {
        let idx = self.var_index(name)?;
        let var = &mut self.vars[idx];
        var.current = var.universe.set_of(name, values)?;
        Ok(())
    }

    /// Current values of `var`, in declaration order.
    pub fn current_values(&self, idx: usize) -> Vec<Value> {
        let v = &self.vars[idx];
        v.universe.values_of(v.current)
    }

    pub fn is_failed(&self) -> bool {
        self.vars.iter().any(|v| v.current.is_empty())
    }

    /// Renders a position assignment as values.
    pub fn values_of(&self, assignment: &[usize]) -> Vec<Value> {
        assignment
            .iter()
            .enumerate()
            .map(|(i, &p)| self.vars[i].universe.value(p).clone())
            .collect()
    }

    /// All solutions, by exhaustive enumeration of the current domains in
    /// declaration order. Each instance is checked as soon as all of its
    /// variables are assigned.
    pub fn solution_positions(&self) -> Vec<Vec<usize>> {
        let n = self.vars.len();
        if self.is_failed() {
            return Vec::new();
        }
        // instances become checkable at the depth of their last variable
        let mut checks: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, inst) in self.instances.iter().enumerate() {
            if let Some(&last) = inst.binding.iter().max() {
                checks[last].push(i);
            }
        }
        let choices: Vec<Vec<usize>> = self.vars.iter().map(|v| v.current.iter().collect()).collect();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut assignment = vec![0usize; n];
        let mut cursor = vec![0usize; n];
        let mut depth = 0usize;
        loop {
            if cursor[depth] == choices[depth].len() {
                if depth == 0 {
                    break;
                }
                cursor[depth] = 0;
                depth -= 1;
                cursor[depth] += 1;
                continue;
            }
            assignment[depth] = choices[depth][cursor[depth]];
            let ok = checks[depth]
                .iter()
                .all(|&i| self.instances[i].accepts(&assignment));
            if !ok {
                cursor[depth] += 1;
            } else if depth + 1 == n {
                out.push(assignment.clone());
                cursor[depth] += 1;
            } else {
                depth += 1;
            }
        }
        out
    }

    pub fn solutions(&self) -> Vec<Vec<Value>> {
        self.solution_positions()
            .iter()
            .map(|s| self.values_of(s))
            .collect()
    }

    /// Builds a table over `interface` from the projections of all
    /// solutions. Domains are the variables' declared universes.
    pub fn materialize<S: AsRef<str>>(&self, interface: &[S], name: &str) -> Result<ConstraintTable> {
        if interface.is_empty() {
            return Err(Error::EmptyInterface);
        }
        let idx = interface
            .iter()
            .map(|v| self.var_index(v.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let vars = idx.iter().map(|&i| self.vars[i].name.clone()).collect::<Vec<_>>();
        if let Some(dup) = vars.iter().enumerate().find(|(i, v)| vars[..*i].contains(v)) {
            return Err(Error::RepeatedVariable(dup.1.clone()));
        }
        let domains = idx.iter().map(|&i| self.vars[i].universe.clone()).collect();
        let rows = self
            .solution_positions()
            .iter()
            .map(|s| idx.iter().map(|&i| s[i] as u8).collect::<IndexTuple>())
            .collect();
        Ok(ConstraintTable::from_rows_dedup(name.to_string(), vars, domains, rows))
    }
}

/// Same solution sets over the same variable sequence.
pub fn csp_equivalent(p1: &Csp, p2: &Csp) -> Result<bool> {
    if p1.var_names() != p2.var_names() {
        return Err(Error::VariableMismatch);
    }
    let a: BTreeSet<Vec<Value>> = p1.solutions().into_iter().collect();
    let b: BTreeSet<Vec<Value>> = p2.solutions().into_iter().collect();
    Ok(a == b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bool_dom(var: &str) -> Domain {
        Domain::new(var, ["0", "1"]).unwrap()
    }

    fn and() -> Arc<ConstraintTable> {
        let rows = [["0", "0", "0"], ["0", "1", "0"], ["1", "0", "0"], ["1", "1", "1"]];
        Arc::new(
            ConstraintTable::new(
                "and",
                vec!["x".into(), "y".into(), "z".into()],
                vec![bool_dom("x"), bool_dom("y"), bool_dom("z")],
                rows.iter().map(|r| r.iter().map(|&v| Value::from(v)).collect::<Vec<_>>()),
            )
            .unwrap(),
        )
    }

    fn and_csp(x: &[&str], y: &[&str], z: &[&str]) -> Csp {
        let mut csp = Csp::new();
        for (name, vals) in [("x", x), ("y", y), ("z", z)] {
            csp.add_var(name, bool_dom(name)).unwrap();
            let vals: Vec<Value> = vals.iter().map(|&v| v.into()).collect();
            csp.restrict_var(name, &vals).unwrap();
        }
        csp.add_instance(and(), &["x", "y", "z"]).unwrap();
        csp
    }

    #[test]
    fn solutions_of_fixed_inputs() {
        let csp = and_csp(&["1"], &["1"], &["0", "1"]);
        let sols = csp.solutions();
        assert_eq!(sols, vec![vec![Value::from("1"), "1".into(), "1".into()]]);
    }

    #[test]
    fn solutions_without_constraints() {
        let mut csp = Csp::new();
        csp.add_var("x", bool_dom("x")).unwrap();
        assert_eq!(csp.solutions(), vec![vec![Value::from("0")], vec![Value::from("1")]]);
    }

    #[test]
    fn equivalence() {
        let a = and_csp(&["1"], &["1"], &["0", "1"]);
        let b = and_csp(&["1"], &["1"], &["1"]);
        assert!(csp_equivalent(&a, &a).unwrap());
        assert!(csp_equivalent(&a, &b).unwrap());
        let mut other = Csp::new();
        other.add_var("w", bool_dom("w")).unwrap();
        assert!(matches!(csp_equivalent(&a, &other), Err(Error::VariableMismatch)));
    }

    #[test]
    fn materialize_identity() {
        let csp = and_csp(&["0", "1"], &["0", "1"], &["0", "1"]);
        let t = csp.materialize(&["x", "y", "z"], "and").unwrap();
        assert_eq!(&t, and().as_ref());
        assert!(matches!(
            csp.materialize::<&str>(&[], "e"),
            Err(Error::EmptyInterface)
        ));
    }

    #[test]
    fn binding_checks() {
        let mut csp = Csp::new();
        csp.add_var("a", bool_dom("a")).unwrap();
        csp.add_var("b", bool_dom("b")).unwrap();
        assert!(matches!(
            csp.add_instance(and(), &["a", "b"]),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            csp.add_instance(and(), &["a", "b", "a"]),
            Err(Error::RepeatedVariable(_))
        ));
        assert!(matches!(
            csp.add_instance(and(), &["a", "b", "c"]),
            Err(Error::UnknownVariable(_))
        ));
        csp.add_var("c", Domain::new("c", ["0", "2"]).unwrap()).unwrap();
        assert!(matches!(
            csp.add_instance(and(), &["a", "b", "c"]),
            Err(Error::ValueOutsideDomain { .. })
        ));
    }

    #[test]
    fn failed_csp_has_no_solutions() {
        let mut csp = and_csp(&["0", "1"], &["0", "1"], &["0", "1"]);
        csp.restrict_var("z", &[]).unwrap();
        assert!(csp.is_failed());
        assert!(csp.solutions().is_empty());
    }
}
