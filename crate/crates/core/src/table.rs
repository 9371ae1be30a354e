//! Extensional constraints: named tables of allowed tuples.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::value::{Domain, Value, ValueSet};

/// A tuple of value positions, one per table column.
pub type IndexTuple = Box<[u8]>;

/// A named relation over declared per-variable domains.
///
/// Tuples are stored as positions into the column domains and kept sorted,
/// so two tables with the same columns and the same relation compare equal.
#[derive(Clone)]
pub struct ConstraintTable {
    name: String,
    vars: Vec<String>,
    domains: Vec<Domain>,
    tuples: Vec<IndexTuple>,
    index: HashSet<IndexTuple>,
}

impl PartialEq for ConstraintTable {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.vars == other.vars
            && self.domains == other.domains
            && self.tuples == other.tuples
    }
}

impl Eq for ConstraintTable {}

impl fmt::Debug for ConstraintTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintTable")
            .field("name", &self.name)
            .field("vars", &self.vars)
            .field("domains", &self.domains)
            .field("tuples", &self.value_tuples().collect::<Vec<_>>())
            .finish()
    }
}

impl ConstraintTable {
    /// Builds a table from value tuples. Duplicate tuples are an error.
    pub fn new<T>(
        name: impl Into<String>,
        vars: Vec<String>,
        domains: Vec<Domain>,
        tuples: impl IntoIterator<Item = T>,
    ) -> Result<Self>
    where
        T: AsRef<[Value]>,
    {
        let name = name.into();
        check_vars(&vars)?;
        if domains.len() != vars.len() {
            return Err(Error::ArityMismatch {
                expected: vars.len(),
                found: domains.len(),
            });
        }
        let mut rows = Vec::new();
        for t in tuples {
            let t = t.as_ref();
            if t.len() != vars.len() {
                return Err(Error::TupleArity {
                    table: name.clone(),
                    tuple: render_tuple(t),
                    found: t.len(),
                    expected: vars.len(),
                });
            }
            let mut row = Vec::with_capacity(t.len());
            for (i, v) in t.iter().enumerate() {
                let pos = domains[i]
                    .index_of(v)
                    .ok_or_else(|| Error::ValueOutsideDomain {
                        var: vars[i].clone(),
                        value: v.to_string(),
                    })?;
                row.push(pos as u8);
            }
            rows.push(row.into_boxed_slice());
        }
        let table = Self::from_rows(name, vars, domains, rows)?;
        Ok(table)
    }

    /// Builds a table from position tuples. Duplicates are an error.
    pub(crate) fn from_rows(
        name: String,
        vars: Vec<String>,
        domains: Vec<Domain>,
        mut rows: Vec<IndexTuple>,
    ) -> Result<Self> {
        rows.sort();
        if let Some(w) = rows.windows(2).find(|w| w[0] == w[1]) {
            let tuple: Vec<Value> = w[0]
                .iter()
                .enumerate()
                .map(|(i, &p)| domains[i].value(p as usize).clone())
                .collect();
            return Err(Error::DuplicateTuple {
                table: name,
                tuple: render_tuple(&tuple),
            });
        }
        let index = rows.iter().cloned().collect();
        Ok(ConstraintTable {
            name,
            vars,
            domains,
            tuples: rows,
            index,
        })
    }

    /// Same as [`from_rows`](Self::from_rows) but silently merges duplicates.
    pub(crate) fn from_rows_dedup(
        name: String,
        vars: Vec<String>,
        domains: Vec<Domain>,
        mut rows: Vec<IndexTuple>,
    ) -> Self {
        rows.sort();
        rows.dedup();
        Self::from_rows(name, vars, domains, rows).expect("rows are deduplicated")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn domain(&self, var: usize) -> &Domain {
        &self.domains[var]
    }

    /// Size of the largest column domain.
    pub fn max_domain_size(&self) -> usize {
        self.domains.iter().map(Domain::len).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Position tuples, sorted.
    pub fn rows(&self) -> &[IndexTuple] {
        &self.tuples
    }

    pub fn contains_row(&self, row: &[u8]) -> bool {
        self.index.contains(row)
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        self.to_row(tuple).is_some_and(|r| self.contains_row(&r))
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn value_tuples(&self) -> impl Iterator<Item = Vec<Value>> + '_ {
        self.tuples.iter().map(|r| self.row_values(r))
    }

    pub fn row_values(&self, row: &[u8]) -> Vec<Value> {
        row.iter()
            .enumerate()
            .map(|(i, &p)| self.domains[i].value(p as usize).clone())
            .collect()
    }

    fn to_row(&self, tuple: &[Value]) -> Option<Vec<u8>> {
        if tuple.len() != self.arity() {
            return None;
        }
        tuple
            .iter()
            .enumerate()
            .map(|(i, v)| self.domains[i].index_of(v).map(|p| p as u8))
            .collect()
    }

    /// `C[x]`: the values of column `var` that occur in some tuple.
    pub fn column(&self, var: usize) -> ValueSet {
        self.tuples
            .iter()
            .map(|r| r[var] as usize)
            .collect::<ValueSet>()
    }
}

fn check_vars(vars: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for v in vars {
        if !seen.insert(v.as_str()) {
            return Err(Error::RepeatedVariable(v.clone()));
        }
    }
    Ok(())
}

pub(crate) fn render_tuple(t: &[Value]) -> String {
    let parts: Vec<&str> = t.iter().map(Value::as_str).collect();
    format!("({})", parts.join(","))
}

/// A bijection on `[0..n)`, stored as the image of each position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPermutation(n));
            }
        }
        Ok(Permutation(images))
    }

    /// From the 1-based notation `(pi(1), .., pi(n))`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        let n = images.len();
        if images.contains(&0) {
            return Err(Error::InvalidPermutation(n));
        }
        Self::new(images.iter().map(|i| i - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Permutation(inv)
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&j| self.0[j]).collect())
    }
}

/// Projects `tuple` (over `table_vars`) onto `sub`, in `sub`'s order.
pub fn project<S: AsRef<str>, T: AsRef<str>>(
    tuple: &[Value],
    table_vars: &[S],
    sub: &[T],
) -> Result<Vec<Value>> {
    if tuple.len() != table_vars.len() {
        return Err(Error::ArityMismatch {
            expected: table_vars.len(),
            found: tuple.len(),
        });
    }
    sub.iter()
        .map(|name| {
            let name = name.as_ref();
            table_vars
                .iter()
                .position(|v| v.as_ref() == name)
                .map(|i| tuple[i].clone())
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        })
        .collect()
}

/// The permuted table `C^pi`: `(a_1..a_n) ∈ C^pi` iff `(a_pi(1)..a_pi(n)) ∈ C`.
///
/// Column `j` of the result is column `pi⁻¹(j)` of the input, with its name
/// and domain.
pub fn permute(table: &ConstraintTable, pi: &Permutation) -> Result<ConstraintTable> {
    if pi.len() != table.arity() {
        return Err(Error::InvalidPermutation(table.arity()));
    }
    let inv = pi.inverse();
    let n = table.arity();
    let vars = (0..n).map(|j| table.vars[inv.apply(j)].clone()).collect();
    let domains = (0..n).map(|j| table.domains[inv.apply(j)].clone()).collect();
    let rows = table
        .tuples
        .iter()
        .map(|r| (0..n).map(|j| r[inv.apply(j)]).collect::<IndexTuple>())
        .collect();
    ConstraintTable::from_rows(table.name.clone(), vars, domains, rows)
}

/// Restricts `table` to smaller domains: `C ∩ (D'_1 × .. × D'_n)`.
///
/// The new domains keep the table's declaration order.
pub fn restrict(table: &ConstraintTable, new_domains: &[Domain]) -> Result<ConstraintTable> {
    if new_domains.len() != table.arity() {
        return Err(Error::ArityMismatch {
            expected: table.arity(),
            found: new_domains.len(),
        });
    }
    let sets = new_domains
        .iter()
        .enumerate()
        .map(|(i, d)| table.domains[i].set_of(&table.vars[i], d.values()))
        .collect::<Result<Vec<_>>>()?;
    Ok(restrict_to_sets(table, &sets))
}

/// [`restrict`] with the new domains given as position sets.
pub fn restrict_to_sets(table: &ConstraintTable, sets: &[ValueSet]) -> ConstraintTable {
    // old position -> new position, per column
    let remap: Vec<Vec<Option<u8>>> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut next = 0u8;
            (0..table.domains[i].len())
                .map(|p| {
                    s.contains(p).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        })
        .collect();
    let rows = table
        .tuples
        .iter()
        .filter_map(|r| {
            r.iter()
                .enumerate()
                .map(|(i, &p)| remap[i][p as usize])
                .collect::<Option<IndexTuple>>()
        })
        .collect();
    let domains = sets
        .iter()
        .enumerate()
        .map(|(i, &s)| table.domains[i].subdomain(s))
        .collect();
    ConstraintTable::from_rows(table.name.clone(), table.vars.clone(), domains, rows)
        .expect("a restriction of a valid table is valid")
}

/// `c` is based on `e`: each domain of `c` is contained in the corresponding
/// domain of `e`, and `c` is exactly `e` restricted to `c`'s domains.
pub fn is_based_on(c: &ConstraintTable, e: &ConstraintTable) -> Result<bool> {
    if c.arity() != e.arity() {
        return Err(Error::ArityMismatch {
            expected: e.arity(),
            found: c.arity(),
        });
    }
    let contained = c
        .domains
        .iter()
        .zip(&e.domains)
        .all(|(dc, de)| dc.values().iter().all(|v| de.contains(v)));
    if !contained {
        return Ok(false);
    }
    let restricted = restrict(e, &c.domains)?;
    let lhs: HashSet<Vec<Value>> = c.value_tuples().collect();
    let rhs: HashSet<Vec<Value>> = restricted.value_tuples().collect();
    Ok(lhs == rhs)
}

/// An atomic formula over a named variable: `x = a`, `x ≠ a` or `x ∈ S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomicFormula {
    pub var: String,
    pub kind: AtomKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Equals(Value),
    NotEquals(Value),
    MemberOf(Vec<Value>),
}

impl AtomicFormula {
    pub fn equals(var: &str, value: impl Into<Value>) -> Self {
        AtomicFormula {
            var: var.to_string(),
            kind: AtomKind::Equals(value.into()),
        }
    }

    pub fn not_equals(var: &str, value: impl Into<Value>) -> Self {
        AtomicFormula {
            var: var.to_string(),
            kind: AtomKind::NotEquals(value.into()),
        }
    }

    pub fn member_of<V: Into<Value>>(var: &str, values: impl IntoIterator<Item = V>) -> Self {
        AtomicFormula {
            var: var.to_string(),
            kind: AtomKind::MemberOf(values.into_iter().map(Into::into).collect()),
        }
    }
}

/// `⊨_d A` for a tuple `d` over `vars`.
pub fn satisfies<S: AsRef<str>>(tuple: &[Value], vars: &[S], atom: &AtomicFormula) -> Result<bool> {
    let i = vars
        .iter()
        .position(|v| v.as_ref() == atom.var)
        .ok_or_else(|| Error::UnknownVariable(atom.var.clone()))?;
    let x = tuple.get(i).ok_or(Error::ArityMismatch {
        expected: vars.len(),
        found: tuple.len(),
    })?;
    Ok(match &atom.kind {
        AtomKind::Equals(a) => x == a,
        AtomKind::NotEquals(a) => x != a,
        AtomKind::MemberOf(s) => s.contains(x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(tokens: &str) -> Vec<Value> {
        tokens.split_whitespace().map(Value::from).collect()
    }

    fn table(name: &str, vars: &str, domain: &str, rows: &[&str]) -> ConstraintTable {
        let vars: Vec<String> = vars.split_whitespace().map(String::from).collect();
        let domains = vars
            .iter()
            .map(|v| Domain::new(v, vals(domain)).unwrap())
            .collect();
        ConstraintTable::new(name, vars, domains, rows.iter().map(|r| vals(r))).unwrap()
    }

    fn and() -> ConstraintTable {
        table("and", "x y z", "0 1", &["0 0 0", "0 1 0", "1 0 0", "1 1 1"])
    }

    fn nonarc() -> ConstraintTable {
        table("c", "x y", "0 1 2", &["0 1", "1 0", "2 2"])
    }

    #[test]
    fn project_examples() {
        let v = ["x", "y", "z"];
        assert_eq!(project(&vals("0 1 0"), &v, &["z", "x"]).unwrap(), vals("0 0"));
        assert_eq!(project(&vals("l r -"), &v, &["y"]).unwrap(), vals("r"));
        assert_eq!(project(&vals("l r -"), &v, &v).unwrap(), vals("l r -"));
        assert!(matches!(
            project(&vals("0 1 0"), &v, &["w"]),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn permute_identity_and_t_junction() {
        let and = and();
        assert_eq!(permute(&and, &Permutation::identity(3)).unwrap(), and);

        let t = table("t", "x y z", "+ - l r", &["r l +", "r l -", "r l r", "r l l"]);
        let p = permute(&t, &Permutation::from_one_based(&[3, 2, 1]).unwrap()).unwrap();
        let mut got: Vec<Vec<Value>> = p.value_tuples().collect();
        got.sort();
        let mut want = vec![vals("+ l r"), vals("- l r"), vals("r l r"), vals("l l r")];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(p.vars(), &["z", "y", "x"]);
    }

    #[test]
    fn permute_line_swap_is_same_relation() {
        let line = table("line", "x y", "+ - l r", &["+ +", "- -", "l r", "r l"]);
        let swapped = permute(&line, &Permutation::new(vec![1, 0]).unwrap()).unwrap();
        let a: HashSet<_> = line.value_tuples().collect();
        let b: HashSet<_> = swapped.value_tuples().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn permute_rejects_non_bijection() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        assert!(permute(&and(), &Permutation::identity(2)).is_err());
    }

    #[test]
    fn restrict_examples() {
        let c = nonarc();
        let d = |s: &str, var: &str| Domain::new(var, vals(s)).unwrap();
        let r = restrict(&c, &[d("0 1", "x"), d("0 1 2", "y")]).unwrap();
        let got: HashSet<_> = r.value_tuples().collect();
        assert_eq!(got, [vals("0 1"), vals("1 0")].into_iter().collect());

        assert_eq!(restrict(&c, c.domains()).unwrap(), c);

        let and = and();
        let r = restrict(&and, &[d("1", "x"), d("1", "y"), d("0 1", "z")]).unwrap();
        assert_eq!(r.value_tuples().collect::<Vec<_>>(), vec![vals("1 1 1")]);

        assert!(matches!(
            restrict(&and, &[d("2", "x"), d("1", "y"), d("0 1", "z")]),
            Err(Error::ValueOutsideDomain { .. })
        ));
    }

    #[test]
    fn based_on_examples() {
        let e = nonarc();
        let small = ConstraintTable::new(
            "c",
            vec!["x".into(), "y".into()],
            vec![
                Domain::new("x", vals("0")).unwrap(),
                Domain::new("y", vals("1")).unwrap(),
            ],
            [vals("0 1")],
        )
        .unwrap();
        assert!(is_based_on(&small, &e).unwrap());
        // the one-value table over x,y ∈ {0} with no tuples is based on e too
        let empty = table("c", "x y", "0", &[]);
        assert!(is_based_on(&empty, &e).unwrap());

        let missing = table("c", "x y", "0 1 2", &["0 1", "1 0"]);
        assert!(!is_based_on(&missing, &e).unwrap());
        assert!(is_based_on(&and(), &e).is_err());
    }

    #[test]
    fn satisfies_examples() {
        let v = ["x", "y", "z"];
        assert!(satisfies(&vals("0 1 0"), &v, &AtomicFormula::equals("x", "0")).unwrap());
        assert!(satisfies(
            &vals("l r -"),
            &v,
            &AtomicFormula::member_of("z", ["+", "-"])
        )
        .unwrap());
        assert!(!satisfies(&vals("1 1 1"), &v, &AtomicFormula::not_equals("z", "1")).unwrap());
        assert!(satisfies(&vals("1 1 1"), &v, &AtomicFormula::equals("w", "1")).is_err());
    }

    #[test]
    fn duplicate_tuples_rejected() {
        let vars = vec!["x".to_string()];
        let domains = vec![Domain::new("x", vals("0 1")).unwrap()];
        let err = ConstraintTable::new("d", vars, domains, [vals("0"), vals("0")]).unwrap_err();
        assert!(matches!(err, Error::DuplicateTuple { .. }));
    }

    #[test]
    fn column_is_subset_of_domain() {
        let t = table("t", "x y z", "+ - l r", &["r l +", "r l -", "r l r", "r l l"]);
        assert_eq!(t.column(0).len(), 1);
        assert_eq!(t.column(2), t.domain(2).all());
    }
}
