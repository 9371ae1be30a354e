//! Built-in tables, CSP fixtures and their reference rule counts.
//!
//! Every file under `corpus/` at the repository root is compiled in, so the
//! library and the CLI work without a checkout. Rule counts are grouped by
//! premise.

use std::sync::Arc;

use crate::csp::Csp;
use crate::error::{Error, Result};
use crate::format::{self, CspFile, Source};
use crate::table::ConstraintTable;

/// Where a table's contents come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Written out as a complete truth table.
    Printed,
    /// Computed from a defining formula.
    Generated,
    /// Transcribed or derived from an outside reference; results depending
    /// on it are only as good as that transcription.
    External,
}

/// How expensive a full run is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    /// Seconds at most.
    Desk,
    /// Minutes or more; run under a budget.
    Benchmark,
}

/// A corpus table with its reference data.
#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    /// Table name inside the file.
    pub table: &'static str,
    pub file: &'static str,
    pub arity: usize,
    pub domain_size: usize,
    pub cardinality: usize,
    /// Grouped equality rule count, when known.
    pub eq_rules: Option<usize>,
    /// Grouped membership rule count, when known.
    pub mem_rules: Option<usize>,
    pub origin: Origin,
    pub tier: Tier,
    pub note: &'static str,
}

macro_rules! files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../corpus/", $name)))),*]
    };
}

/// Every `.ct` file, by file name.
pub const TABLE_FILES: &[(&str, &str)] = files![
    "allen.ct", "and.ct", "and3.ct", "and4.ct", "and6.ct", "and8.ct", "and9.ct", "b10m.ct",
    "equiv.ct", "fork.ct", "fulladder.ct", "line.ct", "msign.ct", "nonarc.ct", "not.ct",
    "not_3.ct", "not_4.ct", "not_6.ct", "not_8.ct", "not_9.ct", "or.ct", "puzzle.ct", "t.ct",
    "waltz.ct", "xor.ct",
];

macro_rules! fixtures {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../corpus/fixtures/", $name)))),*]
    };
}

/// Every fixture file, by file name.
pub const FIXTURE_FILES: &[(&str, &str)] = fixtures![
    "add_query.csp", "adder_circuit.csp", "allen_query.csp", "allen_query_osd.csp",
    "and3_query.csp", "and_x0.csp", "and_z1.csp", "full_adder_query.csp", "nonarc.csp",
    "puzzle.csp", "puzzle.rules", "waltz_impossible.csp",
];

#[allow(clippy::too_many_arguments)]
const fn entry(
    name: &'static str,
    table: &'static str,
    file: &'static str,
    shape: (usize, usize, usize),
    counts: (Option<usize>, Option<usize>),
    origin: Origin,
    tier: Tier,
    note: &'static str,
) -> Entry {
    Entry {
        name,
        table,
        file,
        arity: shape.0,
        domain_size: shape.1,
        cardinality: shape.2,
        eq_rules: counts.0,
        mem_rules: counts.1,
        origin,
        tier,
        note,
    }
}

use Origin::*;
use Tier::*;

/// The rule-count benchmark, in reporting order.
pub const ENTRIES: &[Entry] = &[
    entry("fork", "fork", "fork.ct", (3, 4, 5), (Some(12), Some(24)), Printed, Desk, "fork junction"),
    entry("t", "t", "t.ct", (3, 4, 4), (Some(1), Some(1)), Printed, Desk, "T junction"),
    entry("not", "not", "not.ct", (2, 2, 2), (Some(4), Some(4)), Printed, Desk, "Boolean negation"),
    entry("not_3", "not_3", "not_3.ct", (2, 3, 3), (Some(6), Some(6)), Generated, Desk, "negation on a 3-chain"),
    entry("not_4", "not_4", "not_4.ct", (2, 4, 4), (Some(8), Some(8)), Generated, Desk, "negation on a 4-chain"),
    entry("not_6", "not_6", "not_6.ct", (2, 6, 6), (Some(12), Some(12)), Generated, Desk, "negation on a 6-chain"),
    entry("not_8", "not_8", "not_8.ct", (2, 8, 8), (Some(16), Some(16)), Generated, Desk, "negation on an 8-chain"),
    entry("not_9", "not_9", "not_9.ct", (2, 9, 9), (Some(18), Some(18)), Generated, Desk, "negation on a 9-chain"),
    entry("and", "and", "and.ct", (3, 2, 4), (Some(6), Some(6)), Printed, Desk, "Boolean conjunction"),
    entry("and3", "and3", "and3.ct", (3, 3, 9), (Some(16), Some(18)), Printed, Desk, "three valued conjunction"),
    entry("and4", "and4", "and4.ct", (3, 4, 16), (Some(26), Some(43)), Generated, Desk, "meet on the 2 x 2 lattice"),
    entry("and6", "and6", "and6.ct", (3, 6, 24), (Some(41), Some(155)), Printed, Desk, "six valued conjunction"),
    entry("and8", "and8", "and8.ct", (3, 8, 64), (Some(96), Some(622)), Generated, Benchmark, "meet on the 2 x 2 x 2 lattice"),
    entry("and9", "and9", "and9.ct", (3, 9, 81), (Some(134), Some(1294)), Generated, Benchmark, "meet on the 3 x 3 lattice"),
    entry("msign", "msign", "msign.ct", (3, 4, 16), (Some(34), Some(54)), Printed, Desk, "sign of a product"),
    entry("fulladder", "full_adder", "fulladder.ct", (5, 2, 8), (Some(52), Some(52)), Generated, Desk, "one bit full adder"),
    entry("equiv", "equiv", "equiv.ct", (3, 3, 9), (Some(20), Some(26)), Printed, Desk, "three valued equivalence"),
    entry("b10m", "b10m", "b10m.ct", (4, 10, 100), (Some(362), None), Generated, Benchmark, "digit multiplication"),
    entry("allen", "allen", "allen.ct", (3, 13, 409), (Some(498), None), External, Benchmark, "interval algebra composition"),
];

/// Tables that are in the corpus but not part of the rule-count benchmark.
pub const EXTRA_TABLES: &[(&str, &str, Origin)] = &[
    ("or", "or.ct", Printed),
    ("xor", "xor.ct", Printed),
    ("line", "line.ct", Printed),
    ("arrow", "waltz.ct", External),
    ("l", "waltz.ct", External),
    ("nonarc", "nonarc.ct", Printed),
    ("puzzle", "puzzle.ct", Generated),
];

pub fn entry_named(name: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name || e.table == name)
}

fn file_text(file: &str) -> Option<&'static str> {
    TABLE_FILES.iter().find(|(n, _)| *n == file).map(|(_, t)| *t)
}

fn file_of(table: &str) -> Option<&'static str> {
    ENTRIES
        .iter()
        .find(|e| e.table == table)
        .map(|e| e.file)
        .or_else(|| EXTRA_TABLES.iter().find(|(n, _, _)| *n == table).map(|(_, f, _)| *f))
}

/// A built-in table by table name (`full_adder`) or entry name
/// (`fulladder`).
pub fn table(name: &str) -> Result<ConstraintTable> {
    let table_name = entry_named(name).map(|e| e.table).unwrap_or(name);
    let file = file_of(table_name).ok_or_else(|| Error::UnknownTable(name.to_string()))?;
    let text = file_text(file).ok_or_else(|| Error::UnknownTable(name.to_string()))?;
    let tables = format::parse_tables(text, file)?;
    format::pick_table(tables, Some(table_name), file)
}

/// The entry with its table loaded.
pub fn load(name: &str) -> Result<(Entry, ConstraintTable)> {
    let e = entry_named(name).ok_or_else(|| Error::UnknownCorpusEntry(name.to_string()))?;
    Ok((*e, table(e.table)?))
}

/// Names of all built-in tables.
pub fn table_names() -> Vec<&'static str> {
    ENTRIES
        .iter()
        .map(|e| e.table)
        .chain(EXTRA_TABLES.iter().map(|(n, _, _)| *n))
        .collect()
}

pub fn fixture_text(name: &str) -> Option<&'static str> {
    FIXTURE_FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

struct FixtureSource;

impl Source for FixtureSource {
    fn read(&mut self, path: &str) -> Result<(String, String)> {
        if let Some(t) = fixture_text(path) {
            return Ok((t.to_string(), format!("fixtures/{path}")));
        }
        let file = path.rsplit('/').next().unwrap_or(path);
        file_text(file)
            .map(|t| (t.to_string(), path.to_string()))
            .ok_or_else(|| Error::UnknownCorpusEntry(path.to_string()))
    }
}

/// Parses a built-in fixture, e.g. `puzzle.csp`.
pub fn fixture(name: &str) -> Result<CspFile> {
    let text = fixture_text(name).ok_or_else(|| Error::UnknownCorpusEntry(name.to_string()))?;
    format::parse_csp(text, &format!("fixtures/{name}"), &mut FixtureSource)
}

/// Names of the `.csp` fixtures.
pub fn fixture_names() -> Vec<&'static str> {
    FIXTURE_FILES
        .iter()
        .map(|(n, _)| *n)
        .filter(|n| n.ends_with(".csp"))
        .collect()
}

/// The full adder materialized from its gate circuit.
pub fn full_adder_from_circuit() -> Result<ConstraintTable> {
    let circuit: Csp = fixture("adder_circuit.csp")?.csp;
    circuit.materialize(&["i1", "i2", "i3", "o1", "o2"], "full_adder")
}

/// Shared handle to a built-in table.
pub fn shared(name: &str) -> Result<Arc<ConstraintTable>> {
    table(name).map(Arc::new)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinalities() {
        for e in ENTRIES {
            let (_, t) = load(e.name).unwrap();
            assert_eq!(t.len(), e.cardinality, "{}", e.name);
            assert_eq!(t.arity(), e.arity, "{}", e.name);
            assert_eq!(t.max_domain_size(), e.domain_size, "{}", e.name);
        }
    }

    #[test]
    fn every_table_loads() {
        for name in table_names() {
            assert_eq!(table(name).unwrap().name(), name);
        }
        assert!(matches!(load("nope"), Err(Error::UnknownCorpusEntry(_))));
    }

    #[test]
    fn every_fixture_parses() {
        for name in fixture_names() {
            fixture(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn full_adder_matches_circuit() {
        assert_eq!(full_adder_from_circuit().unwrap(), table("full_adder").unwrap());
    }
}
