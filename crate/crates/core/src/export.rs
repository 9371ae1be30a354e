//! Text forms of rule sets: the canonical `.rules` format and CHR
//! propagation rules.
//!
//! `.rules` files start with an optional header `rules <table> <eq|mem>`
//! followed by one rule per line:
//!
//! ```text
//! rules and eq
//! x=0 -> z != 1
//! z=1 -> x != 0, y != 0
//! ```
//!
//! Membership premises are written `x in {+,-}`, an empty premise `true`.
//! Several conclusions on one line share its premise.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rules::{GroupedRule, Rule, RuleKind, RuleSet};
use crate::table::ConstraintTable;
use crate::value::{Value, ValueSet};

fn premise_text(table: &ConstraintTable, premise: &[(usize, ValueSet)]) -> String {
    if premise.is_empty() {
        return "true".to_string();
    }
    let atoms: Vec<String> = premise
        .iter()
        .map(|&(v, s)| {
            let name = &table.vars()[v];
            let dom = table.domain(v);
            if s.is_singleton() {
                format!("{name}={}", dom.value(s.first().unwrap_or(0)))
            } else {
                let vals: Vec<String> = s.iter().map(|p| dom.value(p).to_string()).collect();
                format!("{name} in {{{}}}", vals.join(","))
            }
        })
        .collect();
    atoms.join(", ")
}

fn conclusions_text(table: &ConstraintTable, conclusions: &[(usize, usize)]) -> String {
    let parts: Vec<String> = conclusions
        .iter()
        .map(|&(y, a)| format!("{} != {}", table.vars()[y], table.domain(y).value(a)))
        .collect();
    parts.join(", ")
}

/// One grouped rule as a `.rules` line.
pub fn grouped_rule_text(table: &ConstraintTable, g: &GroupedRule) -> String {
    format!(
        "{} -> {}",
        premise_text(table, &g.premise),
        conclusions_text(table, &g.conclusions)
    )
}

/// One ungrouped rule as a `.rules` line.
pub fn rule_text(table: &ConstraintTable, r: &Rule) -> String {
    format!(
        "{} -> {}",
        premise_text(table, &r.premise),
        conclusions_text(table, &[r.conclusion])
    )
}

/// The canonical `.rules` text: header plus one line per grouped rule.
pub fn print_rules(rules: &RuleSet, table: &ConstraintTable) -> String {
    let mut s = format!("rules {} {}\n", rules.table, rules.kind.short_name());
    for g in rules.grouped() {
        s.push_str(&grouped_rule_text(table, &g));
        s.push('\n');
    }
    s
}

/// Splits at commas outside braces.
fn split_top(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn lookup_value(table: &ConstraintTable, var: usize, token: &str) -> std::result::Result<usize, String> {
    table
        .domain(var)
        .index_of_str(token)
        .ok_or_else(|| format!("value `{token}` is not in the domain of `{}`", table.vars()[var]))
}

fn lookup_var(table: &ConstraintTable, name: &str) -> std::result::Result<usize, String> {
    table
        .vars()
        .iter()
        .position(|v| v == name)
        .ok_or_else(|| format!("unknown variable `{name}` for table `{}`", table.name()))
}

/// A premise atom: column, allowed positions, and whether it was written
/// as an equality.
fn parse_atom(table: &ConstraintTable, atom: &str) -> std::result::Result<(usize, ValueSet, bool), String> {
    let atom = atom.trim();
    if let Some((var, set)) = atom.split_once(" in ") {
        let var = lookup_var(table, var.trim())?;
        let inner = set
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| format!("expected `{{...}}` in `{atom}`"))?;
        let mut s = ValueSet::EMPTY;
        for tok in inner.split(',').map(str::trim) {
            if tok.is_empty() {
                return Err(format!("empty value in `{atom}`"));
            }
            s.insert(lookup_value(table, var, tok)?);
        }
        return Ok((var, s, false));
    }
    let (var, val) = atom
        .split_once('=')
        .ok_or_else(|| format!("expected `x=a` or `x in {{...}}`, found `{atom}`"))?;
    let var = lookup_var(table, var.trim())?;
    let val = lookup_value(table, var, val.trim())?;
    Ok((var, ValueSet::singleton(val), true))
}

fn parse_conclusion(table: &ConstraintTable, c: &str) -> std::result::Result<(usize, usize), String> {
    let (var, val) = c
        .split_once("!=")
        .ok_or_else(|| format!("expected `y != a`, found `{}`", c.trim()))?;
    let var = lookup_var(table, var.trim())?;
    Ok((var, lookup_value(table, var, val.trim())?))
}

/// Line number, premise atoms as from `parse_atom`, conclusions.
type ParsedLine = (usize, Vec<(usize, ValueSet, bool)>, Vec<(usize, usize)>);

/// Parses `.rules` text.
///
/// Without a header, `table` must be given and the kind is inferred: any
/// `in` atom makes it a membership rule set. With a header, the table is
/// obtained from `lookup` by name.
pub fn parse_rules(
    text: &str,
    file: &str,
    table: Option<&ConstraintTable>,
    lookup: &mut dyn FnMut(&str) -> Result<Arc<ConstraintTable>>,
) -> Result<RuleSet> {
    let mut header: Option<(Arc<ConstraintTable>, Option<RuleKind>)> = None;
    let mut lines: Vec<(usize, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("rules ") {
            if header.is_some() || !lines.is_empty() {
                return Err(Error::parse(file, i + 1, "`rules` header must come first"));
            }
            let mut words = rest.split_whitespace();
            let name = words
                .next()
                .ok_or_else(|| Error::parse(file, i + 1, "missing table name"))?;
            let kind = match words.next() {
                None => None,
                Some(k) => Some(
                    RuleKind::parse(k)
                        .ok_or_else(|| Error::parse(file, i + 1, format!("unknown rule kind `{k}`")))?,
                ),
            };
            let t = match table {
                Some(t) if t.name() == name => Arc::new(t.clone()),
                _ => lookup(name).map_err(|e| Error::parse(file, i + 1, e.to_string()))?,
            };
            header = Some((t, kind));
            continue;
        }
        lines.push((i + 1, line));
    }
    let (table, kind) = match header {
        Some(h) => h,
        None => {
            let t = table.ok_or_else(|| Error::parse(file, 1, "no `rules <table>` header and no table given"))?;
            (Arc::new(t.clone()), None)
        }
    };
    let mut parsed: Vec<ParsedLine> = Vec::new();
    for (lineno, line) in lines {
        let err = |m: String| Error::parse(file, lineno, m);
        let (premise, conclusions) = line
            .split_once("->")
            .ok_or_else(|| err(format!("expected `premise -> conclusions`, found `{line}`")))?;
        let premise = premise.trim();
        let atoms = if premise == "true" || premise.is_empty() {
            Vec::new()
        } else {
            split_top(premise)
                .into_iter()
                .map(|a| parse_atom(&table, a))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(err)?
        };
        let concl = split_top(conclusions)
            .into_iter()
            .map(|c| parse_conclusion(&table, c))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(err)?;
        parsed.push((lineno, atoms, concl));
    }
    let kind = kind.unwrap_or_else(|| {
        let any_set = parsed.iter().any(|(_, atoms, _)| atoms.iter().any(|a| !a.2));
        if any_set {
            RuleKind::Membership
        } else {
            RuleKind::Equality
        }
    });
    let mut rules = Vec::new();
    for (lineno, atoms, concl) in parsed {
        let premise: Vec<(usize, ValueSet)> = atoms.iter().map(|&(v, s, _)| (v, s)).collect();
        for c in concl {
            let rule = Rule::new(kind, premise.clone(), c)
                .map_err(|e| Error::parse(file, lineno, e.to_string()))?;
            rules.push(rule);
        }
    }
    Ok(RuleSet::new(table.name(), kind, rules))
}

/// [`parse_rules`] for a known table.
pub fn parse_rules_for(text: &str, file: &str, table: &ConstraintTable) -> Result<RuleSet> {
    parse_rules(text, file, Some(table), &mut |n| Err(Error::UnknownTable(n.to_string())))
}

fn is_plain_atom(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_integer(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
}

/// How values of one table are written as CHR terms. If any value needs
/// quotes, every non-numeric value of the table is quoted, so one table's
/// constants look alike.
struct Quoting(bool);

impl Quoting {
    fn for_table(table: &ConstraintTable) -> Self {
        Quoting(
            table
                .domains()
                .iter()
                .flat_map(|d| d.values())
                .any(|v| !is_integer(v.as_str()) && !is_plain_atom(v.as_str())),
        )
    }

    fn term(&self, v: &Value) -> String {
        let s = v.as_str();
        if is_integer(s) || (!self.0 && is_plain_atom(s)) {
            s.to_string()
        } else {
            format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
        }
    }
}

/// Variable name for column `i`: `A`, .., `Z`, then `A1`, ...
pub fn chr_var(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    match i / 26 {
        0 => letter.to_string(),
        k => format!("{letter}{k}"),
    }
}

/// The CHR `in/2` guard definition.
pub const CHR_IN_DEFINITION: &str = "in(X,L):- dom(X,D), subset(D,L).";

/// One grouped rule as a CHR propagation rule.
pub fn chr_rule(table: &ConstraintTable, g: &GroupedRule) -> String {
    let q = Quoting::for_table(table);
    let mut head = Vec::with_capacity(table.arity());
    let mut guards = Vec::new();
    for i in 0..table.arity() {
        let dom = table.domain(i);
        match g.premise.iter().find(|&&(v, _)| v == i) {
            Some(&(_, s)) if s.is_singleton() => head.push(q.term(dom.value(s.first().unwrap_or(0)))),
            Some(&(_, s)) if s == dom.all() => head.push(chr_var(i)),
            Some(&(_, s)) => {
                head.push(chr_var(i));
                let vals: Vec<String> = s.iter().map(|p| q.term(dom.value(p))).collect();
                guards.push(format!("in({},[{}])", chr_var(i), vals.join(", ")));
            }
            None => head.push(chr_var(i)),
        }
    }
    let body: Vec<String> = g
        .conclusions
        .iter()
        .map(|&(y, a)| format!("{}##{}", chr_var(y), q.term(table.domain(y).value(a))))
        .collect();
    let guard = if guards.is_empty() {
        String::new()
    } else {
        format!("{} | ", guards.join(", "))
    };
    format!(
        "{}({}) ==> {}{}.",
        table.name(),
        head.join(","),
        guard,
        body.join(",")
    )
}

/// The whole rule set as CHR: a comment line, the `in/2` definition when
/// any guard is used, then one line per grouped rule.
pub fn to_chr(rules: &RuleSet, table: &ConstraintTable) -> String {
    let grouped = rules.grouped();
    let lines: Vec<String> = grouped.iter().map(|g| chr_rule(table, g)).collect();
    let kind = match rules.kind {
        RuleKind::Equality => "equality",
        RuleKind::Membership => "membership",
    };
    let mut s = String::new();
    let _ = writeln!(s, "% {}: {} {kind} rules", table.name(), grouped.len());
    if lines.iter().any(|l| l.contains(" | ")) {
        let _ = writeln!(s, "{CHR_IN_DEFINITION}");
    }
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::{generate, GenConfig};
    use crate::value::Domain;

    fn table(name: &str, vars: &str, domain: &str, rows: &[&str]) -> ConstraintTable {
        let vals = |s: &str| s.split_whitespace().map(Value::from).collect::<Vec<_>>();
        let vars: Vec<String> = vars.split_whitespace().map(String::from).collect();
        let domains = vars.iter().map(|v| Domain::new(v, vals(domain)).unwrap()).collect();
        ConstraintTable::new(name, vars, domains, rows.iter().map(|r| vals(r))).unwrap()
    }

    fn and() -> ConstraintTable {
        table("and", "x y z", "0 1", &["0 0 0", "0 1 0", "1 0 0", "1 1 1"])
    }

    #[test]
    fn parse_single_rule() {
        let and = and();
        let r = parse_rules_for("x=0 -> z != 1\n", "r", &and).unwrap();
        assert_eq!(r.kind, RuleKind::Equality);
        assert_eq!(r.rules(), &[Rule::equality(&[(0, 0)], (2, 1)).unwrap()]);
    }

    #[test]
    fn round_trip() {
        let and = and();
        for kind in [RuleKind::Equality, RuleKind::Membership] {
            let set = generate(&and, &GenConfig::new(kind)).unwrap();
            let text = print_rules(&set, &and);
            assert_eq!(parse_rules_for(&text, "r", &and).unwrap(), set);
        }
    }

    #[test]
    fn membership_syntax() {
        let fork = table("fork", "x y z", "+ - l r", &["+ + +", "- - -", "l r -", "- l r", "r - l"]);
        let r = parse_rules_for("x in {+,-} -> z != l\n", "r", &fork).unwrap();
        assert_eq!(r.kind, RuleKind::Membership);
        assert_eq!(print_rules(&r, &fork), "rules fork mem\nx in {+,-} -> z != l\n");
        let t = parse_rules_for("true -> y != r, x != l\n", "r", &fork).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn positioned_errors() {
        let and = and();
        for bad in ["x=0 -> z = 1", "x=0 z != 1", "w=0 -> z != 1", "x=2 -> z != 1", "x=0 -> x != 1"] {
            let text = format!("# header\n\n{bad}\n");
            match parse_rules_for(&text, "bad.rules", &and) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, 3, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn chr_for_and() {
        let and = and();
        let set = generate(&and, &GenConfig::new(RuleKind::Equality)).unwrap();
        let text = to_chr(&set, &and);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "% and: 6 equality rules");
        assert_eq!(lines.len(), 7);
        assert!(lines.contains(&"and(A,B,1) ==> A##0,B##0."));
        assert!(lines.contains(&"and(0,B,C) ==> C##1."));
    }

    #[test]
    fn chr_quoting_and_guards() {
        let t = table("t", "x y z", "+ - l r", &["r l +", "r l -", "r l r", "r l l"]);
        let set = generate(&t, &GenConfig::new(RuleKind::Equality)).unwrap();
        let text = to_chr(&set, &t);
        assert!(text.contains("t(A,B,C) ==> A##'+',A##'-',A##'l',B##'+',B##'-',B##'r'."));

        let fork = table("fork", "x y z", "+ - l r", &["+ + +", "- - -", "l r -", "- l r", "r - l"]);
        let r = parse_rules_for("x in {+,-} -> z != l\n", "r", &fork).unwrap();
        let text = to_chr(&r, &fork);
        assert!(text.contains(CHR_IN_DEFINITION));
        assert!(text.contains("fork(A,B,C) ==> in(A,['+', '-']) | C##'l'."));
        let empty = RuleSet::new("fork", RuleKind::Equality, vec![]);
        assert_eq!(to_chr(&empty, &fork), "% fork: 0 equality rules\n");
    }

    #[test]
    fn chr_vars() {
        assert_eq!(chr_var(0), "A");
        assert_eq!(chr_var(25), "Z");
        assert_eq!(chr_var(26), "A1");
    }
}
