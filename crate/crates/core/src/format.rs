//! Reading and writing table (`.ct`) and CSP (`.csp`) files, and their JSON
//! mirrors.
//!
//! A `.ct` file holds one or more blocks:
//!
//! ```text
//! constraint and
//! vars x y z
//! domain x 0 1
//! domain y 0 1
//! domain z 0 1
//! tuples
//! 0 0 0
//! 1 1 1
//! end
//! ```
//!
//! A `.csp` file declares variables (`var x 0 1`), binds tables to them
//! (`use and(x,y,z)`), and may `import` table files and name `rules` files
//! to solve with. Tables not imported are looked up in the built-in corpus.
//! `#` starts a comment everywhere.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::csp::Csp;
use crate::error::{Error, Result};
use crate::export;
use crate::rules::RuleSet;
use crate::table::ConstraintTable;
use crate::value::{Domain, Value};

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

/// Parses every table block of a `.ct` text.
pub fn parse_tables(text: &str, file: &str) -> Result<Vec<ConstraintTable>> {
    struct Block {
        name: String,
        start: usize,
        vars: Option<Vec<String>>,
        domains: HashMap<String, Vec<Value>>,
        rows: Option<Vec<(usize, Vec<Value>)>>,
    }
    let mut out = Vec::new();
    let mut cur: Option<Block> = None;
    let err = |line: usize, msg: String| Error::parse(file, line, msg);
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or_default();
        let Some(block) = cur.as_mut() else {
            if head != "constraint" {
                return Err(err(lineno, format!("expected `constraint <name>`, found `{line}`")));
            }
            let name = words.next().ok_or_else(|| err(lineno, "missing constraint name".into()))?;
            if words.next().is_some() {
                return Err(err(lineno, "trailing tokens after constraint name".into()));
            }
            cur = Some(Block {
                name: name.to_string(),
                start: lineno,
                vars: None,
                domains: HashMap::new(),
                rows: None,
            });
            continue;
        };
        if let Some(rows) = block.rows.as_mut() {
            if head == "end" && words.next().is_none() {
                let block = cur.take().expect("open block");
                out.push(finish_block(file, block.start, block.name, block.vars, block.domains, block.rows)?);
            } else {
                rows.push((lineno, line.split_whitespace().map(Value::from).collect()));
            }
            continue;
        }
        match head {
            "vars" => {
                if block.vars.is_some() {
                    return Err(err(lineno, "duplicate `vars` line".into()));
                }
                let vars: Vec<String> = words.map(String::from).collect();
                if vars.is_empty() {
                    return Err(err(lineno, "`vars` needs at least one variable".into()));
                }
                block.vars = Some(vars);
            }
            "domain" => {
                let var = words.next().ok_or_else(|| err(lineno, "missing variable after `domain`".into()))?;
                let vars = block
                    .vars
                    .as_ref()
                    .ok_or_else(|| err(lineno, "`domain` before `vars`".into()))?;
                if !vars.iter().any(|v| v == var) {
                    return Err(err(lineno, format!("unknown variable `{var}`")));
                }
                if block.domains.contains_key(var) {
                    return Err(err(lineno, format!("duplicate domain for `{var}`")));
                }
                block.domains.insert(var.to_string(), words.map(Value::from).collect());
            }
            "tuples" => {
                if words.next().is_some() {
                    return Err(err(lineno, "trailing tokens after `tuples`".into()));
                }
                block.rows = Some(Vec::new());
            }
            _ => return Err(err(lineno, format!("unexpected `{head}` in constraint header"))),
        }
    }
    if let Some(block) = cur {
        return Err(err(block.start, format!("constraint `{}` is missing `end`", block.name)));
    }
    Ok(out)
}

fn finish_block(
    file: &str,
    line: usize,
    name: String,
    vars: Option<Vec<String>>,
    mut domains: HashMap<String, Vec<Value>>,
    rows: Option<Vec<(usize, Vec<Value>)>>,
) -> Result<ConstraintTable> {
    let located = |e: Error| Error::parse(file, line, format!("constraint `{name}`: {e}"));
    let vars = vars.ok_or_else(|| Error::parse(file, line, format!("constraint `{name}` has no `vars` line")))?;
    let doms = vars
        .iter()
        .map(|v| {
            let values = domains
                .remove(v)
                .ok_or_else(|| Error::parse(file, line, format!("no domain for `{v}` in `{name}`")))?;
            Domain::new(v, values).map_err(located)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = rows.unwrap_or_default();
    let mut seen = HashSet::new();
    for (at, row) in &rows {
        let bad = |msg: String| Error::parse(file, *at, format!("constraint `{name}`: {msg}"));
        if row.len() != vars.len() {
            return Err(bad(format!("tuple has {} values, expected {}", row.len(), vars.len())));
        }
        for ((v, d), x) in vars.iter().zip(&doms).zip(row) {
            if !d.contains(x) {
                return Err(bad(format!("value `{x}` is not in the domain of `{v}`")));
            }
        }
        if !seen.insert(row) {
            return Err(bad("duplicate tuple".into()));
        }
    }
    ConstraintTable::new(name.clone(), vars, doms, rows.into_iter().map(|(_, r)| r)).map_err(located)
}

/// Renders a table in `.ct` syntax.
pub fn print_table(table: &ConstraintTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "constraint {}", table.name());
    let _ = writeln!(s, "vars {}", table.vars().join(" "));
    for (v, d) in table.vars().iter().zip(table.domains()) {
        let vals: Vec<&str> = d.values().iter().map(Value::as_str).collect();
        let _ = writeln!(s, "domain {v} {}", vals.join(" "));
    }
    s.push_str("tuples\n");
    for t in table.value_tuples() {
        let vals: Vec<&str> = t.iter().map(Value::as_str).collect();
        let _ = writeln!(s, "{}", vals.join(" "));
    }
    s.push_str("end\n");
    s
}

/// A token that may be written as a JSON string or number.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonToken {
    Text(String),
    Int(i64),
}

impl JsonToken {
    fn value(&self) -> Value {
        match self {
            JsonToken::Text(s) => Value::new(s),
            JsonToken::Int(i) => Value::from(i.to_string()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonTable {
    pub name: String,
    pub vars: Vec<String>,
    /// Domain per variable, keyed by name.
    pub domains: HashMap<String, Vec<JsonToken>>,
    pub tuples: Vec<Vec<JsonToken>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum JsonTables {
    Many { constraints: Vec<JsonTable> },
    One(JsonTable),
}

/// Parses the JSON mirror of a `.ct` file: one table object, or
/// `{"constraints": [...]}`.
pub fn parse_tables_json(text: &str, file: &str) -> Result<Vec<ConstraintTable>> {
    let parsed: JsonTables = serde_json::from_str(text).map_err(|source| Error::Json {
        path: file.to_string(),
        source,
    })?;
    let list = match parsed {
        JsonTables::Many { constraints } => constraints,
        JsonTables::One(t) => vec![t],
    };
    list.into_iter()
        .map(|t| {
            let doms = t
                .vars
                .iter()
                .map(|v| {
                    let vals = t
                        .domains
                        .get(v)
                        .ok_or_else(|| Error::parse(file, 0, format!("no domain for `{v}` in `{}`", t.name)))?;
                    Domain::new(v, vals.iter().map(JsonToken::value))
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = t.tuples.iter().map(|r| r.iter().map(JsonToken::value).collect::<Vec<_>>());
            ConstraintTable::new(t.name.clone(), t.vars.clone(), doms, rows)
        })
        .collect()
}

/// JSON mirror of a table.
pub fn table_to_json(table: &ConstraintTable) -> JsonTable {
    JsonTable {
        name: table.name().to_string(),
        vars: table.vars().to_vec(),
        domains: table
            .vars()
            .iter()
            .zip(table.domains())
            .map(|(v, d)| {
                let vals = d.values().iter().map(|x| JsonToken::Text(x.to_string())).collect();
                (v.clone(), vals)
            })
            .collect(),
        tuples: table
            .value_tuples()
            .map(|t| t.iter().map(|x| JsonToken::Text(x.to_string())).collect())
            .collect(),
    }
}

fn is_json(path: &str) -> bool {
    Path::new(path)
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Parses table text, choosing the syntax by the file extension.
pub fn parse_tables_auto(text: &str, file: &str) -> Result<Vec<ConstraintTable>> {
    if is_json(file) {
        parse_tables_json(text, file)
    } else {
        parse_tables(text, file)
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_tables(path: &Path) -> Result<Vec<ConstraintTable>> {
    parse_tables_auto(&read_file(path)?, &path.display().to_string())
}

/// Loads exactly one table: the file's only table, or the one called `name`.
pub fn load_table(path: &Path, name: Option<&str>) -> Result<ConstraintTable> {
    let tables = load_tables(path)?;
    pick_table(tables, name, &path.display().to_string())
}

pub(crate) fn pick_table(mut tables: Vec<ConstraintTable>, name: Option<&str>, file: &str) -> Result<ConstraintTable> {
    match name {
        Some(n) => {
            let i = tables
                .iter()
                .position(|t| t.name() == n)
                .ok_or_else(|| Error::UnknownTable(n.to_string()))?;
            Ok(tables.swap_remove(i))
        }
        None if tables.len() == 1 => Ok(tables.remove(0)),
        None => Err(Error::parse(
            file,
            0,
            format!("file holds {} tables; name the one to use", tables.len()),
        )),
    }
}

/// Supplies included files to the CSP reader.
pub trait Source {
    /// Text of `path` as referenced from the CSP file, plus a display name.
    fn read(&mut self, path: &str) -> Result<(String, String)>;
}

/// Reads includes relative to a directory on disk.
pub struct FsSource {
    pub base: PathBuf,
}

impl Source for FsSource {
    fn read(&mut self, path: &str) -> Result<(String, String)> {
        let full = self.base.join(path);
        let text = read_file(&full)?;
        Ok((text, full.display().to_string()))
    }
}

/// A parsed CSP file.
#[derive(Clone, Debug)]
pub struct CspFile {
    pub csp: Csp,
    /// Tables named by the file's instances, in order of first use.
    pub tables: Vec<Arc<ConstraintTable>>,
    /// Rule sets from `rules` lines.
    pub rules: Vec<RuleSet>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
pub struct JsonCsp {
    #[serde(default)]
    pub imports: Vec<String>,
    pub vars: Vec<JsonVar>,
    #[serde(default)]
    pub constraints: Vec<JsonUse>,
    #[serde(default)]
    pub rules: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct JsonVar {
    pub name: String,
    pub values: Vec<JsonToken>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct JsonUse {
    pub table: String,
    pub vars: Vec<String>,
}

struct CspBuilder<'a> {
    source: &'a mut dyn Source,
    imported: HashMap<String, Arc<ConstraintTable>>,
    csp: Csp,
    used: Vec<Arc<ConstraintTable>>,
    rule_files: Vec<String>,
}

impl CspBuilder<'_> {
    fn import(&mut self, path: &str) -> Result<()> {
        let (text, name) = self.source.read(path)?;
        for t in parse_tables_auto(&text, &name)? {
            match self.imported.get(t.name()) {
                Some(prev) if **prev != t => return Err(Error::ConflictingTable(t.name().to_string())),
                Some(_) => {}
                None => {
                    self.imported.insert(t.name().to_string(), Arc::new(t));
                }
            }
        }
        Ok(())
    }

    fn table(&mut self, name: &str) -> Result<Arc<ConstraintTable>> {
        if let Some(t) = self.used.iter().find(|t| t.name() == name) {
            return Ok(t.clone());
        }
        let t = match self.imported.get(name) {
            Some(t) => t.clone(),
            None => Arc::new(corpus::table(name)?),
        };
        self.used.push(t.clone());
        Ok(t)
    }

    fn finish(mut self) -> Result<CspFile> {
        let mut rules = Vec::new();
        for path in std::mem::take(&mut self.rule_files) {
            let (text, name) = self.source.read(&path)?;
            let tables = &self.used;
            let imported = &self.imported;
            let set = export::parse_rules(&text, &name, None, &mut |n| {
                tables
                    .iter()
                    .chain(imported.values())
                    .find(|t| t.name() == n)
                    .cloned()
                    .ok_or_else(|| Error::UnknownTable(n.to_string()))
            })?;
            rules.push(set);
        }
        Ok(CspFile {
            csp: self.csp,
            tables: self.used,
            rules,
        })
    }
}

/// Parses `.csp` text. Includes are read through `source`.
pub fn parse_csp(text: &str, file: &str, source: &mut dyn Source) -> Result<CspFile> {
    let mut b = CspBuilder {
        source,
        imported: HashMap::new(),
        csp: Csp::new(),
        used: Vec::new(),
        rule_files: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let located = |e: Error| match e {
            e @ (Error::Parse { .. } | Error::Io { .. } | Error::Json { .. }) => e,
            e => Error::parse(file, lineno, e.to_string()),
        };
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match head {
            "import" if !rest.is_empty() => b.import(rest).map_err(located)?,
            "rules" if !rest.is_empty() => b.rule_files.push(rest.to_string()),
            "var" => {
                let mut words = rest.split_whitespace();
                let name = words
                    .next()
                    .ok_or_else(|| Error::parse(file, lineno, "missing variable name"))?;
                let dom = Domain::new(name, words.map(Value::from)).map_err(located)?;
                b.csp.add_var(name, dom).map_err(located)?;
            }
            "use" => {
                let (table, args) = parse_call(rest).ok_or_else(|| {
                    Error::parse(file, lineno, format!("expected `use <table>(<vars>)`, found `{rest}`"))
                })?;
                let t = b.table(table).map_err(located)?;
                b.csp.add_instance(t, &args).map_err(located)?;
            }
            _ => return Err(Error::parse(file, lineno, format!("unexpected `{line}`"))),
        }
    }
    b.finish()
}

/// `name(a, b, c)` → `("name", ["a", "b", "c"])`.
fn parse_call(s: &str) -> Option<(&str, Vec<&str>)> {
    let open = s.find('(')?;
    let inner = s[open + 1..].trim_end().strip_suffix(')')?;
    let name = s[..open].trim();
    if name.is_empty() || name.contains(char::is_whitespace) {
        return None;
    }
    let args: Vec<&str> = inner.split(',').map(str::trim).collect();
    if args.iter().any(|a| a.is_empty() || a.contains(char::is_whitespace)) {
        return None;
    }
    Some((name, args))
}

/// Parses the JSON mirror of a `.csp` file.
pub fn parse_csp_json(text: &str, file: &str, source: &mut dyn Source) -> Result<CspFile> {
    let j: JsonCsp = serde_json::from_str(text).map_err(|source| Error::Json {
        path: file.to_string(),
        source,
    })?;
    let mut b = CspBuilder {
        source,
        imported: HashMap::new(),
        csp: Csp::new(),
        used: Vec::new(),
        rule_files: j.rules,
    };
    for path in &j.imports {
        b.import(path)?;
    }
    for v in &j.vars {
        let dom = Domain::new(&v.name, v.values.iter().map(JsonToken::value))?;
        b.csp.add_var(&v.name, dom)?;
    }
    for u in &j.constraints {
        let t = b.table(&u.table)?;
        b.csp.add_instance(t, &u.vars)?;
    }
    b.finish()
}

/// Loads a CSP file from disk; includes resolve relative to its directory.
pub fn load_csp(path: &Path) -> Result<CspFile> {
    let text = read_file(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut source = FsSource { base };
    let name = path.display().to_string();
    if is_json(&name) {
        parse_csp_json(&text, &name, &mut source)
    } else {
        parse_csp(&text, &name, &mut source)
    }
}
