//! `rulesmith`: generate propagation rules for table constraints and use them.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rulesmith::corpus::{self, Tier};
use rulesmith::export;
use rulesmith::format::{self, CspFile};
use rulesmith::generation::{self, GenStats};
use rulesmith::oracle;
use rulesmith::propagation::{self, Consistency, RuleInstance, Trace};
use rulesmith::search::{self, LabelingStrategy};
use rulesmith::{ConstraintTable, Csp, Error, GenConfig, RuleKind, RuleLibrary, RuleSet};

#[derive(Parser)]
#[command(name = "rulesmith", version, about = "Rule generation and rule-based propagation for table constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Eq,
    Mem,
}

impl From<Kind> for RuleKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Eq => RuleKind::Equality,
            Kind::Mem => RuleKind::Membership,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ConsistencyKind {
    Rule,
    Memrule,
    Arc,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Chr,
    Rules,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Declaration,
    Smallest,
}

impl From<Strategy> for LabelingStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Declaration => LabelingStrategy::Declaration,
            Strategy::Smallest => LabelingStrategy::SmallestDomain,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the minimal valid rules of a table.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Table file (.ct or .json) or built-in table name.
        #[arg(long)]
        table: String,
        /// Table to pick from a file holding several.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        max_premise: Option<usize>,
        /// Give up after this many seconds.
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-stage counters and timings on stderr.
        #[arg(long)]
        stats: bool,
    },
    /// Solve a CSP by propagation and labeling.
    Solve {
        /// CSP file (.csp or .json) or built-in fixture name.
        #[arg(long)]
        csp: String,
        /// `eq`, `mem`, `none` or a `.rules` file; repeatable. Defaults to
        /// the rule files named by the CSP, else `eq`.
        #[arg(long)]
        rules: Vec<String>,
        #[arg(long, conflicts_with = "limit")]
        all: bool,
        /// Stop after this many solutions (default 1).
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, value_enum, default_value = "declaration")]
        strategy: Strategy,
        /// Search counters on stderr.
        #[arg(long)]
        stats: bool,
        /// Root propagation steps on stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Check a CSP for rule, membership-rule or arc consistency.
    Check {
        #[arg(long)]
        csp: String,
        #[arg(long, value_enum)]
        consistency: ConsistencyKind,
    },
    /// Print rules as a CHR program or as a `.rules` file.
    Export {
        #[arg(long, value_enum, default_value = "chr")]
        format: ExportFormat,
        /// `.rules` file to export; generated from the table when absent.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Table file or built-in table name.
        #[arg(long)]
        table: Option<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, value_enum, default_value = "eq")]
        kind: Kind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force reference computations.
    Oracle {
        #[command(subcommand)]
        what: OracleCommand,
    },
    /// Rule counts for the built-in corpus.
    Bench {
        /// Only entries whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Include the benchmark tier.
        #[arg(long)]
        all: bool,
        /// Seconds per generation run.
        #[arg(long, default_value_t = 1800.0)]
        timeout: f64,
        #[arg(long)]
        max_premise: Option<usize>,
    },
    /// Project the solutions of a CSP onto some of its variables as a table.
    Compose {
        #[arg(long)]
        csp: String,
        /// Comma-separated variable names.
        #[arg(long, value_delimiter = ',', required = true)]
        interface: Vec<String>,
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Domains after generalized arc consistency.
    Gac {
        #[arg(long)]
        csp: String,
    },
    /// Minimal valid rules by exhaustive enumeration.
    Rules {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        table: String,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        max_premise: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// All solutions by enumeration.
    Solutions {
        #[arg(long)]
        csp: String,
    },
}

/// Exit status of a command that ran to completion.
enum Status {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("RULESMITH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .with_context(|| format!("RULESMITH_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        bail!("RULESMITH_THREADS must be a positive integer, got `{v}`");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cmd: Command) -> anyhow::Result<Status> {
    match cmd {
        Command::Gen {
            kind,
            table,
            name,
            max_premise,
            timeout,
            out,
            stats,
        } => {
            let t = load_table(&table, name.as_deref())?;
            let mut cfg = GenConfig::new(kind.into());
            if let Some(k) = max_premise {
                cfg = cfg.with_max_premise(k);
            }
            if let Some(s) = timeout {
                cfg = cfg.with_timeout(seconds(s)?);
            }
            let (rules, gen_stats) = generation::generate_with_stats(&t, &cfg)?;
            if stats {
                report_gen_stats(&t, &rules, &gen_stats);
            }
            emit(out.as_deref(), &export::print_rules(&rules, &t))?;
            Ok(Status::Ok)
        }
        Command::Solve {
            csp,
            rules,
            all,
            limit,
            strategy,
            stats,
            trace,
        } => solve(&csp, &rules, if all { None } else { Some(limit.unwrap_or(1)) }, strategy.into(), stats, trace),
        Command::Check { csp, consistency } => {
            let file = load_csp(&csp)?;
            let lib = RuleLibrary::new();
            let (label, verdict) = match consistency {
                ConsistencyKind::Rule => ("rule-consistent", propagation::check_rule_consistent(&file.csp, &lib)?),
                ConsistencyKind::Memrule => (
                    "membership-rule-consistent",
                    propagation::check_membership_rule_consistent(&file.csp, &lib)?,
                ),
                ConsistencyKind::Arc => ("arc-consistent", propagation::check_arc_consistent(&file.csp)),
            };
            println!("{label}: {verdict}");
            Ok(if verdict == Consistency::Consistent {
                Status::Ok
            } else {
                Status::Failed
            })
        }
        Command::Export {
            format,
            input,
            table,
            name,
            kind,
            out,
        } => {
            let (rules, t) = match input {
                Some(path) => load_rules_file(&path, table.as_deref(), name.as_deref())?,
                None => {
                    let Some(table) = table else {
                        bail!("export needs --in or --table");
                    };
                    let t = load_table(&table, name.as_deref())?;
                    let rules = generation::generate(&t, &GenConfig::new(kind.into()))?;
                    (rules, Arc::new(t))
                }
            };
            let text = match format {
                ExportFormat::Chr => export::to_chr(&rules, &t),
                ExportFormat::Rules => export::print_rules(&rules, &t),
            };
            emit(out.as_deref(), &text)?;
            Ok(Status::Ok)
        }
        Command::Oracle { what } => match what {
            OracleCommand::Gac { csp } => {
                let file = load_csp(&csp)?;
                let closed = propagation::gac_oracle(&file.csp);
                print!("{}", render_domains(&closed));
                Ok(if closed.is_failed() { Status::Failed } else { Status::Ok })
            }
            OracleCommand::Rules {
                kind,
                table,
                name,
                max_premise,
                out,
            } => {
                let t = load_table(&table, name.as_deref())?;
                if let Some(k) = max_premise {
                    if k > t.arity().saturating_sub(1) {
                        return Err(Error::InvalidPremiseCap { cap: k, arity: t.arity() }.into());
                    }
                }
                let rules = oracle::minimal_valid_rules(&t, kind.into(), max_premise);
                emit(out.as_deref(), &export::print_rules(&rules, &t))?;
                Ok(Status::Ok)
            }
            OracleCommand::Solutions { csp } => {
                let file = load_csp(&csp)?;
                let sols = file.csp.solutions();
                let mut out = String::new();
                for s in &sols {
                    out.push_str(&solution_line(&file.csp, s));
                }
                print!("{out}");
                Ok(if sols.is_empty() { Status::Failed } else { Status::Ok })
            }
        },
        Command::Bench {
            filter,
            all,
            timeout,
            max_premise,
        } => bench(filter.as_deref(), all, seconds(timeout)?, max_premise),
        Command::Compose {
            csp,
            interface,
            name,
            out,
        } => {
            let file = load_csp(&csp)?;
            let t = file.csp.materialize(&interface, &name)?;
            emit(out.as_deref(), &format::print_table(&t))?;
            Ok(Status::Ok)
        }
    }
}

fn seconds(s: f64) -> anyhow::Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid timeout `{s}`"))
}

/// A table from a file, or a built-in table when no such file exists.
fn load_table(input: &str, name: Option<&str>) -> anyhow::Result<ConstraintTable> {
    let path = Path::new(input);
    if path.exists() {
        return Ok(format::load_table(path, name)?);
    }
    let builtin = path.file_stem().and_then(|s| s.to_str()).unwrap_or(input);
    match corpus::table(name.unwrap_or(builtin)) {
        Ok(t) => Ok(t),
        Err(_) => bail!("no table file or built-in table `{input}`"),
    }
}

/// A CSP from a file, or a built-in fixture when no such file exists.
fn load_csp(input: &str) -> anyhow::Result<CspFile> {
    let path = Path::new(input);
    if path.exists() {
        return Ok(format::load_csp(path)?);
    }
    let file = path.file_name().and_then(|s| s.to_str()).unwrap_or(input);
    let candidates = [file.to_string(), format!("{file}.csp")];
    for c in &candidates {
        if corpus::fixture_text(c).is_some() {
            return Ok(corpus::fixture(c)?);
        }
    }
    bail!("no CSP file or built-in fixture `{input}`")
}

fn load_rules_file(
    path: &Path,
    table: Option<&str>,
    name: Option<&str>,
) -> anyhow::Result<(RuleSet, Arc<ConstraintTable>)> {
    let text = format::read_file(path)?;
    let given = table.map(|t| load_table(t, name)).transpose()?.map(Arc::new);
    let mut seen: Option<Arc<ConstraintTable>> = None;
    let mut lookup = |n: &str| -> rulesmith::Result<Arc<ConstraintTable>> {
        let t = match &given {
            Some(t) if t.name() == n => t.clone(),
            _ => corpus::shared(n)?,
        };
        seen = Some(t.clone());
        Ok(t)
    };
    let rules = export::parse_rules(&text, &path.display().to_string(), given.as_deref(), &mut lookup)?;
    let table = seen.or(given).context("rules file names no table")?;
    Ok((rules, table))
}

fn rules_for(file: &CspFile, inputs: &[String]) -> anyhow::Result<Vec<RuleInstance>> {
    let lib = RuleLibrary::new();
    if inputs.is_empty() {
        if file.rules.is_empty() {
            return Ok(propagation::instantiate_kind(&file.csp, &lib, RuleKind::Equality)?);
        }
        let sets: Vec<&RuleSet> = file.rules.iter().collect();
        return Ok(propagation::instantiate(&file.csp, &sets)?);
    }
    let mut out = Vec::new();
    for input in inputs {
        match input.as_str() {
            "none" => {}
            s => {
                if let Some(kind) = RuleKind::parse(s) {
                    out.extend(propagation::instantiate_kind(&file.csp, &lib, kind)?);
                } else {
                    let text = format::read_file(Path::new(s))?;
                    let mut lookup = |n: &str| -> rulesmith::Result<Arc<ConstraintTable>> {
                        file.tables
                            .iter()
                            .find(|t| t.name() == n)
                            .cloned()
                            .map_or_else(|| corpus::shared(n), Ok)
                    };
                    let rs = export::parse_rules(&text, s, None, &mut lookup)?;
                    out.extend(propagation::instantiate(&file.csp, &[&rs])?);
                }
            }
        }
    }
    Ok(out)
}

fn solve(
    input: &str,
    rule_args: &[String],
    limit: Option<usize>,
    strategy: LabelingStrategy,
    stats: bool,
    trace: bool,
) -> anyhow::Result<Status> {
    let file = load_csp(input)?;
    let csp = &file.csp;
    let started = Instant::now();
    let rules = rules_for(&file, rule_args)?;
    let prepared = started.elapsed();
    if trace {
        let (_, t): (Csp, Trace) = propagation::propagate(csp, &rules);
        eprint!("{}", t.render(csp, &rules));
    }
    let started = Instant::now();
    let outcome = search::solve_report(csp, &rules, strategy, limit);
    let searched = started.elapsed();
    let mut out = String::new();
    for s in &outcome.solutions {
        out.push_str(&solution_line(csp, &csp.values_of(s)));
    }
    print!("{out}");
    if stats {
        let st = &outcome.stats;
        eprintln!(
            "rules {} nodes {} splits {} failures {} prunes {} solutions {}",
            rules.len(),
            st.nodes,
            st.splits,
            st.failures,
            st.prunes,
            st.solutions
        );
        eprintln!("time rules {:.3}s search {:.3}s", prepared.as_secs_f64(), searched.as_secs_f64());
    }
    if outcome.solutions.is_empty() {
        eprintln!("no solutions");
        return Ok(Status::Failed);
    }
    Ok(Status::Ok)
}

fn solution_line(csp: &Csp, values: &[rulesmith::Value]) -> String {
    let parts: Vec<String> = csp
        .vars()
        .iter()
        .zip(values)
        .map(|(v, x)| format!("{}={}", v.name, x))
        .collect();
    parts.join(" ") + "\n"
}

fn render_domains(csp: &Csp) -> String {
    let mut out = String::new();
    for (i, v) in csp.vars().iter().enumerate() {
        let vals: Vec<String> = csp.current_values(i).iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("{}: {}\n", v.name, vals.join(" ")));
    }
    out
}

fn report_gen_stats(t: &ConstraintTable, rules: &RuleSet, st: &GenStats) {
    for s in &st.stages {
        eprintln!(
            "premise {}: assignments {} candidates {} kept {} in {:.3}s",
            s.premise_size,
            s.assignments,
            s.candidates,
            s.kept,
            s.elapsed.as_secs_f64()
        );
    }
    eprintln!(
        "{}: {} rules ({} ungrouped) in {:.3}s",
        t.name(),
        rules.grouped_len(),
        rules.len(),
        st.elapsed.as_secs_f64()
    );
}

enum Count {
    Done(usize, Duration),
    Skipped,
    TimedOut,
}

impl Count {
    fn cell(&self) -> String {
        match self {
            Count::Done(n, _) => n.to_string(),
            Count::Skipped => "-".into(),
            Count::TimedOut => "timeout".into(),
        }
    }

    fn time(&self) -> String {
        match self {
            Count::Done(_, d) => format!("{:.3}s", d.as_secs_f64()),
            Count::Skipped => "-".into(),
            Count::TimedOut => "timeout".into(),
        }
    }
}

fn count_rules(t: &ConstraintTable, kind: RuleKind, budget: Duration, max_premise: Option<usize>) -> anyhow::Result<Count> {
    let mut cfg = GenConfig::new(kind).with_timeout(budget);
    if let Some(k) = max_premise {
        cfg = cfg.with_max_premise(k.min(t.arity().saturating_sub(1)));
    }
    let started = Instant::now();
    match generation::generate(t, &cfg) {
        Ok(r) => Ok(Count::Done(r.grouped_len(), started.elapsed())),
        Err(Error::Timeout) => Ok(Count::TimedOut),
        Err(e) => Err(e.into()),
    }
}

fn bench(filter: Option<&str>, all: bool, budget: Duration, max_premise: Option<usize>) -> anyhow::Result<Status> {
    let entries: Vec<_> = corpus::ENTRIES
        .iter()
        .filter(|e| all || e.tier == Tier::Desk)
        .filter(|e| filter.is_none_or(|f| e.name.contains(f)))
        .collect();
    if entries.is_empty() {
        bail!("no corpus entry matches");
    }
    let mut stdout = std::io::stdout().lock();
    if let Some(k) = max_premise {
        writeln!(stdout, "# max premise {k}")?;
    }
    writeln!(
        stdout,
        "{:<10} {:>5} {:>4} {:>5} {:>8} {:>8} {:>8} {:>8}",
        "name", "arity", "|D|", "|C|", "eq", "eq-ref", "mem", "mem-ref"
    )?;
    let mut mismatch = false;
    for e in entries {
        let t = corpus::table(e.table)?;
        let eq = count_rules(&t, RuleKind::Equality, budget, max_premise)?;
        // membership generation is out of reach where no reference exists
        let mem = if e.mem_rules.is_some() {
            count_rules(&t, RuleKind::Membership, budget, max_premise)?
        } else {
            Count::Skipped
        };
        if max_premise.is_none() {
            for (got, want) in [(&eq, e.eq_rules), (&mem, e.mem_rules)] {
                if let (Count::Done(n, _), Some(w)) = (got, want) {
                    mismatch |= *n != w;
                }
            }
        }
        let reference = |r: Option<usize>| r.map_or("-".to_string(), |n| n.to_string());
        writeln!(
            stdout,
            "{:<10} {:>5} {:>4} {:>5} {:>8} {:>8} {:>8} {:>8}",
            e.name,
            e.arity,
            e.domain_size,
            e.cardinality,
            eq.cell(),
            reference(e.eq_rules),
            mem.cell(),
            reference(e.mem_rules)
        )?;
        stdout.flush()?;
        eprintln!("{:<10} eq {:>10} mem {:>10}", e.name, eq.time(), mem.time());
    }
    Ok(if mismatch { Status::Failed } else { Status::Ok })
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
