//! Command-line front end: load a data directory and a delta program, compute
//! repairs, verify deletion sets, and benchmark synthetic instances.
//!
//! Exit codes: 0 success, 1 deletion set is not stabilizing (`verify`),
//! 2 parse or validation error, 3 I/O error, 4 solver budget exhausted before
//! optimality was proven (the report is still written), 5 internal error.

pub mod data;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use delta_repair::eval::Evaluator;
use delta_repair::lang::make_init_rule;
use delta_repair::oracles::{generate_instance, Template};
use delta_repair::provenance::{build_formula, build_graph};
use delta_repair::repair::{
    repair, run_all, ComparisonReport, RepairError, RepairOptions, RepairResult, ResultReport, RunReport, Semantics,
};
use delta_repair::solver::SolverError;
use delta_repair::{Database, DeltaProgram, TupleId};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Repair(#[from] RepairError),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            }
        } else {
            CliError::Parse(format!("{}: {e}", path.display()))
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Repair(RepairError::Solver(SolverError::NoSolutionWithinBudget)) => 4,
            CliError::Repair(RepairError::Eval(_)) => 2,
            CliError::Repair(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "delta-repair", version, about = "Repair relational data with delta rules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the deletions each semantics prescribes and write a JSON report.
    Repair(RepairArgs),
    /// Check whether deleting a set of tuples leaves no rule applicable.
    Verify(VerifyArgs),
    /// Run every semantics on a generated instance and report timings.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Directory with schema.txt and one <Relation>.csv per relation.
    #[arg(long)]
    pub data: PathBuf,
    /// Delta program file.
    #[arg(long)]
    pub program: PathBuf,
    /// Seed the repair by deleting this tuple (`Relation:ordinal`); repeatable.
    #[arg(long = "init-delete", value_name = "REL:ID")]
    pub init_delete: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// end, stage, step, ind or all.
    #[arg(long, default_value = "all")]
    pub semantics: String,
    /// Time limit in seconds for the independent-semantics solver.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Accepted for symmetry with `bench`; repairs are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the repaired instance (single semantics only) to this directory.
    #[arg(long)]
    pub apply: Option<PathBuf>,
    /// Report destination; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the negated provenance formula in DIMACS format.
    #[arg(long = "dump-cnf")]
    pub dump_cnf: Option<PathBuf>,
    /// Write the provenance graph in Graphviz DOT format.
    #[arg(long = "dump-graph")]
    pub dump_graph: Option<PathBuf>,
    /// Include wall-clock and per-phase times in the report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// File listing one tuple id (`Relation:ordinal`) per line.
    #[arg(long)]
    pub deletions: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// cascade-1..5, join-1..5, twin-heads or mixed.
    #[arg(long)]
    pub template: String,
    /// Number of authors and publications; about 5.6 tuples per unit.
    #[arg(long)]
    pub scale: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time limit in seconds for the independent-semantics solver.
    #[arg(long, default_value_t = 60.0)]
    pub budget: f64,
    /// Also write the JSON report, with timings, to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Runs a parsed command, writing normal output to `out`. Returns the exit
/// code.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Repair(args) => cmd_repair(&args, out),
        Command::Verify(args) => cmd_verify(&args, out),
        Command::Bench(args) => cmd_bench(&args, out),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn resolve(db: &Database, label: &str) -> Result<TupleId, CliError> {
    db.find_label(label.trim())
        .ok_or_else(|| CliError::Parse(format!("unknown tuple id `{}`", label.trim())))
}

/// Loads data and program, adding one initialization rule per
/// `--init-delete` tuple.
pub fn load_input(input: &InputArgs) -> Result<(DeltaProgram, Database), CliError> {
    let db = data::load_dir(&input.data)?;
    let text = read(&input.program)?;
    let program = DeltaProgram::parse(&text, db.schema())
        .map_err(|e| CliError::Parse(format!("{}:\n{e}", input.program.display())))?;
    let mut init = Vec::new();
    for label in &input.init_delete {
        let t = resolve(&db, label)?;
        init.push(make_init_rule(db.schema(), db.tuple(t)));
    }
    let program = if init.is_empty() {
        program
    } else {
        program.with_rules(init).map_err(|e| CliError::Parse(e.to_string()))?
    };
    Ok((program, db))
}

fn parse_semantics(s: &str) -> Result<Option<Semantics>, CliError> {
    if s == "all" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(CliError::Parse)
}

fn budget(secs: Option<f64>) -> Result<Option<Duration>, CliError> {
    secs.map(|s| Duration::try_from_secs_f64(s).map_err(|_| CliError::Parse(format!("invalid budget `{s}`"))))
        .transpose()
}

fn render_report(report: &RunReport) -> String {
    let mut json = serde_json::to_string_pretty(report).expect("reports serialize");
    json.push('\n');
    json
}

fn budget_exit(results: &[&RepairResult]) -> i32 {
    let unproven = results
        .iter()
        .any(|r| r.semantics == Semantics::Independent && !r.optimal);
    if unproven {
        4
    } else {
        0
    }
}

pub fn cmd_repair(args: &RepairArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let semantics = parse_semantics(&args.semantics)?;
    let budget = budget(args.budget)?;
    if args.apply.is_some() && semantics.is_none() {
        return Err(CliError::Parse("--apply needs a single --semantics".into()));
    }
    let (program, db) = load_input(&args.input)?;

    if let Some(path) = &args.dump_cnf {
        let formula = build_formula(&program, &db).map_err(RepairError::from)?;
        let names: Vec<String> = formula.variables.iter().map(|&t| db.label(t)).collect();
        write(path, &formula.negated_cnf().to_dimacs(Some(&names)))?;
    }
    if let Some(path) = &args.dump_graph {
        let graph = build_graph(&program, &db).map_err(RepairError::from)?;
        write(path, &graph.to_dot(&db))?;
    }

    let (results, comparison): (Vec<RepairResult>, Option<ComparisonReport>) = match semantics {
        Some(s) => (vec![repair(&program, &db, s, &RepairOptions { budget })?], None),
        None => {
            let all = run_all(&program, &db, budget)?;
            (all.results.into_values().collect(), Some(all.comparison))
        }
    };
    let report = RunReport {
        results: results
            .iter()
            .map(|r| ResultReport::new(&db, r, args.timings))
            .collect(),
        comparison,
    };
    let json = render_report(&report);
    match &args.report {
        Some(path) => {
            write(path, &json)?;
            for r in &results {
                writeln!(out, "{}: {} deleted", r.semantics, r.deleted.len()).map_err(stdout_err)?;
            }
        }
        None => out.write_all(json.as_bytes()).map_err(stdout_err)?,
    }

    if let (Some(dir), [r]) = (&args.apply, results.as_slice()) {
        let repaired = db
            .apply_deletion(r.deleted.iter().copied())
            .map_err(|e| CliError::Parse(e.to_string()))?;
        data::write_dir(&repaired, dir)?;
    }
    Ok(budget_exit(&results.iter().collect::<Vec<_>>()))
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let (program, db) = load_input(&args.input)?;
    let text = read(&args.deletions)?;
    let mut set = BTreeSet::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if !line.is_empty() {
            set.insert(resolve(&db, line)?);
        }
    }
    let after = db
        .apply_deletion(set.iter().copied())
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let ev = Evaluator::new(&program, &db).map_err(RepairError::from)?;
    match ev.first_violation(&after) {
        None => {
            writeln!(out, "stabilizing: {} tuples deleted, no rule applies", set.len()).map_err(stdout_err)?;
            Ok(0)
        }
        Some(a) => {
            writeln!(out, "not stabilizing; first violated assignment:").map_err(stdout_err)?;
            writeln!(out, "  {}", a.describe(&program, &after)).map_err(stdout_err)?;
            Ok(1)
        }
    }
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let template: Template = args
        .template
        .parse()
        .map_err(|e: delta_repair::oracles::GenerateError| CliError::Parse(e.to_string()))?;
    let budget = budget(Some(args.budget))?;
    let (program, db) =
        generate_instance(template, args.scale, args.seed).map_err(|e| CliError::Parse(e.to_string()))?;
    let all = run_all(&program, &db, budget)?;
    let report = RunReport {
        results: all.results.values().map(|r| ResultReport::new(&db, r, true)).collect(),
        comparison: Some(all.comparison),
    };
    if let Some(path) = &args.report {
        write(path, &render_report(&report))?;
    }
    let mut text = format!(
        "{template} scale {} seed {}: {} tuples, {} rules\n",
        args.scale,
        args.seed,
        db.loaded_len(),
        program.len()
    );
    let _ = writeln!(
        text,
        "{:<12} {:>7} {:>8} {:>10} {:>14} {:>10} {:>10}",
        "semantics", "size", "optimal", "eval_ms", "process_prov_ms", "solve_ms", "total_ms"
    );
    for r in all.results.values() {
        let ms = |d: Duration| d.as_secs_f64() * 1000.0;
        let _ = writeln!(
            text,
            "{:<12} {:>7} {:>8} {:>10.2} {:>14.2} {:>10.2} {:>10.2}",
            r.semantics.name(),
            r.deleted.len(),
            r.optimal,
            ms(r.phases.eval),
            ms(r.phases.process_provenance),
            ms(r.phases.solve),
            ms(r.wall_time)
        );
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    Ok(budget_exit(&all.results.values().collect::<Vec<_>>()))
}
