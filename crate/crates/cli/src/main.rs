//! `cellpath` command-line tool.
//!
//! Exit codes: 0 success, 1 front mismatch in `compare` or `bench`,
//! 2 usage or validation error, 3 arithmetic overflow, 4 database/map digest
//! mismatch.

use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use cellpath::bench::{amortization_table, run_campaign, BenchConfig};
use cellpath::cellmap::{build_database_with, BuildOptions, Database, Schedule};
use cellpath::oracle::{brute_force_paths, DEFAULT_CELL_BUDGET};
use cellpath::query::{coverage_ascii, coverage_pgm, front_csv, Query, QueryReport};
use cellpath::{CellCoord, Error, GoalRegion, GridMap, LabelSet, MoaSearch, ObjectiveVector};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cellpath", version, about = "Multi-objective grid path planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random map file.
    Genmap(GenmapArgs),
    /// Build the database for a map and goal region.
    Build(BuildArgs),
    /// Query a built database for one start cell.
    Query(QueryArgs),
    /// Compare database fronts against MOA* for one start cell.
    Compare(CompareArgs),
    /// Brute-force ground truth for a small map.
    Oracle(OracleArgs),
    /// Run a random-map campaign described by a JSON config.
    Bench(BenchArgs),
    /// Report multi-start timing: MOA* per start vs one database build.
    Amortize(AmortizeArgs),
}

#[derive(Args)]
struct GenmapArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long, default_value_t = 0.0)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    max_cost: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[arg(short, long = "map")]
    map: PathBuf,
    /// Forbid diagonal moves that squeeze past an obstacle corner.
    #[arg(long)]
    no_corner_cut: bool,
}

impl MapArgs {
    fn load(&self) -> Result<GridMap, CliError> {
        let text = fs::read(&self.map)
            .map_err(|e| CliError::usage(format!("{}: {e}", self.map.display())))?;
        Ok(GridMap::parse(&text)?.with_corner_cut(!self.no_corner_cut))
    }
}

#[derive(Args)]
struct GoalArgs {
    /// Goal cell `r,c` or rectangle `r1,c1:r2,c2`; repeat for a union.
    #[arg(long = "goal", required = true)]
    goal: Vec<String>,
}

impl GoalArgs {
    fn region(&self) -> Result<GoalRegion, CliError> {
        let mut region: Option<GoalRegion> = None;
        for spec in &self.goal {
            let part = match spec.split_once(':') {
                Some((a, b)) => GoalRegion::rect(a.parse()?, b.parse()?),
                None => GoalRegion::single(spec.parse()?),
            };
            region = Some(match region {
                Some(r) => r.union(&part),
                None => part,
            });
        }
        region.ok_or_else(|| CliError::usage("at least one --goal is required"))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Sweep,
    Worklist,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "worklist")]
    schedule: ScheduleArg,
    /// Worker threads for the sweep schedule (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Ascii,
    Pgm,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(short, long = "db")]
    db: PathBuf,
    #[command(flatten)]
    map: MapArgs,
    #[arg(long)]
    start: CellCoord,
    /// Include exact path counts per front vector.
    #[arg(long)]
    count: bool,
    /// Include the coverage cell set.
    #[arg(long)]
    coverage: bool,
    /// Enumerate up to N paths (1000 when N is omitted).
    #[arg(long, num_args = 0..=1, default_missing_value = "1000")]
    paths: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long)]
    start: CellCoord,
    /// Use this database instead of building one.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Also compare the full sets of optimal paths.
    #[arg(long)]
    paths: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long)]
    start: CellCoord,
    /// Maximum number of free cells.
    #[arg(long, default_value_t = DEFAULT_CELL_BUDGET)]
    budget: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Zero all wall-clock fields.
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Args)]
struct AmortizeArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long, default_value_t = 5)]
    samples: usize,
    /// Fail unless the database build takes at most 10x one MOA* run.
    #[arg(long)]
    regression_gate: bool,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Overflow => 3,
            Error::DigestMismatch { .. } => 4,
            _ => 2,
        };
        Self { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(e.to_string())
    }
}

fn emit(out: Option<&FsPath>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes)
            .map_err(|e| CliError::usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn genmap(a: GenmapArgs) -> Result<u8, CliError> {
    let map = GridMap::random(a.seed, a.rows, a.cols, a.density, a.max_cost)?;
    emit(a.out.as_deref(), map.serialize().as_bytes())?;
    Ok(0)
}

fn build(a: BuildArgs) -> Result<u8, CliError> {
    let map = a.map.load()?;
    let goal = a.goal.region()?;
    let opts = BuildOptions {
        schedule: match a.schedule {
            ScheduleArg::Sweep => Schedule::Sweep,
            ScheduleArg::Worklist => Schedule::Worklist,
        },
        threads: a.threads,
    };
    let db = build_database_with(&map, &goal, &opts)?;
    emit(Some(&a.out), &db.save()?)?;
    let summary = serde_json::json!({
        "iterations": db.iterations(),
        "free_cells": map.free_count(),
    });
    println!("{summary}");
    Ok(0)
}

fn load_db(path: &FsPath) -> Result<Database, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(Database::load(&bytes)?)
}

fn query(a: QueryArgs) -> Result<u8, CliError> {
    let map = a.map.load()?;
    let db = load_db(&a.db)?;
    let q = Query::new(&db, &map)?;
    let front = q.pareto_front_at(a.start)?.clone();
    let reachable = !front.is_empty();
    let coverage = || -> Result<Vec<CellCoord>, CliError> {
        Ok(if reachable { q.coverage(a.start)? } else { Vec::new() })
    };
    let bytes = match a.format {
        Format::Json => {
            let mut report = QueryReport::front_only(a.start, front);
            if a.count {
                report = report.with_counts(&q.count_paths(a.start)?);
            }
            if a.coverage {
                report = report.with_coverage(coverage()?);
            }
            if let Some(limit) = a.paths {
                let (paths, truncated) = q.enumerate_paths(a.start, Some(limit))?;
                report = report.with_paths(paths, truncated);
            }
            report.to_json()?.into_bytes()
        }
        Format::Csv => front_csv(&front).into_bytes(),
        Format::Ascii => coverage_ascii(&map, db.goal(), a.start, &coverage()?).into_bytes(),
        Format::Pgm => coverage_pgm(&map, &coverage()?),
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(0)
}

fn difference(a: &LabelSet, b: &LabelSet) -> Vec<ObjectiveVector> {
    a.iter().filter(|v| !b.contains(v)).copied().collect()
}

fn compare(a: CompareArgs) -> Result<u8, CliError> {
    let map = a.map.load()?;
    let goal = a.goal.region()?;
    let db = match &a.db {
        Some(p) => load_db(p)?,
        None => cellpath::build_database(&map, &goal)?,
    };
    if db.goal() != &goal {
        return Err(CliError::usage("database was built for a different goal region"));
    }
    let q = Query::new(&db, &map)?;
    let db_front = q.pareto_front_at(a.start)?;
    let search = MoaSearch::run(&map, a.start, &goal)?;
    let mut equal = search.front() == db_front;
    let mut report = serde_json::json!({
        "start": a.start,
        "cellmap_front": db_front,
        "moa_front": search.front(),
        "only_in_cellmap": difference(db_front, search.front()),
        "only_in_moa": difference(search.front(), db_front),
    });
    if a.paths {
        let (mut db_paths, _) = q.enumerate_paths(a.start, None)?;
        db_paths.sort_unstable_by(|x, y| (x.1, &x.0).cmp(&(y.1, &y.0)));
        let paths_equal = db_paths == search.paths();
        report["paths_equal"] = paths_equal.into();
        report["cellmap_paths"] = db_paths.len().into();
        report["moa_paths"] = search.paths().len().into();
        equal &= paths_equal;
    }
    report["equal"] = equal.into();
    println!("{}", serde_json::to_string(&report)?);
    Ok(if equal { 0 } else { 1 })
}

fn oracle(a: OracleArgs) -> Result<u8, CliError> {
    let map = a.map.load()?;
    let goal = a.goal.region()?;
    let (res, _) = brute_force_paths(&map, a.start, &goal, a.budget)?;
    emit(None, QueryReport::from_result(&res).to_json()?.as_bytes())?;
    Ok(0)
}

fn bench(a: BenchArgs) -> Result<u8, CliError> {
    let text = fs::read(&a.config)
        .map_err(|e| CliError::usage(format!("{}: {e}", a.config.display())))?;
    let cfg: BenchConfig = serde_json::from_slice(&text)?;
    let mut report = run_campaign(&cfg, a.threads)?;
    if a.omit_timing {
        report = report.without_timing();
    }
    if let Some(p) = &a.csv {
        emit(Some(p), report.to_csv().as_bytes())?;
    }
    emit(a.out.as_deref(), report.to_json()?.as_bytes())?;
    if !report.passed() {
        eprintln!(
            "front mismatch on {} of {} maps",
            report.total - report.maps_passed,
            report.total
        );
        return Ok(1);
    }
    Ok(0)
}

fn amortize(a: AmortizeArgs) -> Result<u8, CliError> {
    let map = a.map.load()?;
    let goal = a.goal.region()?;
    let table = amortization_table(&map, &goal, a.samples)?;
    if table.clamped {
        eprintln!("warning: only {} free non-goal cells, sampling all of them", table.sampled_starts);
    }
    println!("{}", serde_json::to_string(&table)?);
    if a.regression_gate && table.build_to_moa_ratio() > 10.0 {
        eprintln!("regression gate: build/MOA* ratio {:.2} exceeds 10", table.build_to_moa_ratio());
        return Ok(1);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Genmap(a) => genmap(a),
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Compare(a) => compare(a),
        Command::Oracle(a) => oracle(a),
        Command::Bench(a) => bench(a),
        Command::Amortize(a) => amortize(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
