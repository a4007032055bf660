//! Subcommand implementations. Each returns a process exit code; exit codes
//! are the stable scripting interface:
//!
//! * 0 — property holds (deterministic / idempotent / command succeeded)
//! * 1 — property violated, counterexample reported
//! * 2 — usage, parse, or model error
//! * 3 — solver failure or exploration budget exceeded
//! * 4 — idempotence check refused because the manifest is non-deterministic

use std::io::Read;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde_json::json;

use manivet::checker::{
    check_determinism, check_idempotence, CheckError, CheckOptions, DeterminismVerdict,
    IdempotenceVerdict,
};
use manivet::manifest::{load, ResourceGraph};
use manivet::resources::{CompileEnv, PackageDb};
use manivet::symbolic::{SolverConfig, SolverSession};

use crate::output::{
    self, counterexample_to_json, determinism_text, idem_counterexample_to_json,
    idempotence_text, stats_to_json, Format,
};
use crate::synth;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BLOCKED: i32 = 4;

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Solver executable (default: $MANIVET_SOLVER or `z3` on PATH).
    #[arg(long)]
    pub solver_path: Option<String>,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
    /// Write each solver query to this directory as a standalone .smt2 file.
    #[arg(long, value_name = "DIR")]
    pub emit_smt: Option<PathBuf>,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, String> {
        let mut config = SolverConfig::default();
        if let Some(path) = &self.solver_path {
            config.path = path.clone();
        }
        config.timeout_ms = Some(self.timeout.saturating_mul(1000));
        if let Some(dir) = &self.emit_smt {
            std::fs::create_dir_all(dir)
                .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
            config.transcript_dir = Some(dir.clone());
        }
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Disable partial-order reduction (explore every valid order).
    #[arg(long)]
    pub no_por: bool,
    /// Disable folding of order-independent paths.
    #[arg(long)]
    pub no_prune: bool,
    /// Disable resource elimination.
    #[arg(long)]
    pub no_elim: bool,
    /// Maximum branch expansions during order exploration.
    #[arg(long, default_value_t = 10_000)]
    pub max_branches: usize,
}

impl AnalysisArgs {
    fn options(&self) -> CheckOptions {
        CheckOptions {
            por: !self.no_por,
            prune: !self.no_prune,
            elim: !self.no_elim,
            max_branches: self.max_branches,
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Manifest file (.pp).
    pub manifest: PathBuf,
    /// Platform name; must match the package database.
    #[arg(long)]
    pub platform: Option<String>,
    /// Package database (JSON). Required when the manifest uses packages.
    #[arg(long, value_name = "FILE")]
    pub package_db: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub analyses: AnalysisArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write the resource graph in DOT format to this file.
    #[arg(long, value_name = "FILE")]
    pub graph_dot: Option<PathBuf>,
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn solver_failure(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_SOLVER
}

fn load_db(args: &CheckArgs) -> Result<PackageDb, String> {
    let db = match &args.package_db {
        None => PackageDb::new(args.platform.as_deref().unwrap_or("")),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            PackageDb::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
    };
    if let (Some(platform), Some(_)) = (&args.platform, &args.package_db) {
        if *platform != db.platform {
            return Err(format!(
                "platform {:?} does not match database platform {:?}",
                platform, db.platform
            ));
        }
    }
    Ok(db)
}

fn load_graph(args: &CheckArgs) -> Result<ResourceGraph, String> {
    let src = std::fs::read_to_string(&args.manifest)
        .map_err(|e| format!("cannot read {}: {e}", args.manifest.display()))?;
    let graph = load(&src).map_err(|e| format!("{}: {e}", args.manifest.display()))?;
    if let Some(path) = &args.graph_dot {
        std::fs::write(path, graph.to_dot())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(graph)
}

fn check_error_code(e: &CheckError) -> i32 {
    match e {
        CheckError::Compile(_) | CheckError::Graph(_) => EXIT_USAGE,
        CheckError::Equiv(_) | CheckError::Budget(_) => {
            EXIT_SOLVER
        }
    }
}

pub fn cmd_check(args: &CheckArgs) -> i32 {
    let db = match load_db(args) {
        Ok(db) => db,
        Err(e) => return usage(e),
    };
    let graph = match load_graph(args) {
        Ok(g) => g,
        Err(e) => return usage(e),
    };
    let config = match args.solver.config() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let mut session = match SolverSession::new(config) {
        Ok(s) => s,
        Err(e) => return solver_failure(e),
    };
    let env = CompileEnv { db: &db };
    let report = match check_determinism(&graph, &env, &args.analyses.options(), &mut session) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return check_error_code(&e);
        }
    };
    match args.format {
        Format::Text => print!("{}", determinism_text(&report.verdict, &report.stats)),
        Format::Json => {
            let (verdict, cx) = match &report.verdict {
                DeterminismVerdict::Deterministic => ("deterministic", serde_json::Value::Null),
                DeterminismVerdict::NonDeterministic(cx) => {
                    ("non-deterministic", counterexample_to_json(cx))
                }
            };
            let doc = json!({
                "schema": output::SCHEMA_VERSION,
                "command": "check",
                "manifest": args.manifest.display().to_string(),
                "verdict": verdict,
                "counterexample": cx,
                "stats": stats_to_json(&report.stats),
            });
            println!("{doc:#}");
        }
    }
    match report.verdict {
        DeterminismVerdict::Deterministic => EXIT_OK,
        DeterminismVerdict::NonDeterministic(_) => EXIT_VIOLATION,
    }
}

pub fn cmd_idempotence(args: &CheckArgs) -> i32 {
    let db = match load_db(args) {
        Ok(db) => db,
        Err(e) => return usage(e),
    };
    let graph = match load_graph(args) {
        Ok(g) => g,
        Err(e) => return usage(e),
    };
    let config = match args.solver.config() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let mut session = match SolverSession::new(config) {
        Ok(s) => s,
        Err(e) => return solver_failure(e),
    };
    let env = CompileEnv { db: &db };

    // Idempotence of "the" outcome only makes sense when all orders agree.
    let det = match check_determinism(&graph, &env, &args.analyses.options(), &mut session) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return check_error_code(&e);
        }
    };
    if let DeterminismVerdict::NonDeterministic(cx) = &det.verdict {
        match args.format {
            Format::Text => {
                print!(
                    "cannot check idempotence: the manifest is non-deterministic\n{}",
                    determinism_text(&det.verdict, &det.stats)
                );
            }
            Format::Json => {
                let doc = json!({
                    "schema": output::SCHEMA_VERSION,
                    "command": "idempotence",
                    "manifest": args.manifest.display().to_string(),
                    "verdict": "blocked-by-nondeterminism",
                    "counterexample": counterexample_to_json(cx),
                });
                println!("{doc:#}");
            }
        }
        return EXIT_BLOCKED;
    }

    let verdict = match check_idempotence(&graph, &env, &mut session) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return check_error_code(&e);
        }
    };
    match args.format {
        Format::Text => match &verdict {
            IdempotenceVerdict::Idempotent => print!("{}", idempotence_text(None)),
            IdempotenceVerdict::NonIdempotent(cx) => print!("{}", idempotence_text(Some(cx))),
        },
        Format::Json => {
            let (v, cx) = match &verdict {
                IdempotenceVerdict::Idempotent => ("idempotent", serde_json::Value::Null),
                IdempotenceVerdict::NonIdempotent(cx) => {
                    ("non-idempotent", idem_counterexample_to_json(cx))
                }
            };
            let doc = json!({
                "schema": output::SCHEMA_VERSION,
                "command": "idempotence",
                "manifest": args.manifest.display().to_string(),
                "verdict": v,
                "counterexample": cx,
            });
            println!("{doc:#}");
        }
    }
    match verdict {
        IdempotenceVerdict::Idempotent => EXIT_OK,
        IdempotenceVerdict::NonIdempotent(_) => EXIT_VIOLATION,
    }
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Package database file to create or update.
    #[arg(long, value_name = "FILE")]
    pub db: PathBuf,
    /// Platform the database describes.
    #[arg(long)]
    pub platform: String,
    /// Package name to add or replace.
    #[arg(long)]
    pub name: String,
    /// File listing (one absolute path per line); `-` reads stdin.
    #[arg(long, value_name = "FILE", default_value = "-")]
    pub listing: String,
    /// Package dependency; repeatable.
    #[arg(long = "depends", value_name = "PKG")]
    pub depends: Vec<String>,
}

pub fn cmd_import_packages(args: &ImportArgs) -> i32 {
    let mut db = if args.db.exists() {
        let text = match std::fs::read_to_string(&args.db) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read {}: {e}", args.db.display())),
        };
        match PackageDb::from_json(&text) {
            Ok(db) => db,
            Err(e) => return usage(format!("{}: {e}", args.db.display())),
        }
    } else {
        PackageDb::new(&args.platform)
    };
    if db.platform != args.platform {
        return usage(format!(
            "database is for platform {:?}, not {:?}",
            db.platform, args.platform
        ));
    }

    let listing = if args.listing == "-" {
        let mut buf = String::new();
        if let Err(e) = std::io::stdin().read_to_string(&mut buf) {
            return usage(format!("cannot read stdin: {e}"));
        }
        buf
    } else {
        match std::fs::read_to_string(&args.listing) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read {}: {e}", args.listing)),
        }
    };

    if let Err(e) = db.ingest_package_listing(&args.name, &listing, args.depends.clone()) {
        return usage(e);
    }
    if let Err(e) = db.validate() {
        return usage(e);
    }

    // Write-temp-then-rename so a crash never leaves a truncated database.
    let dir = args.db.parent().unwrap_or_else(|| std::path::Path::new("."));
    let result = tempfile::NamedTempFile::new_in(dir)
        .and_then(|mut f| {
            std::io::Write::write_all(&mut f, db.to_json().as_bytes())?;
            f.persist(&args.db).map_err(|e| e.error)
        })
        .map(|_| ());
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => usage(format!("cannot write {}: {e}", args.db.display())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchMode {
    /// n unordered packages shipping the same file: non-deterministic,
    /// found at the first differing pair.
    Conflict,
    /// The same plus a final file resource overwriting the shared path:
    /// deterministic, forcing an unsatisfiability proof per order pair.
    Deterministic,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "deterministic")]
    pub mode: BenchMode,
    /// Benchmark sizes (number of interfering resources).
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    pub sizes: Vec<usize>,
    /// Runs per size; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

pub fn cmd_bench_synthetic(args: &BenchArgs) -> i32 {
    if args.sizes.contains(&0) || args.runs == 0 {
        return usage("sizes and runs must be at least 1");
    }
    let config = match args.solver.config() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let deterministic = args.mode == BenchMode::Deterministic;
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let db = synth::synthetic_db(n);
        let graph = match load(&synth::synthetic_manifest(n, deterministic)) {
            Ok(g) => g,
            Err(e) => return usage(e),
        };
        let mut times_ms = Vec::new();
        let mut verdict = "deterministic";
        for _ in 0..args.runs {
            let mut session = match SolverSession::new(config.clone()) {
                Ok(s) => s,
                Err(e) => return solver_failure(e),
            };
            let start = Instant::now();
            let report = match check_determinism(
                &graph,
                &CompileEnv { db: &db },
                &CheckOptions::default(),
                &mut session,
            ) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return check_error_code(&e);
                }
            };
            times_ms.push(start.elapsed().as_secs_f64() * 1000.0);
            if let DeterminismVerdict::NonDeterministic(_) = report.verdict {
                verdict = "non-deterministic";
            }
        }
        times_ms.sort_by(|a, b| a.total_cmp(b));
        let median = times_ms[times_ms.len() / 2];
        rows.push((n, verdict, median, times_ms));
    }
    match args.format {
        Format::Text => {
            for (n, verdict, median, times) in &rows {
                let runs: Vec<String> = times.iter().map(|t| format!("{t:.1}")).collect();
                println!(
                    "n={n}  verdict={verdict}  median_ms={median:.1}  runs_ms=[{}]",
                    runs.join(", ")
                );
            }
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(n, verdict, median, times)| {
                    json!({ "n": n, "verdict": verdict, "median_ms": median, "runs_ms": times })
                })
                .collect();
            let doc = json!({
                "schema": output::SCHEMA_VERSION,
                "command": "bench-synthetic",
                "mode": if deterministic { "deterministic" } else { "conflict" },
                "results": rows,
            });
            println!("{doc:#}");
        }
    }
    EXIT_OK
}
