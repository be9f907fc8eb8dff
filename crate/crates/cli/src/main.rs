//! `leocf`: runs coverage, DSS and capacity experiments described in a JSON
//! file and writes CSV curves plus a JSON run manifest.

// Negated comparisons in validation also catch NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{ConfigFile, Issue};
use run::{OutputRecord, RunError};

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "leocf", version, about = "Cell-free LEO downlink coverage and capacity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file.
    Run {
        config: PathBuf,
        /// Output directory; defaults to $LEOCF_OUT_DIR, then ./leocf-out.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for Monte Carlo trials.
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed for every experiment, overriding the file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

enum LoadError {
    Io(String),
    Parse(String),
}

fn load(path: &Path) -> Result<ConfigFile, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        LoadError::Parse(format!(
            "{}: parse error at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn load_or_exit(path: &Path) -> Result<ConfigFile, ExitCode> {
    match load(path) {
        Ok(f) => Ok(f),
        Err(LoadError::Io(m)) => {
            eprintln!("error: cannot read {m}");
            Err(ExitCode::from(EXIT_PARSE))
        }
        Err(LoadError::Parse(m)) => {
            eprintln!("error: {m}");
            Err(ExitCode::from(EXIT_PARSE))
        }
    }
}

fn report(issues: &[Issue]) {
    for i in issues {
        eprintln!("invalid: {i}");
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    schema_version: u32,
    config_path: String,
    threads: usize,
    seed_override: Option<u64>,
    wall_time_s: f64,
    partial: bool,
    error: Option<String>,
    experiments: Vec<run::ResolvedExperiment<'a>>,
    outputs: Vec<OutputRecord>,
}

fn cmd_run(path: &Path, out_dir: Option<PathBuf>, threads: Option<usize>, seed: Option<u64>) -> ExitCode {
    let file = match load_or_exit(path) {
        Ok(f) => f,
        Err(code) => return code,
    };
    let issues = config::validate(&file);
    if !issues.is_empty() {
        report(&issues);
        return ExitCode::from(EXIT_INVALID);
    }
    if let Some(n) = threads {
        if n < 1 {
            eprintln!("invalid: --threads must be at least 1");
            return ExitCode::from(EXIT_INVALID);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }
    let dir = run::output_dir(out_dir);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return ExitCode::from(EXIT_IO);
    }
    let start = Instant::now();
    let mut outputs = Vec::new();
    let mut failure: Option<RunError> = None;
    let mut resolved = Vec::new();
    for e in &file.experiments {
        let s = seed.unwrap_or(e.seed);
        resolved.push(run::resolve_for_manifest(e, s));
        eprintln!("running {}", e.name);
        let outcome = run::run_experiment(e, s, &dir);
        outputs.extend(outcome.records);
        if let Some(err) = outcome.error {
            eprintln!("error: experiment {}: {err}", e.name);
            failure = Some(err);
            break;
        }
    }
    let manifest = Manifest {
        tool: "leocf",
        version: env!("CARGO_PKG_VERSION"),
        core_version: leocf_core::VERSION,
        schema_version: run::SCHEMA_VERSION,
        config_path: path.display().to_string(),
        threads: rayon::current_num_threads(),
        seed_override: seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        partial: failure.is_some(),
        error: failure.as_ref().map(|e| e.to_string()),
        experiments: resolved,
        outputs,
    };
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    if let Err(e) = std::fs::write(&manifest_path, text + "\n") {
        eprintln!("error: cannot write {}: {e}", manifest_path.display());
        return ExitCode::from(EXIT_IO);
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(RunError::Numeric(_)) => ExitCode::from(EXIT_NUMERIC),
        Some(RunError::Io(_)) => ExitCode::from(EXIT_IO),
    }
}

fn cmd_validate(path: &Path) -> ExitCode {
    let file = match load_or_exit(path) {
        Ok(f) => f,
        Err(code) => return code,
    };
    let issues = config::validate(&file);
    if issues.is_empty() {
        println!("{}: ok, {} experiment(s)", path.display(), file.experiments.len());
        ExitCode::SUCCESS
    } else {
        report(&issues);
        ExitCode::from(EXIT_INVALID)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out_dir,
            threads,
            seed,
        } => cmd_run(&config, out_dir, threads, seed),
        Command::Validate { config } => cmd_validate(&config),
    }
}
