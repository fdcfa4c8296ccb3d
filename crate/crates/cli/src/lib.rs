//! Command-line front end: scenario parsing, run dispatch and artifacts.

pub mod run;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::run::{run_scenario, RunError};
use crate::scenario::{parse_scenario, RunKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kineq", version, about = "Atomic-measure lab for dψ/dt + ψ = 𝐏ψ")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the collision operator to a fixed point.
    Fixpoint(CommonArgs),
    /// Integrate the evolution equation in time.
    Evolve(CommonArgs),
    /// Distances between two measures.
    Metrics(CommonArgs),
    /// Compare the operator with its Monte Carlo estimate.
    McCompare(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory; overrides `output_dir` in the scenario.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides `seed` in the scenario.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap. Affects speed only.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    fn parts(&self) -> (RunKind, &CommonArgs) {
        match self {
            Command::Fixpoint(a) => (RunKind::Fixpoint, a),
            Command::Evolve(a) => (RunKind::Evolve, a),
            Command::Metrics(a) => (RunKind::Metrics, a),
            Command::McCompare(a) => (RunKind::McCompare, a),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    scenario_file: String,
    scenario: &'a str,
    seed: u64,
    threads: usize,
    files: Vec<String>,
    exit_code: i32,
    errors: Vec<String>,
    timings: Timings,
}

#[derive(Serialize)]
struct Timings {
    wall_seconds: f64,
}

fn set_threads(n: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = n {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// Runs one command and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let start = Instant::now();
    let (kind, args) = cli.command.parts();
    let text = match std::fs::read_to_string(&args.scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", args.scenario.display());
            return EXIT_CONFIG;
        }
    };
    let scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(errs) => {
            for e in errs {
                eprintln!("{}: {e}", args.scenario.display());
            }
            return EXIT_CONFIG;
        }
    };
    if scenario.run.kind() != kind {
        eprintln!(
            "{}: range error: scenario run kind is {}, command is {}",
            args.scenario.display(),
            scenario.run.kind().name(),
            kind.name()
        );
        return EXIT_CONFIG;
    }
    for f in &scenario.findings {
        eprintln!("note: {f}");
    }
    let dir = args.output.clone().or_else(|| scenario.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("{}: {e}", dir.display());
        return EXIT_CONFIG;
    }
    set_threads(args.threads);
    let seed = args.seed.or(scenario.seed).unwrap_or(0);

    let (code, files, errors) = match run_scenario(&scenario, &dir, seed) {
        Ok(o) if o.failures.is_empty() => (EXIT_OK, o.files, Vec::new()),
        Ok(o) => (EXIT_NUMERICAL, o.files, o.failures),
        Err(e) => {
            let code = match e {
                RunError::Config(_) | RunError::Io(_) => EXIT_CONFIG,
                RunError::Numerical(_) => EXIT_NUMERICAL,
            };
            (code, Vec::new(), vec![e.to_string()])
        }
    };
    for e in &errors {
        eprintln!("{e}");
    }
    let manifest = Manifest {
        tool: "kineq",
        version: env!("CARGO_PKG_VERSION"),
        command: kind.name(),
        scenario_file: args.scenario.display().to_string(),
        scenario: &text,
        seed,
        threads: kineq_core::par::workers(),
        files,
        exit_code: code,
        errors,
        timings: Timings { wall_seconds: start.elapsed().as_secs_f64() },
    };
    if let Err(e) = write_manifest(&dir, &manifest) {
        eprintln!("manifest: {e}");
        return EXIT_CONFIG;
    }
    code
}

fn write_manifest(dir: &Path, m: &Manifest) -> std::io::Result<()> {
    let s = serde_json::to_string_pretty(m).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("manifest.json"), s + "\n")
}
