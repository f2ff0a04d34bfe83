//! `nhframes`: simulations, Cartan reductions, Hamiltonization checks and
//! the acceptance suite from the command line.
//!
//! Exit codes: 0 ok, 2 configuration, 3 numerical failure, 4 structural
//! precondition (e.g. a distribution that is not Engel).

mod cartan;
mod check;
mod config;
mod hamiltonize;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nhframes::error::ErrorClass;
use nhframes::{DiffEngine, Error, Result};

#[derive(Parser)]
#[command(name = "nhframes", version, about = "Moving-frame numerics for nonholonomic systems")]
struct Cli {
    /// Worker threads for grid sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Differentiation engine, `ad` or `fd`; NH_ENGINE takes precedence.
    #[arg(long, global = true)]
    engine: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a system and write trajectory.csv and manifest.json.
    Simulate(simulate::SimulateArgs),
    /// Cartan reduction of an Engel structure: growth, torsion, symmetry verdict.
    Cartan(cartan::CartanArgs),
    /// Conformal Hamiltonization obstruction report.
    Hamiltonize(hamiltonize::HamiltonizeArgs),
    /// Run the acceptance criteria.
    Check(check::CheckArgs),
}

/// Flags shared by all commands.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for sampled points and initial conditions.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Engine from NH_ENGINE, else the flag, else the config, else AD.
pub fn resolve_engine(flag: Option<&str>, config: Option<&str>) -> Result<DiffEngine> {
    if let Ok(v) = std::env::var("NH_ENGINE") {
        return DiffEngine::from_env().ok_or_else(|| Error::Invalid(format!("NH_ENGINE = `{v}` must be `ad` or `fd`")));
    }
    match flag.or(config) {
        None | Some("ad") => Ok(DiffEngine::Ad),
        Some("fd") => Ok(DiffEngine::fd()),
        Some(other) => Err(Error::Invalid(format!("unknown engine `{other}`"))),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Invalid("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    }
    let engine = cli.engine.as_deref();
    match cli.cmd {
        Cmd::Simulate(a) => simulate::run(a, engine).map(|_| ExitCode::SUCCESS),
        Cmd::Cartan(a) => cartan::run(a, engine).map(|_| ExitCode::SUCCESS),
        Cmd::Hamiltonize(a) => hamiltonize::run(a, engine).map(|_| ExitCode::SUCCESS),
        Cmd::Check(a) => check::run(a, engine),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Numerical => 3,
                ErrorClass::Structural => 4,
            })
        }
    }
}
