//! `tracechain`: build, simulate, converge and verify trace-chain
//! approximations from a JSON config.
//!
//! Exit codes: 0 success, 2 invalid input, 3 failed check, 4 I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Assertion(String),
    #[error("{0}")]
    Io(String),
}

impl From<tracechain::Error> for CliError {
    fn from(e: tracechain::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 2,
            Self::Assertion(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "tracechain", version, about = "Trace-chain approximations of 1-d diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Omit the timestamp and wall-clock timings so outputs are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the chain (grid, masses, conductances, rates) as JSON.
    Build(Common),
    /// Simulate paths; writes path CSVs and aggregate statistics.
    Simulate(Common),
    /// Resolvent and energy convergence tables.
    Converge(Common),
    /// Property checks; exits 3 if any fails.
    Verify(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Build(c) => ("build", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Converge(c) => ("converge", c),
        Command::Verify(c) => ("verify", c),
    };
    if let Some(threads) = common.threads {
        if threads == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let loaded = commands::read_config(&common.config)?;
    let seed = common.seed.unwrap_or(loaded.config.simulation.seed);
    let ctx = Context {
        loaded,
        out: common.out.clone(),
        seed,
        timestamp: !common.no_timestamp,
    };
    let written = match cli.command {
        Command::Build(_) => commands::build(&ctx)?,
        Command::Simulate(_) => commands::simulate(&ctx)?,
        Command::Converge(_) => commands::converge(&ctx)?,
        Command::Verify(_) => {
            let (written, checks) = commands::verify(&ctx)?;
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(CliError::Assertion(format!("verify: {failed} check(s) failed")));
            }
            written
        }
    };
    for path in written {
        eprintln!("{name}: wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
