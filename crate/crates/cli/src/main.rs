//! `wlab`: run flows, verification suites and the reference model from the
//! command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad config or flags,
//! 3 numerical failure (or a truncated run under `--strict`).

mod output;
mod reference;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "wlab", version, about = "W-entropy verification lab on weighted flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the flow of a scenario config and write CSVs.
    Simulate(SimulateArgs),
    /// Run identity/inequality checks (a config's, or the default suite).
    Verify(VerifyArgs),
    /// Sample the Gaussian reference model.
    Reference(ReferenceArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: the config's `output`, else `wlab-out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit 3 if the flow is truncated.
    #[arg(long)]
    pub strict: bool,
    /// Also write every output snapshot to fields/.
    #[arg(long)]
    pub dump_fields: bool,
    /// Seed for the `random` initial-data preset.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write a gnuplot script next to the CSVs.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, conflicts_with = "suite", required_unless_present = "suite")]
    pub config: Option<PathBuf>,
    /// Named suite; only `default` exists.
    #[arg(long)]
    pub suite: Option<String>,
    /// Restrict to check ids or instance names (repeatable, comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Treat inconclusive checks as failures.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Debug: flip the divergence sign in the model transport residual.
    #[arg(long)]
    pub wrong_sign: bool,
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Args, Debug)]
pub struct ReferenceArgs {
    /// Coupling c: a positive number, `inf` (u = t) or `0` (u = √(T − t), T = t-end).
    #[arg(long, default_value = "1", allow_negative_numbers = true)]
    pub c: String,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub u0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub up0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// CSV path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed command and its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
    pub fn numeric(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<wlab_core::Error> for Failure {
    fn from(e: wlab_core::Error) -> Self {
        match e {
            wlab_core::Error::Config(_) | wlab_core::Error::Domain(_) => Failure::usage(e.to_string()),
            wlab_core::Error::Numeric(_) => Failure::numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Reference(a) => reference::run(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("wlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
