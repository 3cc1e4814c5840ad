//! Command-line front end: simulate scan datasets, register them, evaluate
//! result files, and run the 1-D optimization demo.
//!
//! Exit codes are a stable contract for harnesses: 0 on success, 2 on input
//! errors (bad paths, malformed files, invalid flag values — clap usage
//! errors also exit with 2), and 3 when an optimization aborts on a
//! non-finite loss.

mod demo;
mod evaluate;
mod meta;
mod register;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// CLI failure carrying its exit code class.
pub(crate) enum CliError {
    /// Unusable input: missing or malformed files, invalid flag values.
    Input(String),
    /// Optimization hit a non-finite loss and aborted.
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(msg) | CliError::Numeric(msg) => msg,
        }
    }
}

impl From<deepmapping::error::Error> for CliError {
    fn from(e: deepmapping::error::Error) -> Self {
        match e {
            deepmapping::error::Error::NonFiniteLoss { epoch, value } => CliError::Numeric(
                format!("numerical abort at epoch {epoch}: loss became {value}"),
            ),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub(crate) type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "deepmapping",
    version,
    about = "Unsupervised 2D Lidar scan registration: simulate, register, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random occupancy world and a scan dataset along a random walk.
    Simulate(simulate::SimulateArgs),
    /// Register a dataset's scans and write pose, trace, and map artifacts.
    Register(register::RegisterArgs),
    /// Aggregate registration result files into a per-method report.
    Evaluate(evaluate::EvaluateArgs),
    /// Compare network-parameterized and direct gradient descent on a 1-D objective.
    Demo1d(demo::Demo1dArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Register(args) => register::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Demo1d(args) => demo::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
