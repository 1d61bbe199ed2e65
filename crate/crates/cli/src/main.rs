//! `pset`: draw Boltzmann-distributed subsets of combinatorial structures,
//! tune measure parameters to expected-size targets, verify the sampler
//! statistically, export rescaled diagram profiles next to their limit
//! curves, and benchmark sampling throughput.

mod commands;

use std::io;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pset_core::Error as CoreError;

/// Relative tolerance used whenever a subcommand tunes z to a size target.
const TUNING_REL_TOL: f64 = 1e-3;

#[derive(Parser)]
#[command(
    name = "pset",
    version,
    about = "Boltzmann sampling of powersets of combinatorial structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw subsets and write one record per sample.
    Sample(commands::SampleArgs),
    /// Tune measure parameters to expected-size targets and report them.
    Calibrate(commands::CalibrateArgs),
    /// Run the statistical verification suites against the sampler.
    Verify(commands::VerifyArgs),
    /// Export one rescaled diagram next to its limit curve.
    Shape(commands::ShapeArgs),
    /// Time the sampler across a list of size targets.
    Bench(commands::BenchArgs),
}

/// CLI failure carrying the exit-code contract: 2 for configuration and
/// environment errors, 3 when a rejection budget is exhausted, 4 when a
/// level count contradicts its declared bound. Verification failures exit
/// 1 without passing through this type.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::RetriesExhausted { .. }) => 3,
            CliError::Core(CoreError::BoundViolation { .. }) => 4,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => commands::run_sample(&args),
        Command::Calibrate(args) => commands::run_calibrate(&args),
        Command::Verify(args) => commands::run_verify(&args),
        Command::Shape(args) => commands::run_shape(&args),
        Command::Bench(args) => commands::run_bench(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
