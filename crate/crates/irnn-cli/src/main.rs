//! `irnn` — train and explain interpretable recurrent models on
//! irregularly sampled time series.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irnn_core::Error;

/// Exit codes: 0 success, 2 usage/config error, 3 data error,
/// 4 numeric error.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Unsupported(_) => 2,
        Error::Data(_) | Error::Parse { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 3,
        Error::Dimension { .. }
        | Error::Numeric(_)
        | Error::Contract(_)
        | Error::UndefinedMetric(_) => 4,
    }
}

#[derive(Parser)]
#[command(
    name = "irnn",
    about = "Interpretable recurrent models for irregular time series",
    version
)]
struct Cli {
    /// Worker threads for batch/sample parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset with known risk functions.
    Synth(commands::synth::SynthArgs),
    /// Convert/filter raw data and freeze the test holdout.
    Prepare(commands::prepare::PrepareArgs),
    /// Train a model over several train/validation split seeds.
    Train(commands::train::TrainArgs),
    /// Evaluate trained weights on a prepared dataset split.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Export contribution traces, importance, risk and decay curves.
    Explain(commands::explain::ExplainArgs),
    /// Assemble per-model summaries into one comparison table.
    Compare(commands::compare::CompareArgs),
}

/// Shared output-directory argument.
#[derive(Args)]
pub struct OutDir {
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Prepare(args) => commands::prepare::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Explain(args) => commands::explain::run(args),
        Command::Compare(args) => commands::compare::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
