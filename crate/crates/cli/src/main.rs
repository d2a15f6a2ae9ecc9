//! `graphden` command-line interface.

mod denoise;
mod regspec;
mod report;
mod robustness;
mod smoothness;
mod training;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "graphden", version, about = "Graph signal denoising toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify the aggregator/denoiser equivalences on random graphs.
    Verify(verify::VerifyArgs),
    /// Per-node local label smoothness and its histogram.
    Smoothness(smoothness::SmoothnessArgs),
    /// Denoise a signal under a chosen regularizer.
    Denoise(denoise::DenoiseArgs),
    /// Train a node classifier; list-valued flags form a grid.
    Train(training::TrainArgs),
    /// Train and evaluate on a ladder of perturbed graphs.
    EvalRobustness(robustness::RobustnessArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(args) => verify::run(args),
        Command::Smoothness(args) => smoothness::run(args),
        Command::Denoise(args) => denoise::run(args),
        Command::Train(args) => training::run(args),
        Command::EvalRobustness(args) => robustness::run(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {:#}", err.error);
            err.exit_code()
        }
    }
}
