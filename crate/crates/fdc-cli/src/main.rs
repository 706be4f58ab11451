use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fdc_cli::commands::{eval, fit, gen, grid};

/// Semi-supervised fuzzy clustering with fuzzy pairwise constraints.
#[derive(Parser)]
#[command(name = "fdc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the clustering model across random restarts.
    Fit(fit::FitArgs),
    /// Simulate a fuzzy-pairwise-constraint group from labeled data.
    GenConstraints(gen::GenArgs),
    /// Score predicted memberships against ground truth.
    Eval(eval::EvalArgs),
    /// Sweep alpha/beta (and kernel width) over a grid.
    Grid(grid::GridArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => fit::run(args),
        Command::GenConstraints(args) => gen::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Grid(args) => grid::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
