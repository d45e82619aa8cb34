mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Deterministic simulator of a universal learner over an enumerated
/// bytecode machine.
#[derive(Debug, Parser)]
#[command(name = "unilearn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; `-` for stdout. Defaults to a file in the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print programs in shortlex order, in the program text format.
    Enumerate {
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        start: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the batch learner once and print the selection report.
    Learn {
        #[command(flatten)]
        common: ConfigArgs,
        /// Sample size; defaults to the first n_grid entry.
        #[arg(long)]
        n: Option<u64>,
        /// Read the dataset from a file instead of sampling it.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Also write the selected predictor in program text format.
        #[arg(long)]
        predictor: Option<PathBuf>,
    },
    /// Run the dovetailed learner for a fixed number of total steps.
    SimulateContinuous {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        halt_after: u64,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Measure a learning curve over the config's n_grid.
    Curve {
        #[command(flatten)]
        common: ConfigArgs,
        /// `universal`, a built-in learner name, or `rate`.
        #[arg(long, default_value = "universal")]
        learner: String,
    },
    /// Fit a power law to a curve file.
    Fit {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
        /// Inclusive n window, `lo,hi`.
        #[arg(long, value_parser = commands::parse_window)]
        window: Option<(u64, u64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo check of the Gaussian maximal inequality and closed-form identities.
    VerifyBounds {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the sample size at which a planted learner starts being selected.
    Transient {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        index: u64,
    },
    /// Measure regret against the best candidate next to the closed-form bounds.
    Regret {
        #[command(flatten)]
        common: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
