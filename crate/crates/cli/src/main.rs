//! `heavytail`: batch driver for the sample-path large deviation experiments.
//!
//! Exit codes: 0 on success, 1 when an experiment failed (the failure is
//! recorded in the manifest and the run continues), 2 on usage or
//! configuration errors.

mod commands;
mod config;
mod experiments;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "heavytail", version, about = "Sample-path large deviations for heavy-tailed Levy processes")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces every experiment seed by one derived from this value and
    /// the experiment name.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Worker threads for the Monte Carlo loops.
    #[arg(long, global = true, env = "HEAVYTAIL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MetricArg {
    J1,
    M1p,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Exact,
    Plain,
    Conditioned,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of the configuration in order.
    Run,
    /// Sample scaled paths and print one JSON record per path.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
    },
    /// Distance between two step paths read from stdin as a JSON array.
    Distance {
        #[arg(long, value_enum, default_value = "j1")]
        metric: MetricArg,
        /// Graph sampling density for M1'.
        #[arg(long, default_value_t = heavytail::cadlag::DEFAULT_DENSITY)]
        density: f64,
    },
    /// Rate functions of a step path read from stdin.
    Rate,
    /// Probability of an event at one n.
    Estimate {
        /// Event as JSON, e.g. '{"name":"e","kind":"kth_jump_at_least","k":1,"x":1}'.
        #[arg(long)]
        event: String,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value = "plain")]
        method: MethodArg,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Number of conditioned jumps.
        #[arg(long)]
        j: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate the nine limit lemmas and write one CSV per lemma.
    VerifyLimits {
        #[arg(long, value_delimiter = ',', default_values_t = [100u64, 10_000, 1_000_000, 100_000_000])]
        n_grid: Vec<u64>,
    },
    /// Numerical evidence for the M1' counterexample.
    Counterexample {
        #[arg(long, value_delimiter = ',', default_values_t = [13u64, 100, 1000])]
        n_list: Vec<u64>,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarise the manifest of a previous run.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run => run::run(cli.config.as_deref(), cli.out.as_deref(), cli.seed_override),
        Command::Simulate { n, k, trials, seed, resolution } => {
            commands::simulate(cli.config.as_deref(), cli.out.as_deref(), n, k, trials, seed, resolution)
        }
        Command::Distance { metric, density } => commands::distance(metric, density),
        Command::Rate => commands::rate(),
        Command::Estimate { event, n, method, trials, j, seed } => {
            commands::estimate(cli.config.as_deref(), &event, n, method, trials, j, seed)
        }
        Command::VerifyLimits { n_grid } => commands::verify_limits(cli.config.as_deref(), cli.out.as_deref(), &n_grid),
        Command::Counterexample { n_list, trials, seed } => {
            commands::counterexample(cli.config.as_deref(), cli.out.as_deref(), &n_list, trials, seed)
        }
        Command::Report => commands::report(cli.out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
