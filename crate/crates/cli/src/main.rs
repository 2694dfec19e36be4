use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use mobo_cli::{catalog, compare, run_experiment, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "mobo", version, about = "Multi-objective hyperparameter and architecture search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent evaluations; results do not depend on it.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Aggregate finished runs into summary tables.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bundled search spaces.
    Spaces {
        #[command(subcommand)]
        action: SpacesAction,
    },
    /// Available benchmarks.
    Benchmarks {
        #[command(subcommand)]
        action: BenchmarksAction,
    },
}

#[derive(Subcommand)]
enum SpacesAction {
    List,
    /// Print a space as JSON.
    Show {
        name: String,
        /// Dimension for `unit_box`.
        #[arg(long, default_value_t = 6)]
        dim: usize,
    },
}

#[derive(Subcommand)]
enum BenchmarksAction {
    List,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out, workers } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = run_experiment(&config, &RunOptions { seed, out, workers })?;
            println!(
                "{} evaluations, {:.1} virtual seconds, final hypervolume {}",
                outcome.evaluations, outcome.wall_time_s, outcome.final_hypervolume
            );
            println!("wrote {}", outcome.dir.display());
        }
        Command::Compare { runs, out } => {
            let rows = compare(&runs, &out)?;
            println!("{:<12} {:>14} {:>12} {:>6}", "method", "hypervolume", "std_error", "seeds");
            for r in rows {
                println!("{:<12} {:>14.6} {:>12.6} {:>6}", r.method, r.mean_hypervolume, r.std_error, r.n_seeds);
            }
            println!("wrote {}", out.display());
        }
        Command::Spaces { action: SpacesAction::List } => print!("{}", catalog::list_spaces()?),
        Command::Spaces { action: SpacesAction::Show { name, dim } } => println!("{}", catalog::show_space(&name, dim)?),
        Command::Benchmarks { action: BenchmarksAction::List } => print!("{}", catalog::list_benchmarks()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
