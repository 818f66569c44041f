//! `nhsim` — experiment runner for the non-unitary dynamics toolkit.
//!
//! Exit codes: 0 success, 1 config error, 2 numerical failure, 3 acceptance
//! failure (the experiment ran but a checked bound was violated).

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentKind;
use experiments::RunError;

#[derive(Parser)]
#[command(
    name = "nhsim",
    version,
    about = "Replayable numerical experiments for postselected non-unitary dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json, CSV tables, and plots.
    Run {
        /// Path to a JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Master RNG seed; overrides `rng_seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for report artifacts.
        #[arg(long, default_value = "nhsim-out")]
        out: PathBuf,
        /// Also emit SVG plots.
        #[arg(long)]
        plots: bool,
    },
    /// Schema-check a config without running anything.
    Validate {
        /// Path to a JSON experiment config.
        #[arg(long)]
        config: PathBuf,
    },
    /// List the available experiment kinds.
    ListExperiments,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for kind in ExperimentKind::ALL {
                println!("{:24} {}", kind.name(), kind.summary());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_and_resolve(&config, None) {
            Ok(effective) => {
                println!(
                    "valid: {} (seed {}, hash {})",
                    effective.experiment.name(),
                    effective.rng_seed,
                    report::config_hash(&effective)
                );
                ExitCode::SUCCESS
            }
            Err(msg) => {
                eprintln!("config error: {msg}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run { config, seed, out, plots } => {
            let effective = match load_and_resolve(&config, seed) {
                Ok(e) => e,
                Err(msg) => {
                    eprintln!("config error: {msg}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let outcome = match experiments::run_experiment(&effective) {
                Ok(o) => o,
                Err(RunError::Numerical(msg)) => {
                    eprintln!(
                        "numerical failure in {}: {msg}",
                        effective.experiment.name()
                    );
                    return ExitCode::from(EXIT_NUMERICAL);
                }
            };
            match report::write_artifacts(&out, &effective, &outcome, plots) {
                Ok(path) => {
                    println!(
                        "{}: {} — report at {}",
                        effective.experiment.name(),
                        if outcome.passed { "pass" } else { "FAIL" },
                        path.display()
                    );
                    if outcome.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_ACCEPTANCE)
                    }
                }
                Err(msg) => {
                    eprintln!("cannot write report: {msg}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
    }
}

fn load_and_resolve(
    path: &std::path::Path,
    seed: Option<u64>,
) -> Result<config::EffectiveConfig, String> {
    let file = config::load(path)?;
    config::resolve(&file, seed)
}
