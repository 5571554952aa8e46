//! `vqcsim`: simulate a crowdsourced video-quality study, screen its raters,
//! aggregate opinion scores and evaluate quality predictors against them.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use vqcsim::{ConfigError, Execution};

use crate::commands::{AggregateArgs, EvaluateArgs, ProtocolArg, ScreenArgs, SimulateArgs};
use crate::config::Config;

#[derive(Parser)]
#[command(name = "vqcsim", version, about)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `study.rng_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured population; writes catalog, ratings and sessions.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// Override `population.n_subjects`.
        #[arg(long)]
        subjects: Option<usize>,
    },
    /// Reject unreliable subjects; writes the ledger and surviving ratings.
    Screen {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute MOS/DMOS and validation statistics from screened ratings.
    Aggregate {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictor files against a MOS table.
    Evaluate {
        #[arg(long)]
        mos: PathBuf,
        /// Predictor CSV as `name=path` or `path`; repeatable.
        #[arg(long = "predictor", required = true)]
        predictors: Vec<String>,
        /// Protocol for trainable feature files.
        #[arg(long, value_enum, default_value = "cv5")]
        protocol: ProtocolArg,
        /// Predictor whose scores grow with distortion; repeatable.
        #[arg(long)]
        distance: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execution(jobs: Option<usize>) -> Result<Execution> {
    match jobs {
        Some(0) => anyhow::bail!("--jobs must be at least 1"),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None if cfg!(feature = "parallel") => Ok(Execution::Parallel),
        None => Ok(Execution::Sequential),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    let seed = cfg.seed(cli.seed);
    let mode = execution(cli.jobs)?;
    match cli.command {
        Command::Simulate { out, subjects } => commands::simulate(&cfg, seed, mode, &SimulateArgs { out, subjects }),
        Command::Screen { ratings, sessions, out } => commands::screen_cmd(&cfg, &ScreenArgs { ratings, sessions, out }),
        Command::Aggregate { ratings, sessions, catalog, out } => {
            commands::aggregate(&cfg, seed, mode, &AggregateArgs { ratings, sessions, catalog, out })
        }
        Command::Evaluate { mos, predictors, protocol, distance, out } => {
            commands::evaluate(&cfg, seed, mode, &EvaluateArgs { mos, predictors, protocol, distance, out })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<ConfigError>() {
                Some(ConfigError::Violations(list)) => {
                    eprintln!("error: invalid configuration");
                    for v in list {
                        eprintln!("  - {v}");
                    }
                }
                _ => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}
