//! `sofim`: run, sweep and measure optimizers from TOML experiment files.
//!
//! Exit status is 0 on success, 1 for configuration errors and 2 when a
//! correctly configured command fails while running.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use sofim::harness::OptimizerId;

use crate::config::{ConfigError, ExperimentFile, OUTPUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "sofim",
    version,
    about = "Experiments with the SOFIM optimizer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment file (TOML).
    config: PathBuf,
    /// Override a config value after the file is read, e.g. `hyperparameters.rho=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory for all outputs; takes precedence over `output_dir` in the file.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train once with the configured optimizer.
    Run(ExperimentArgs),
    /// Learning-rate grid search, selecting the best point.
    Sweep(ExperimentArgs),
    /// SOFIM over the `[grid] rho` values (default 1, 0.5, 0.1).
    RhoSweep(ExperimentArgs),
    /// Median per-step update time across dimensions.
    Scaling {
        #[arg(long = "optimizer", value_parser = parse_optimizer, default_values = ["sofim", "sgd_momentum"])]
        optimizers: Vec<OptimizerId>,
        /// Smallest dimension; each following one doubles it.
        #[arg(long, default_value_t = 1000)]
        min_dim: usize,
        #[arg(long, default_value_t = 10)]
        doublings: u32,
        #[arg(long, default_value_t = 11)]
        repeats: usize,
        #[arg(long, env = OUTPUT_DIR_ENV)]
        output_dir: Option<PathBuf>,
    },
    /// Finite-difference checks of every built-in problem's gradient.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_optimizer(raw: &str) -> Result<OptimizerId, String> {
    toml::Value::String(raw.to_string())
        .try_into()
        .map_err(|_| format!("unknown optimizer {raw:?}; expected sofim, sgd_momentum, adam, ngd_oracle or newton_oracle"))
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn experiment(
    args: &ExperimentArgs,
    plan: fn(&ExperimentFile) -> Result<commands::Plan, ConfigError>,
) -> Result<(), Failure> {
    let file = config::load(&args.config, &args.overrides)?;
    let plan = plan(&file)?;
    let dir = config::output_dir(args.output_dir.as_deref(), file.output_dir.as_deref());
    commands::execute(plan, &file, &dir).map_err(Failure::Runtime)
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(args) => experiment(&args, commands::plan_run),
        Command::Sweep(args) => experiment(&args, commands::plan_sweep),
        Command::RhoSweep(args) => experiment(&args, commands::plan_rho_sweep),
        Command::Scaling {
            optimizers,
            min_dim,
            doublings,
            repeats,
            output_dir,
        } => {
            if min_dim == 0 || repeats == 0 {
                return Err(Failure::Config(
                    "--min-dim and --repeats must be at least 1".into(),
                ));
            }
            let dims: Vec<usize> = (0..=doublings)
                .map(|k| min_dim.checked_shl(k).filter(|d| d >> k == min_dim))
                .collect::<Option<_>>()
                .ok_or_else(|| Failure::Config("--doublings overflows the dimension".into()))?;
            let dir = config::output_dir(output_dir.as_deref(), None::<&Path>);
            commands::scaling(&optimizers, &dims, repeats, &dir).map_err(Failure::Runtime)
        }
        Command::Gradcheck { points, seed } => {
            if points == 0 {
                return Err(Failure::Config("--points must be at least 1".into()));
            }
            commands::gradcheck(points, seed).map_err(Failure::Runtime)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(message)) => {
            eprintln!("config error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
