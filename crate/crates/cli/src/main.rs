//! `cogharvest`: generate scenarios, allocate sub-channels, optimize slot
//! structures, check the solvers against the oracles and run the
//! experiment sweeps.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "cogharvest",
    version,
    about = "Spectrum allocation and harvesting-ratio optimization for energy-harvesting cognitive radio"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Worker threads for parallel work; 1 runs sequentially.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Input {
    /// Configuration file (`key = value unit` lines).
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Scenario JSON written by `generate`; takes precedence over the config.
    #[arg(short, long, value_name = "FILE", conflicts_with = "config")]
    pub scenario: Option<PathBuf>,

    /// Configuration override, applied after the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct DualArgs {
    /// Largest normalized multiplier movement accepted as converged.
    #[arg(long, default_value_t = 1e-7)]
    pub tol_dual: f64,
    /// Largest normalized constraint violation accepted as feasible.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_primal: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iterations: usize,
    /// Multiplier of the self-scaled `c/t` step sizes.
    #[arg(long, default_value_t = 1.0)]
    pub step_scale: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Closed,
    Dual,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a scenario from a configuration and write it as JSON.
    Generate {
        #[command(flatten)]
        input: Input,
        /// Output file (default `scenario.json`).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the fully resolved configuration to this file.
        #[arg(long, value_name = "FILE")]
        write_config: Option<PathBuf>,
    },
    /// Allocate sub-channels at the initial harvesting ratios.
    Allocate {
        #[command(flatten)]
        input: Input,
        /// Use the greedy max-rate allocation instead of EFM.
        #[arg(long)]
        baseline: bool,
        /// Write the allocation as JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Optimize harvesting ratios for the EFM allocation.
    Solve {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        #[command(flatten)]
        dual: DualArgs,
        /// Write the solver reports as JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare the solvers with the brute-force oracles.
    Validate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        dual: DualArgs,
    },
    /// Run an experiment sweep and write its CSV.
    Experiment {
        /// Experiment name; `list` prints the available ones.
        name: String,
        #[command(flatten)]
        input: Input,
        /// Output file (default `<name>.csv`).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
