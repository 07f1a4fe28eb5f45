//! `lumber-dol`: simulate, fit and predict with the gamma-process
//! duration-of-load model.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lumber_dol::{DolError, Result};

#[derive(Parser)]
#[command(
    name = "lumber-dol",
    version,
    about = "Gamma-process duration-of-load model for lumber"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// overrides the seed in the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// worker threads (results do not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate an accelerated-test dataset
    Simulate,
    /// Fit the model to a dataset by parallel tempering
    Fit,
    /// Summarize a posterior CSV
    Summarize,
    /// Failure probability over a load profile
    Reliability,
    /// Residual life after surviving a constant-load test
    ResidualLife,
    /// Compare with the accumulated-damage model
    AdmCompare,
    /// Build a load profile and write it out
    ProfileGen,
}

fn run(cli: &Cli) -> Result<String> {
    let config_path = cli
        .config
        .clone()
        .ok_or_else(|| DolError::Config("--config <path> is required".into()))?;
    let ctx = commands::Context {
        config_path: config_path.clone(),
        out: cli.out.clone(),
        seed: cli.seed,
    };
    match cli.command {
        Command::Simulate => commands::simulate(&config::load(&config_path)?, &ctx),
        Command::Fit => commands::fit(&config::load(&config_path)?, &ctx),
        Command::Summarize => commands::summarize(&config::load(&config_path)?, &ctx),
        Command::Reliability => commands::reliability_cmd(&config::load(&config_path)?, &ctx),
        Command::ResidualLife => commands::residual_life_cmd(&config::load(&config_path)?, &ctx),
        Command::AdmCompare => commands::adm_compare(&config::load(&config_path)?, &ctx),
        Command::ProfileGen => commands::profile_gen(&config::load(&config_path)?, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
