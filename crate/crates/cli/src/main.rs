//! `ivsurv`: simulation studies, cross-fitted estimates and bootstrap bands
//! from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ivsurv",
    version,
    about = "Instrumental-variable survival estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the `seed` key of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a replicated simulation study and write report.csv and curves.
    Simulate(Common),
    /// Cross-fitted estimates from a CSV dataset.
    Estimate(Common),
    /// Estimates with percentile bootstrap bands.
    Bootstrap(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, common) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Estimate(c) => (Command::Estimate, c),
        Cmd::Bootstrap(c) => (Command::Bootstrap, c),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let run = config::load(command, &common.config, common.seed)?;
    std::fs::create_dir_all(&common.out)?;
    match run {
        RunConfig::Simulate(study) => commands::simulate(&study, &common.out),
        RunConfig::Estimate(cfg) => commands::estimate(&cfg, &common.out),
        RunConfig::Bootstrap(cfg) => commands::bootstrap(&cfg, &common.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ivsurv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
