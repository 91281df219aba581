//! Command-line harness around the `ttd-core` simulation library: runs the
//! canned experiments from a JSON config and writes CSV/JSON artifacts.

mod config;
mod experiments;
mod output;

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RawConfig, EXPERIMENT_NAMES};

/// Errors are split by origin so the process can signal them distinctly:
/// exit code 2 for configuration problems, 3 for runtime failures.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "ttd-sim", version, about = "True-time-delay array experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config and write results.
    Run {
        config: String,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<String>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config without running it.
    Validate { config: String },
    /// List the available experiment names.
    ListExperiments,
}

fn read_config(path: &str) -> Result<RawConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {path}: {e}")))?;
    RawConfig::parse(&text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            output_dir,
            seed,
        } => {
            let resolved = read_config(&config)?.resolve(seed, output_dir)?;
            let out = experiments::run(&resolved)?;
            output::write_all(&resolved, &out)?;
            println!(
                "wrote {} to {}",
                resolved.raw.experiment, resolved.output_dir
            );
            Ok(())
        }
        Command::Validate { config } => {
            let resolved = read_config(&config)?.resolve(None, None)?;
            println!("ok: {}", resolved.raw.experiment);
            Ok(())
        }
        Command::ListExperiments => {
            for name in EXPERIMENT_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Machine-readable error report on stderr.
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.kind(), "message": e.message() })
            );
            ExitCode::from(e.exit_code())
        }
    }
}
