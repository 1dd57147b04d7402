//! `polarity`: train, apply and inspect the tweet polarity ensemble.
//!
//! Exit status is 0 on success, 2 for usage, configuration and input-file
//! problems, and 3 for model, bundle and embedding problems.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Settings;
use error::CliError;

#[derive(Parser)]
#[command(name = "polarity", version, about = "Three-way tweet polarity with a soft-voting ensemble")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "POLARITY_CONFIG")]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the ensemble on train_files (plus dev_files) and write model_path.
    Train,
    /// Write `id, label, p_pos, p_neg, p_neu` for every tweet of an `id<TAB>text` file.
    Predict {
        input: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Input has the `id<TAB>label<TAB>text` layout; labels are ignored.
        #[arg(long)]
        labeled: bool,
    },
    /// Score a labeled file (test_file by default) and write a JSON report.
    Evaluate { input: Option<PathBuf> },
    /// Print a model bundle's metadata (model_path by default).
    Inspect { bundle: Option<PathBuf> },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = match &cli.config {
        Some(path) => Settings::from_file(path)?.overlay(cli.settings),
        None => cli.settings,
    };
    match cli.command {
        Command::Train => commands::train(&settings),
        Command::Predict { input, output, labeled } => {
            commands::predict(&settings, &input, output.as_deref(), labeled)
        }
        Command::Evaluate { input } => commands::evaluate_cmd(&settings, input.as_deref()),
        Command::Inspect { bundle } => commands::inspect(&settings, bundle.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
