//! `nreg`: prepare data, train, predict and evaluate referring-expression
//! generators from the command line.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 numeric failure.

mod baseline_file;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "nreg", version, about = "Neural referring expression generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract instances from a template file and split them.
    Prepare(commands::prepare::PrepareArgs),
    /// Train the neural generator or the feature-based baseline.
    Train(commands::train::TrainArgs),
    /// Predict a referring expression for every instance.
    Predict(commands::predict::PredictArgs),
    /// Score prediction files and compare systems.
    Evaluate(commands::evaluate::EvaluateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

/// Model settings shared by `train` and `predict`. Explicit flags override
/// `--set` pairs, which override the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct ModelOverrides {
    /// Flat `key=value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, value_parser = ["seq2seq", "catt", "hieratt"])]
    pub variant: Option<String>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("NREG_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<neuralreg::Error>(), Some(neuralreg::Error::NonFinite(_))));
    if numeric {
        EXIT_NUMERIC
    } else {
        EXIT_INPUT
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Prepare(a) => commands::prepare::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Predict(a) => commands::predict::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
