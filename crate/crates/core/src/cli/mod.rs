//! The `embfuse` command line.
//!
//! Subcommands follow the pipeline: `inspect`, `prepare`, `fuse`,
//! `lr-find`, `train`, `sweep`, `eval` and `report`. Failures print one
//! line `ERROR <code>: <message>` on stderr. Exit status is 0 on success,
//! 1 for invalid input or usage and 2 for failures while running.

mod commands;
mod config;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

pub use config::{
    EvalArgs, FuseArgs, InspectArgs, LrFindArgs, ModelArgs, ModelPreset, Overlay, PrepareArgs,
    ReportArgs, RunConfig, SweepArgs, TrainArgs,
};

use crate::chart::ChartError;
use crate::corpus::CorpusError;
use crate::embedding_io::EmbeddingError;
use crate::fusion::FusionError;
use crate::model::ModelError;
use crate::optim::OptimError;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    /// Bad input or usage, as opposed to a failure while running.
    pub validation: bool,
}

impl CliError {
    pub fn invalid(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            validation: true,
        }
    }

    pub fn runtime(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            validation: false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.validation {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ERROR {}: {}",
            self.code,
            self.message.replace('\n', " ")
        )
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime("io", e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        Self::runtime("embedding", e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::runtime("corpus", e.to_string())
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        Self::runtime("fusion", e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig(_) => Self::invalid("model-config", e.to_string()),
            _ => Self::runtime("model", e.to_string()),
        }
    }
}

impl From<OptimError> for CliError {
    fn from(e: OptimError) -> Self {
        match e {
            OptimError::InvalidSpec(_) | OptimError::InvalidGrid(_) => {
                Self::invalid("optimizer", e.to_string())
            }
            OptimError::AllDiverged => Self::runtime("all-diverged", e.to_string()),
            _ => Self::runtime("optim", e.to_string()),
        }
    }
}

impl From<ChartError> for CliError {
    fn from(e: ChartError) -> Self {
        Self::runtime("chart", e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "embfuse",
    version,
    about = "Fuse two word-embedding tables and train a BiLSTM-BiGRU sentiment classifier on the result",
    propagate_version = true
)]
pub struct Cli {
    /// TOML file with defaults for any flag
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for splitting, initialization, shuffling and dropout [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print dimension, vocabulary size and mean-vector norm of an embedding file
    Inspect(InspectArgs),
    /// Turn a review CSV into an encoded, split dataset file
    Prepare(PrepareArgs),
    /// Fuse two embedding tables over a dataset's dictionary
    Fuse(FuseArgs),
    /// Learning-rate range search
    #[command(name = "lr-find")]
    LrFind(LrFindArgs),
    /// Train the classifier and save a checkpoint
    Train(TrainArgs),
    /// Train every optimizer on every embedding pair at one learning rate
    Sweep(SweepArgs),
    /// Score a checkpoint on a dataset split
    Eval(EvalArgs),
    /// Redraw charts from a history CSV
    Report(ReportArgs),
}

/// Parses `argv` (program name first) and runs the subcommand, writing
/// normal output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    crate::parallel::init_from_env();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                ErrorKind::InvalidSubcommand => {
                    let _ = writeln!(
                        err,
                        "{}",
                        CliError::invalid("unknown-command", first_line(&e))
                    );
                    1
                }
                _ => {
                    let _ = writeln!(err, "{}", CliError::invalid("usage", first_line(&e)));
                    1
                }
            };
        }
    };
    match commands::execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn first_line(e: &clap::Error) -> String {
    e.render()
        .to_string()
        .lines()
        .next()
        .unwrap_or("")
        .trim_start_matches("error: ")
        .to_string()
}

/// Runs with the process arguments and standard streams.
pub fn dispatch() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
