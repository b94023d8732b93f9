//! Command-line arguments and their config-file twin.
//!
//! Each argument struct is both a clap `Args` and a serde table, so every
//! flag has a config-file key of the same name (dashes become
//! underscores). Values given on the command line win over the file.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! preset = "tiny"
//!
//! [train]
//! dataset = "reviews.dataset"
//! fused = "fused.bin"
//! optimizer = "sgd"
//! lr = 0.1
//! ```

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelPreset {
    /// 512 LSTM and 256 GRU units, dropouts 0.2 and 0.3.
    Full,
    /// 5 LSTM and 4 GRU units, no dropout.
    Tiny,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelArgs {
    /// Model size preset [default: full]
    #[arg(long, global = true, value_enum)]
    pub preset: Option<ModelPreset>,
    #[arg(long, global = true)]
    pub lstm_units: Option<usize>,
    #[arg(long, global = true)]
    pub gru_units: Option<usize>,
    /// Dropout after each recurrent layer
    #[arg(long, global = true)]
    pub dropout: Option<f64>,
    /// Whole-vector dropout on the embedded sequence
    #[arg(long, global = true)]
    pub spatial_dropout: Option<f64>,
    /// Update the embedding matrix during training
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "is_false")]
    pub train_embeddings: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InspectArgs {
    /// Embedding file, optionally suffixed with `:format`
    pub file: Option<String>,
    /// glove, w2v-bin or fasttext
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareArgs {
    /// Review CSV (Place, Title, Review, Rate columns)
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Dataset file to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Star ranges for bad/neutral/good [default: 1-2/3/4-5]
    #[arg(long)]
    pub buckets: Option<String>,
    /// Leave review titles out of the text
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub no_title: bool,
    /// Sequence length after padding or truncation [default: 60]
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Share of each class kept for training [default: 0.9]
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Tab-separated `token lemma` table; other tokens fall back to suffix stripping
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuseArgs {
    /// First (larger) table as `path:format`
    #[arg(long)]
    pub emb1: Option<String>,
    /// Second table as `path:format`
    #[arg(long)]
    pub emb2: Option<String>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Fused matrix, written as word2vec binary
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Branch-count CSV
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Value of every component of the unknown-word row [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub unknown_fill: Option<f64>,
    /// Comma-separated lookup keys [default: as-is,lower,capitalized,lemma]
    #[arg(long)]
    pub chain: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrFindArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub fused: Option<PathBuf>,
    /// sgd, sgd_momentum, adagrad, adadelta or adam [default: sgd]
    #[arg(long)]
    pub optimizer: Option<String>,
    /// `lo:hi:logN`, `lo:hi:linN` or a comma list [default: 1e-8:1e-2:log7]
    #[arg(long)]
    pub grid: Option<String>,
    /// [default: 3]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 32]
    #[arg(long)]
    pub batch: Option<usize>,
    /// Loss-per-rate CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Loss-vs-rate SVG
    #[arg(long)]
    pub chart: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub fused: Option<PathBuf>,
    /// [default: sgd]
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// At most 20 [default: 20]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 32]
    #[arg(long)]
    pub batch: Option<usize>,
    /// Checkpoint file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch history CSV
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Loss-vs-epoch SVG
    #[arg(long)]
    pub chart: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// CSV with `pair,fused` columns; paths are relative to the manifest
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Shared learning rate [default: sgd range search on the first pair]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 20]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 32]
    #[arg(long)]
    pub batch: Option<usize>,
    /// Comma-separated optimizers [default: all five]
    #[arg(long)]
    pub optimizers: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// train or test [default: test]
    #[arg(long)]
    pub split: Option<String>,
    /// Metrics CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// History CSV written by `train` or `sweep`
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Everything a run can be configured with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub model: ModelArgs,
    pub inspect: InspectArgs,
    pub prepare: PrepareArgs,
    pub fuse: FuseArgs,
    pub lr_find: LrFindArgs,
    pub train: TrainArgs,
    pub sweep: SweepArgs,
    pub eval: EvalArgs,
    pub report: ReportArgs,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text)
            .map_err(|e| CliError::invalid("config", e.to_string().replace('\n', " ")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

/// Field-wise overlay: `self` (command line) wins, `file` fills the gaps.
pub trait Overlay {
    fn overlay(self, file: Self) -> Self;
}

macro_rules! overlay {
    ($t:ty { $($opt:ident),* } { $($flag:ident),* }) => {
        impl Overlay for $t {
            fn overlay(self, file: Self) -> Self {
                Self {
                    $($opt: self.$opt.or(file.$opt),)*
                    $($flag: self.$flag || file.$flag,)*
                }
            }
        }
    };
}

overlay!(ModelArgs { preset, lstm_units, gru_units, dropout, spatial_dropout } { train_embeddings });
overlay!(InspectArgs { file, format } {});
overlay!(PrepareArgs { csv, out, buckets, max_len, train_fraction, lemmas } { no_title });
overlay!(FuseArgs { emb1, emb2, dataset, out, report, unknown_fill, chain } {});
overlay!(LrFindArgs { dataset, fused, optimizer, grid, epochs, batch, out, chart } {});
overlay!(TrainArgs { dataset, fused, optimizer, lr, epochs, batch, out, history, chart } {});
overlay!(SweepArgs { dataset, pairs, lr, epochs, batch, optimizers, out_dir } {});
overlay!(EvalArgs { dataset, checkpoint, split, out } {});
overlay!(ReportArgs { history, out_dir } {});
