//! Optimizers, the training loop, the learning-rate range search and the
//! optimizer sweep.
//!
//! Update rules, with `g` the gradient and `lr` the learning rate:
//!
//! ```text
//! sgd           w ← w − lr·g
//! sgd_momentum  v ← μv + g;                       w ← w − lr·v
//! adagrad       G ← G + g²;                       w ← w − lr·g/√(G+ε)
//! adadelta      Eg ← ρEg + (1−ρ)g²;  Δ = −√(EΔ+ε)/√(Eg+ε)·g;
//!               EΔ ← ρEΔ + (1−ρ)Δ²;               w ← w + lr·Δ
//! adam          m ← β₁m + (1−β₁)g;  v ← β₂v + (1−β₂)g²;
//!               w ← w − lr·m̂/(√v̂+ε),  m̂ = m/(1−β₁ᵗ), v̂ = v/(1−β₂ᵗ)
//! ```

mod optimizer;
mod search;
mod sweep;
mod train;

use thiserror::Error;

pub use optimizer::{OptimizerKind, OptimizerSpec, OptimizerState};
pub use search::{
    lr_range_search, parse_lr_grid, select_best_lr, validate_grid, LrPoint, LrSearch, DEFAULT_GRID,
    DEFAULT_SEARCH_EPOCHS,
};
pub use sweep::{
    chart_file_name, optimizer_sweep, pair_chart, pair_ids, pair_loss_series, read_history_csv,
    write_history_csv, write_sweep_outputs, EmbeddingPair, SweepFiles, HISTORY_CSV,
};
pub use train::{
    train, EpochRecord, RunKey, TrainData, TrainOptions, TrainOutcome, TrainingHistory,
    DEFAULT_BATCH_SIZE, MAX_EPOCHS,
};

use crate::chart::ChartError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid optimizer settings: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("gradient entry {0} is not finite")]
    NonFiniteGradient(usize),
    #[error("training split is empty")]
    EmptyDataset,
    #[error("invalid learning-rate grid: {0}")]
    InvalidGrid(String),
    #[error("every learning rate in the grid diverged")]
    AllDiverged,
    #[error("history file: {0}")]
    BadHistory(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
