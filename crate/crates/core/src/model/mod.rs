//! The stacked BiLSTM-BiGRU sentiment classifier.
//!
//! Data flow for one sequence:
//!
//! ```text
//! indices ─ embedding ─ spatial dropout ─ BiLSTM ─ dropout ─┬─ BiGRU ─ dropout ─ max-pool ─┐
//!                                                           └──────────────── max-pool ─────┴─ concat ─ dense ─ softmax
//! ```
//!
//! Padding (index 0) is masked: padded steps are skipped by both recurrent
//! layers, which carry their state through unchanged, and never win a max
//! pool. A sequence made only of padding pools to zeros.
//!
//! Everything runs in `f64`; gradients come from hand-written
//! backpropagation through time and are verified by [`gradient_check`].

mod cells;
mod checkpoint;
mod config;
mod gradcheck;
mod network;
mod params;

use thiserror::Error;

pub use cells::{gru_cell_step, lstm_cell_step, GruParams, LstmParams};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::ModelConfig;
pub use gradcheck::{gradient_check, BlockCheck, GradCheckReport};
pub use network::{
    forward, loss_and_grad, predict, BatchLoss, ForwardOutput, ForwardTrace, Prediction,
};
pub use params::{BlockInfo, ModelParameters};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("token index {index} is outside the embedding matrix ({rows} rows)")]
    IndexOutOfRange { index: u32, rows: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("label {0} is not a valid class code")]
    BadLabel(usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
