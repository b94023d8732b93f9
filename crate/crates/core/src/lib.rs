//! Fusion of two pretrained word-embedding tables and a from-scratch
//! BiLSTM-BiGRU sentiment classifier trained on top of the fused matrix.
//!
//! The pipeline runs in five stages, each living in its own module:
//!
//! - [`embedding_io`]: stream parsers for GloVe text, word2vec binary and
//!   fastText text files, plus the word2vec binary writer.
//! - [`corpus`]: review CSV ingestion, dominant-place filtering, star to
//!   label bucketing, tokenization, dictionaries and padded encodings.
//! - [`fusion`]: the mean-shift fusion rules that turn two tables into one
//!   matrix indexed by the corpus dictionary.
//! - [`model`]: the recurrent classifier with full backpropagation through
//!   time and a finite-difference gradient checker.
//! - [`optim`]: five first-order optimizers, the training loop, the
//!   learning-rate range search and the optimizer sweep.
//!
//! [`chart`] renders SVG line charts and [`cli`] wires everything behind
//! the `embfuse` binary.

pub mod chart;
pub mod cli;
pub mod corpus;
pub mod embedding_io;
pub mod fusion;
pub mod model;
pub mod optim;
pub mod parallel;
pub mod seed;
pub mod synthetic;

mod linalg;

pub use corpus::{CorpusDictionaries, Dataset, EncodedExample, ReviewRecord, SentimentLabel};
pub use embedding_io::{EmbeddingFormat, EmbeddingTable};
pub use fusion::{build_fused_matrix, FusedMatrix, FusionOptions};
pub use model::{ModelConfig, ModelParameters};
pub use optim::{OptimizerKind, OptimizerSpec, TrainData, TrainingHistory};
