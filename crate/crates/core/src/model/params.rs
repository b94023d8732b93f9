use rand::Rng;

use super::cells::{GruParams, LstmParams};
use super::{ModelConfig, ModelError};
use crate::seed;

/// Name, offset and shape of one parameter block in the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub name: &'static str,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl BlockInfo {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

pub(crate) const LSTM_FWD: usize = 0;
pub(crate) const LSTM_BWD: usize = 3;
pub(crate) const GRU_FWD: usize = 6;
pub(crate) const GRU_BWD: usize = 9;
pub(crate) const DENSE_W: usize = 12;
pub(crate) const DENSE_B: usize = 13;
pub(crate) const EMBEDDING: usize = 14;

/// Every weight of the network in one flat `f64` vector.
///
/// Block order: for each of `lstm_fwd`, `lstm_bwd` (gates i, f, g, o) and
/// `gru_fwd`, `gru_bwd` (gates z, r, n) an input matrix `w`, a recurrent
/// matrix `u` and a bias `b`; then `dense_w`, `dense_b`, and finally the
/// embedding matrix. The trainable prefix excludes the embedding unless
/// `train_embeddings` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    config: ModelConfig,
    vocab_size: usize,
    blocks: Vec<BlockInfo>,
    values: Vec<f64>,
}

fn layout(config: &ModelConfig, vocab_size: usize) -> Vec<BlockInfo> {
    let (d, h1, h2) = (config.emb_dim, config.lstm_units, config.gru_units);
    let shapes: [(&'static str, usize, usize); 15] = [
        ("lstm_fwd.w", 4 * h1, d),
        ("lstm_fwd.u", 4 * h1, h1),
        ("lstm_fwd.b", 1, 4 * h1),
        ("lstm_bwd.w", 4 * h1, d),
        ("lstm_bwd.u", 4 * h1, h1),
        ("lstm_bwd.b", 1, 4 * h1),
        ("gru_fwd.w", 3 * h2, 2 * h1),
        ("gru_fwd.u", 3 * h2, h2),
        ("gru_fwd.b", 1, 3 * h2),
        ("gru_bwd.w", 3 * h2, 2 * h1),
        ("gru_bwd.u", 3 * h2, h2),
        ("gru_bwd.b", 1, 3 * h2),
        ("dense_w", config.num_classes, config.feature_width()),
        ("dense_b", 1, config.num_classes),
        ("embedding", vocab_size, d),
    ];
    let mut offset = 0;
    shapes
        .into_iter()
        .map(|(name, rows, cols)| {
            let b = BlockInfo {
                name,
                offset,
                rows,
                cols,
            };
            offset += rows * cols;
            b
        })
        .collect()
}

impl ModelParameters {
    /// Seeded initialization around a frozen embedding matrix.
    ///
    /// Input matrices are Glorot-uniform, recurrent matrices uniform in
    /// `±1/√units`, biases zero except the LSTM forget gate at +1.
    pub fn init(
        config: &ModelConfig,
        embedding: &[f64],
        vocab_size: usize,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        if embedding.len() != vocab_size * config.emb_dim {
            return Err(ModelError::ShapeMismatch(format!(
                "embedding has {} values, expected {vocab_size} x {}",
                embedding.len(),
                config.emb_dim
            )));
        }
        let blocks = layout(config, vocab_size);
        let total = blocks.last().map(|b| b.offset + b.len()).unwrap_or(0);
        let mut values = vec![0.0; total];
        let mut rng = seed::rng(config.seed, &[seed::stream::INIT]);

        for (i, block) in blocks.iter().enumerate() {
            let slice = &mut values[block.range()];
            let limit = match block.name {
                "lstm_fwd.w" | "lstm_bwd.w" | "gru_fwd.w" | "gru_bwd.w" | "dense_w" => {
                    (6.0 / (block.rows + block.cols) as f64).sqrt()
                }
                "lstm_fwd.u" | "lstm_bwd.u" | "gru_fwd.u" | "gru_bwd.u" => {
                    1.0 / (block.cols as f64).sqrt()
                }
                _ => 0.0,
            };
            if limit > 0.0 {
                slice
                    .iter_mut()
                    .for_each(|v| *v = rng.gen_range(-limit..limit));
            }
            if i == LSTM_FWD + 2 || i == LSTM_BWD + 2 {
                let h = config.lstm_units;
                slice[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
            }
        }
        values[blocks[EMBEDDING].range()].copy_from_slice(embedding);

        Ok(Self {
            config: config.clone(),
            vocab_size,
            blocks,
            values,
        })
    }

    /// Rebuilds parameters from a full flat vector (checkpoint loading).
    pub fn from_values(
        config: &ModelConfig,
        vocab_size: usize,
        values: Vec<f64>,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let blocks = layout(config, vocab_size);
        let total = blocks.last().map(|b| b.offset + b.len()).unwrap_or(0);
        if values.len() != total {
            return Err(ModelError::ShapeMismatch(format!(
                "expected {total} parameters, got {}",
                values.len()
            )));
        }
        Ok(Self {
            config: config.clone(),
            vocab_size,
            blocks,
            values,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    /// Blocks inside the trainable prefix.
    pub fn trainable_blocks(&self) -> &[BlockInfo] {
        if self.config.train_embeddings {
            &self.blocks
        } else {
            &self.blocks[..EMBEDDING]
        }
    }

    pub fn trainable_len(&self) -> usize {
        if self.config.train_embeddings {
            self.values.len()
        } else {
            self.blocks[EMBEDDING].offset
        }
    }

    /// All parameters, embedding last.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trainable(&self) -> &[f64] {
        &self.values[..self.trainable_len()]
    }

    pub fn trainable_mut(&mut self) -> &mut [f64] {
        let n = self.trainable_len();
        &mut self.values[..n]
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| &self.values[b.range()])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let range = self.blocks.iter().find(|b| b.name == name)?.range();
        Some(&mut self.values[range])
    }

    pub fn embedding(&self) -> &[f64] {
        &self.values[self.blocks[EMBEDDING].range()]
    }

    pub(crate) fn slice(&self, block: usize) -> &[f64] {
        &self.values[self.blocks[block].range()]
    }

    pub(crate) fn lstm(&self, first_block: usize) -> LstmParams<'_> {
        LstmParams {
            w: self.slice(first_block),
            u: self.slice(first_block + 1),
            b: self.slice(first_block + 2),
            input: self.config.emb_dim,
            hidden: self.config.lstm_units,
        }
    }

    pub(crate) fn gru(&self, first_block: usize) -> GruParams<'_> {
        GruParams {
            w: self.slice(first_block),
            u: self.slice(first_block + 1),
            b: self.slice(first_block + 2),
            input: 2 * self.config.lstm_units,
            hidden: self.config.gru_units,
        }
    }

    /// The parameters of the same network applied to reversed sequences.
    ///
    /// Forward and backward blocks of both recurrent layers are swapped.
    /// Since every bidirectional output then comes out as `[bwd; fwd]`, the
    /// GRU input columns and the dense columns of each pooled branch are
    /// swapped as well.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for (a, b) in [(LSTM_FWD, LSTM_BWD), (GRU_FWD, GRU_BWD)] {
            for k in 0..3 {
                let (ra, rb) = (self.blocks[a + k].range(), self.blocks[b + k].range());
                out.values[ra.clone()].copy_from_slice(&self.values[rb.clone()]);
                out.values[rb].copy_from_slice(&self.values[ra]);
            }
        }
        let h1 = self.config.lstm_units;
        let h2 = self.config.gru_units;
        for block in [GRU_FWD, GRU_BWD] {
            let info = &out.blocks[block];
            let (range, cols) = (info.range(), info.cols);
            swap_column_halves(&mut out.values[range], cols, 0, h1);
        }
        let info = &out.blocks[DENSE_W];
        let (range, cols) = (info.range(), info.cols);
        swap_column_halves(&mut out.values[range.clone()], cols, 0, h1);
        swap_column_halves(&mut out.values[range], cols, 2 * h1, h2);
        out
    }
}

/// Swaps columns `[start, start+half)` with `[start+half, start+2·half)` in
/// every row.
fn swap_column_halves(matrix: &mut [f64], cols: usize, start: usize, half: usize) {
    for row in matrix.chunks_exact_mut(cols) {
        let (a, b) = row[start..start + 2 * half].split_at_mut(half);
        a.swap_with_slice(b);
    }
}
