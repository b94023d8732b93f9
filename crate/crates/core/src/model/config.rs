use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub max_len: usize,
    pub emb_dim: usize,
    /// Hidden units per LSTM direction.
    pub lstm_units: usize,
    /// Hidden units per GRU direction.
    pub gru_units: usize,
    pub spatial_dropout_rate: f64,
    pub dropout_rate: f64,
    pub num_classes: usize,
    pub seed: u64,
    /// Update the embedding matrix during training. Off by default.
    pub train_embeddings: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::full_scale(0)
    }
}

impl ModelConfig {
    /// 300-d embeddings, 512 LSTM and 256 GRU units per direction.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            max_len: 60,
            emb_dim: 300,
            lstm_units: 512,
            gru_units: 256,
            spatial_dropout_rate: 0.2,
            dropout_rate: 0.3,
            num_classes: 3,
            seed,
            train_embeddings: false,
        }
    }

    /// A small dropout-free configuration for fast checks.
    pub fn tiny(emb_dim: usize, seed: u64) -> Self {
        Self {
            max_len: 7,
            emb_dim,
            lstm_units: 5,
            gru_units: 4,
            spatial_dropout_rate: 0.0,
            dropout_rate: 0.0,
            num_classes: 3,
            seed,
            train_embeddings: false,
        }
    }

    /// Width of the concatenated pooled features fed to the dense layer.
    pub fn feature_width(&self) -> usize {
        2 * self.lstm_units + 2 * self.gru_units
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.max_len == 0 || self.emb_dim == 0 || self.lstm_units == 0 || self.gru_units == 0 {
            return bad("max_len, emb_dim and unit counts must be at least 1");
        }
        for rate in [self.spatial_dropout_rate, self.dropout_rate] {
            if !(0.0..1.0).contains(&rate) {
                return bad("dropout rates must lie in [0, 1)");
            }
        }
        if self.num_classes != 3 {
            return bad("num_classes must be 3");
        }
        Ok(())
    }
}
