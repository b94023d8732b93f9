use std::time::Instant;

use rand::seq::SliceRandom;

use super::{OptimError, OptimizerKind, OptimizerSpec, OptimizerState};
use crate::corpus::Dataset;
use crate::fusion::FusedMatrix;
use crate::model::{loss_and_grad, predict, ModelConfig, ModelParameters};
use crate::seed;

/// Upper bound on epochs per run.
pub const MAX_EPOCHS: usize = 20;
pub const DEFAULT_BATCH_SIZE: usize = 32;

/// Encoded splits plus the frozen embedding matrix they index into.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub train: Vec<Vec<u32>>,
    pub train_labels: Vec<usize>,
    pub test: Vec<Vec<u32>>,
    pub test_labels: Vec<usize>,
    /// Row-major `(vocab_size, emb_dim)`.
    pub embedding: Vec<f64>,
    pub emb_dim: usize,
    pub max_len: usize,
}

impl TrainData {
    pub fn new(dataset: &Dataset, fused: &FusedMatrix) -> Result<Self, OptimError> {
        if fused.rows() != dataset.vocab_size() {
            return Err(OptimError::ShapeMismatch {
                expected: dataset.vocab_size(),
                actual: fused.rows(),
            });
        }
        let split = |xs: &[crate::corpus::EncodedExample]| -> (Vec<Vec<u32>>, Vec<usize>) {
            xs.iter()
                .map(|e| (e.indices.clone(), e.label.code()))
                .unzip()
        };
        let (train, train_labels) = split(&dataset.train);
        let (test, test_labels) = split(&dataset.test);
        Ok(Self {
            train,
            train_labels,
            test,
            test_labels,
            embedding: fused.matrix().to_vec(),
            emb_dim: fused.dim(),
            max_len: dataset.max_len,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.len() / self.emb_dim.max(1)
    }

    /// `base` with the embedding width and sequence length of this data.
    pub fn fit_config(&self, base: &ModelConfig) -> ModelConfig {
        ModelConfig {
            emb_dim: self.emb_dim,
            max_len: self.max_len,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    /// Root of initialization, shuffling and dropout. Replaces the model
    /// config's own seed.
    pub seed: u64,
    /// Embedding-pair id recorded in the history.
    pub pair: String,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: MAX_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 0,
            pair: String::from("default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunKey {
    pub pair: String,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub seed: u64,
}

/// Metrics at the end of one epoch.
///
/// `train_loss` is the mean of that epoch's batch losses (dropout active);
/// the accuracies and `test_loss` come from inference passes. Test metrics
/// are `None` when the data has no test split. Equality ignores
/// `wall_seconds`.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub wall_seconds: f64,
}

impl PartialEq for EpochRecord {
    fn eq(&self, other: &Self) -> bool {
        self.epoch == other.epoch
            && self.train_loss.to_bits() == other.train_loss.to_bits()
            && self.train_accuracy.to_bits() == other.train_accuracy.to_bits()
            && self.test_loss.map(f64::to_bits) == other.test_loss.map(f64::to_bits)
            && self.test_accuracy.map(f64::to_bits) == other.test_accuracy.map(f64::to_bits)
    }
}

/// One training curve. Epochs are numbered from 1 without gaps; a diverged
/// run keeps the epochs completed before the first non-finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    pub key: RunKey,
    pub epochs: Vec<EpochRecord>,
    pub diverged: bool,
}

impl TrainingHistory {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }

    pub fn final_record(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParameters,
    pub history: TrainingHistory,
}

/// Seeded mini-batch training.
///
/// Each epoch shuffles the training split on its own stream and steps the
/// optimizer once per batch. A non-finite batch loss or gradient stops the
/// run and marks it diverged; the parameters are returned as they were
/// before the offending step.
pub fn train(
    data: &TrainData,
    config: &ModelConfig,
    spec: &OptimizerSpec,
    opts: &TrainOptions,
) -> Result<TrainOutcome, OptimError> {
    spec.validate()?;
    if data.train.is_empty() {
        return Err(OptimError::EmptyDataset);
    }
    if opts.epochs == 0 || opts.epochs > MAX_EPOCHS {
        return Err(OptimError::InvalidSpec(format!(
            "epochs must lie in 1..={MAX_EPOCHS}, got {}",
            opts.epochs
        )));
    }
    if opts.batch_size == 0 {
        return Err(OptimError::InvalidSpec(
            "batch size must be positive".into(),
        ));
    }
    if config.emb_dim != data.emb_dim || config.max_len != data.max_len {
        return Err(OptimError::InvalidSpec(format!(
            "model expects emb_dim {} and max_len {}, data has {} and {}",
            config.emb_dim, config.max_len, data.emb_dim, data.max_len
        )));
    }

    let config = ModelConfig {
        seed: opts.seed,
        ..config.clone()
    };
    let mut params = ModelParameters::init(&config, &data.embedding, data.vocab_size())?;
    let mut state = OptimizerState::zeros(spec.kind, params.trainable_len());
    let mut history = TrainingHistory {
        key: RunKey {
            pair: opts.pair.clone(),
            optimizer: spec.kind,
            learning_rate: spec.learning_rate,
            seed: opts.seed,
        },
        epochs: Vec::new(),
        diverged: false,
    };

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    'epochs: for epoch in 1..=opts.epochs {
        let started = Instant::now();
        order.sort_unstable();
        order.shuffle(&mut seed::rng(
            opts.seed,
            &[seed::stream::SHUFFLE, epoch as u64],
        ));

        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (b, idx) in order.chunks(opts.batch_size).enumerate() {
            let batch: Vec<&[u32]> = idx.iter().map(|&i| data.train[i].as_slice()).collect();
            let labels: Vec<usize> = idx.iter().map(|&i| data.train_labels[i]).collect();
            let mut rng = seed::rng(opts.seed, &[seed::stream::DROPOUT, epoch as u64, b as u64]);
            let out = loss_and_grad(&batch, &labels, &params, &mut rng)?;
            if !out.loss.is_finite() {
                history.diverged = true;
                break 'epochs;
            }
            match spec.step(params.trainable_mut(), &out.grad, &mut state) {
                Ok(()) => {}
                Err(OptimError::NonFiniteGradient(_)) => {
                    history.diverged = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
            loss_sum += out.loss;
            batches += 1;
        }

        let train_eval = predict(&data.train, &data.train_labels, &params)?;
        let test_eval = if data.test.is_empty() {
            None
        } else {
            Some(predict(&data.test, &data.test_labels, &params)?)
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            train_accuracy: train_eval.accuracy,
            test_loss: test_eval.as_ref().map(|p| p.loss),
            test_accuracy: test_eval.as_ref().map(|p| p.accuracy),
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        let finite = record.train_loss.is_finite()
            && train_eval.loss.is_finite()
            && record.test_loss.is_none_or(f64::is_finite);
        if !finite {
            history.diverged = true;
            break;
        }
        history.epochs.push(record);
    }

    Ok(TrainOutcome { params, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> TrainData {
        let dim = 3;
        let mut embedding = vec![0.0; 6 * dim];
        for (i, v) in embedding.iter_mut().enumerate().skip(dim) {
            *v = ((i * 7) % 5) as f64 * 0.3 - 0.6;
        }
        let train: Vec<Vec<u32>> = (0..12)
            .map(|i| vec![0, 2 + (i % 4) as u32, 1 + (i % 3) as u32])
            .collect();
        let train_labels = (0..12).map(|i| i % 3).collect();
        TrainData {
            train,
            train_labels,
            test: vec![vec![0, 0, 2]],
            test_labels: vec![0],
            embedding,
            emb_dim: dim,
            max_len: 3,
        }
    }

    fn cfg() -> ModelConfig {
        ModelConfig {
            max_len: 3,
            ..ModelConfig::tiny(3, 0)
        }
    }

    #[test]
    fn same_seed_same_history() {
        let spec = OptimizerSpec::new(OptimizerKind::Adam, 0.01).unwrap();
        let opts = TrainOptions {
            epochs: 3,
            batch_size: 5,
            ..Default::default()
        };
        let a = train(&toy(), &cfg(), &spec, &opts).unwrap();
        let b = train(&toy(), &cfg(), &spec, &opts).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
        assert_eq!(a.history.epochs.len(), 3);
        assert_eq!(
            a.history.epochs.iter().map(|e| e.epoch).collect::<Vec<_>>(),
            [1, 2, 3]
        );
    }

    #[test]
    fn empty_and_invalid_inputs_are_rejected() {
        let spec = OptimizerSpec::new(OptimizerKind::Sgd, 0.1).unwrap();
        let mut data = toy();
        data.train.clear();
        data.train_labels.clear();
        assert!(matches!(
            train(&data, &cfg(), &spec, &TrainOptions::default()),
            Err(OptimError::EmptyDataset)
        ));
        let opts = TrainOptions {
            epochs: 21,
            ..Default::default()
        };
        assert!(train(&toy(), &cfg(), &spec, &opts).is_err());
    }

    #[test]
    fn non_finite_loss_is_flagged_as_diverged() {
        let spec = OptimizerSpec::new(OptimizerKind::Sgd, 0.1).unwrap();
        let opts = TrainOptions {
            epochs: 5,
            batch_size: 4,
            ..Default::default()
        };
        let mut data = toy();
        data.embedding[2 * 3] = f64::NAN;
        let out = train(&data, &cfg(), &spec, &opts).unwrap();
        assert!(out.history.diverged);
        assert!(out.history.epochs.is_empty());
    }
}
