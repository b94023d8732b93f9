//! A labelled corpus whose label is fixed by a single token.
//!
//! Every example holds exactly one of three signal words (`bad`, `neutral`,
//! `good`) among random filler words, and its label is the signal's class.
//! A classifier that works must separate the classes, which makes the
//! generator its own oracle.

use rand::Rng;

use crate::corpus::{
    split_train_test, CorpusDictionaries, CorpusError, Dataset, EncodedExample, SentimentLabel,
    PAD_INDEX,
};
use crate::fusion::FusedMatrix;
use crate::seed;

pub const SIGNAL_WORDS: [&str; 3] = ["bad", "neutral", "good"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub examples: usize,
    pub filler_words: usize,
    pub max_len: usize,
    pub emb_dim: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            examples: 600,
            filler_words: 30,
            max_len: 7,
            emb_dim: 8,
            train_fraction: 0.9,
            seed: 0,
        }
    }
}

/// Builds the dataset and a random embedding matrix aligned with its
/// dictionary. Labels cycle through the three classes, so the classes are
/// balanced to within one example.
pub fn token_corpus(spec: &SyntheticSpec) -> Result<(Dataset, FusedMatrix), CorpusError> {
    assert!(spec.max_len >= 1 && spec.emb_dim >= 1 && spec.filler_words >= 1);
    let fillers: Vec<String> = (0..spec.filler_words).map(|i| format!("w{i:03}")).collect();
    let dicts = CorpusDictionaries::from_entries(
        SIGNAL_WORDS
            .iter()
            .map(|s| s.to_string())
            .chain(fillers.iter().cloned())
            .map(|t| (t.clone(), t)),
    );
    let first_filler = 2 + SIGNAL_WORDS.len() as u32;

    let mut rng = seed::rng(spec.seed, &[seed::stream::SYNTHETIC, 0]);
    let examples: Vec<EncodedExample> = (0..spec.examples)
        .map(|i| {
            let label = SentimentLabel::ALL[i % 3];
            let len = rng.gen_range(1..=spec.max_len);
            let signal_at = rng.gen_range(0..len);
            let mut indices = vec![PAD_INDEX; spec.max_len - len];
            for k in 0..len {
                indices.push(if k == signal_at {
                    2 + label.code() as u32
                } else {
                    first_filler + rng.gen_range(0..spec.filler_words as u32)
                });
            }
            EncodedExample { indices, label }
        })
        .collect();
    let (train, test) = split_train_test(&examples, spec.train_fraction, spec.seed)?;

    let mut rng = seed::rng(spec.seed, &[seed::stream::SYNTHETIC, 1]);
    let rows = dicts.vocab_size();
    let matrix: Vec<f64> = (0..rows * spec.emb_dim)
        .map(|i| {
            if i < spec.emb_dim {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();

    let dataset = Dataset {
        dicts,
        max_len: spec.max_len,
        train,
        test,
    };
    Ok((dataset, FusedMatrix::from_raw(spec.emb_dim, matrix)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_holds_exactly_its_signal() {
        let (ds, fused) = token_corpus(&SyntheticSpec::default()).unwrap();
        assert_eq!(ds.train.len() + ds.test.len(), 600);
        assert_eq!(ds.test.len(), 60);
        assert_eq!(fused.rows(), ds.vocab_size());
        for e in ds.train.iter().chain(&ds.test) {
            let signals: Vec<u32> = e
                .indices
                .iter()
                .copied()
                .filter(|&i| (2..5).contains(&i))
                .collect();
            assert_eq!(signals, [2 + e.label.code() as u32]);
            assert_eq!(e.indices.len(), 7);
        }
        assert!(fused.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn seeded() {
        let spec = SyntheticSpec {
            examples: 30,
            ..Default::default()
        };
        assert_eq!(token_corpus(&spec).unwrap(), token_corpus(&spec).unwrap());
    }
}
