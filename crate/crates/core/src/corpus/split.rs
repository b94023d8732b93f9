use rand::seq::SliceRandom;

use super::{CorpusError, EncodedExample, SentimentLabel};
use crate::seed;

/// Stratified, seeded train/test partition.
///
/// Each label's examples are shuffled on their own stream and the first
/// `round(n_label * train_fraction)` go to training. Both halves keep the
/// input order.
pub fn split_train_test(
    examples: &[EncodedExample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<EncodedExample>, Vec<EncodedExample>), CorpusError> {
    if examples.len() < 10 {
        return Err(CorpusError::TooFewExamples(examples.len()));
    }
    assert!(
        train_fraction > 0.0 && train_fraction < 1.0,
        "train_fraction must lie in (0, 1)"
    );
    let mut in_train = vec![false; examples.len()];
    for label in SentimentLabel::ALL {
        let mut members: Vec<usize> = examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == label)
            .map(|(i, _)| i)
            .collect();
        let mut rng = seed::rng(seed, &[seed::stream::SPLIT, label.code() as u64]);
        members.shuffle(&mut rng);
        let n_train = (members.len() as f64 * train_fraction).round() as usize;
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = examples
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    Ok((
        train.into_iter().map(|(e, _)| e).collect(),
        test.into_iter().map(|(e, _)| e).collect(),
    ))
}
