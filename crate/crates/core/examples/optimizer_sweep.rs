//! Trains all five optimizers on two fused embedding pairs and writes the
//! history CSV and one loss chart per pair.

use std::path::PathBuf;

use embfuse::fusion::{build_fused_matrix, FusionOptions};
use embfuse::model::ModelConfig;
use embfuse::optim::{optimizer_sweep, write_sweep_outputs, EmbeddingPair, TrainOptions};
use embfuse::synthetic::{token_corpus, SyntheticSpec};
use embfuse::{EmbeddingTable, OptimizerKind, TrainData};
use rand::Rng;

fn random_table(name: &str, words: &[String], dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = embfuse::seed::rng(seed, &[]);
    let rows = words.iter().map(|w| {
        (
            w.clone(),
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
    });
    EmbeddingTable::from_rows(name, dim, rows).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "sweep-out".into()),
    );
    let spec = SyntheticSpec::default();
    let (dataset, _) = token_corpus(&spec)?;
    let words = dataset.dicts.tokens();
    let big = random_table("big", words, spec.emb_dim, 1);
    let half = random_table("half", &words[..words.len() / 2], spec.emb_dim, 2);
    let shifted = random_table("shifted", &words[words.len() / 3..], spec.emb_dim, 3);

    let mut pairs = Vec::new();
    for (id, second) in [("big+half", &half), ("big+shifted", &shifted)] {
        let fused = build_fused_matrix(
            &dataset.dicts,
            &big,
            second,
            spec.emb_dim,
            &FusionOptions::default(),
        )?;
        pairs.push(EmbeddingPair {
            id: id.into(),
            data: TrainData::new(&dataset, &fused)?,
        });
    }
    let opts = TrainOptions {
        epochs: 10,
        ..Default::default()
    };
    let histories = optimizer_sweep(
        &pairs,
        &ModelConfig::tiny(spec.emb_dim, 0),
        &OptimizerKind::ALL,
        0.05,
        &opts,
    )?;
    for h in &histories {
        let last = h.final_record().unwrap();
        println!(
            "{:<12} {:<13} final loss {:.4} test acc {:.3}",
            h.key.pair,
            h.key.optimizer.name(),
            last.train_loss,
            last.test_accuracy.unwrap_or(f64::NAN)
        );
    }
    let files = write_sweep_outputs(&histories, &out_dir)?;
    println!(
        "wrote {} and {} charts",
        files.csv.display(),
        files.charts.len()
    );
    Ok(())
}
