//! Trains the tiny classifier on the synthetic token-determined corpus and
//! evaluates the result.

use embfuse::model::{predict, ModelConfig};
use embfuse::optim::{train, TrainOptions};
use embfuse::synthetic::{token_corpus, SyntheticSpec};
use embfuse::{OptimizerKind, OptimizerSpec, TrainData};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (dataset, embedding) = token_corpus(&SyntheticSpec::default())?;
    let data = TrainData::new(&dataset, &embedding)?;
    let config = data.fit_config(&ModelConfig::tiny(8, 0));
    let spec = OptimizerSpec::new(OptimizerKind::Sgd, 0.1)?;
    let outcome = train(
        &data,
        &config,
        &spec,
        &TrainOptions {
            epochs: 20,
            ..Default::default()
        },
    )?;
    for e in &outcome.history.epochs {
        println!(
            "epoch {:>2}  loss {:.4}  train acc {:.3}  test acc {:.3}",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            e.test_accuracy.unwrap_or(f64::NAN)
        );
    }
    let p = predict(&data.test, &data.test_labels, &outcome.params)?;
    println!("test confusion (rows true): {:?}", p.confusion);
    Ok(())
}
