//! Compares backpropagated gradients of the tiny model with central
//! differences, block by block.

use embfuse::model::{gradient_check, ModelConfig, ModelParameters};
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ModelConfig::tiny(8, 1);
    let vocab = 12;
    let mut rng = embfuse::seed::rng(1, &[]);
    let emb: Vec<f64> = (0..vocab * cfg.emb_dim)
        .map(|i| {
            if i < cfg.emb_dim {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    let params = ModelParameters::init(&cfg, &emb, vocab)?;
    let batch = [
        vec![0, 0, 3, 7, 2, 9, 4],
        vec![5, 1, 8, 8, 2, 6, 3],
        vec![0, 0, 0, 0, 11, 10, 2],
    ];
    let labels = [2, 0, 1];

    let report = gradient_check(&params, &batch, &labels, 1e-5, 0, 1)?;
    for b in &report.blocks {
        println!(
            "{:<12} {:>5} entries  max rel {:.2e}",
            b.name, b.checked, b.max_rel_error
        );
    }
    println!("worst {:.2e}", report.max_rel_error());
    Ok(())
}
