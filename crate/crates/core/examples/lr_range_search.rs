//! Runs the learning-rate range search for every optimizer on the synthetic
//! corpus and prints the loss table.

use embfuse::model::ModelConfig;
use embfuse::optim::{
    lr_range_search, parse_lr_grid, TrainOptions, DEFAULT_GRID, DEFAULT_SEARCH_EPOCHS,
};
use embfuse::synthetic::{token_corpus, SyntheticSpec};
use embfuse::{OptimizerKind, TrainData};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid_text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| DEFAULT_GRID.to_string());
    let grid = parse_lr_grid(&grid_text)?;
    let (dataset, embedding) = token_corpus(&SyntheticSpec::default())?;
    let data = TrainData::new(&dataset, &embedding)?;
    let config = data.fit_config(&ModelConfig::tiny(8, 0));
    let opts = TrainOptions {
        epochs: DEFAULT_SEARCH_EPOCHS,
        ..Default::default()
    };

    print!("{:<14}", "lr");
    for lr in &grid {
        print!("{lr:>10.0e}");
    }
    println!();
    for kind in OptimizerKind::ALL {
        let search = lr_range_search(&data, &config, kind, &grid, &opts)?;
        print!("{:<14}", kind.name());
        for p in &search.table {
            match p.final_loss {
                Some(l) => print!("{l:>10.4}"),
                None => print!("{:>10}", "diverged"),
            }
        }
        println!("   best {:e}", search.best_lr);
    }
    Ok(())
}
