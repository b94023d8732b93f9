//! Turns a review CSV into a labelled, encoded and split dataset.

use std::fs::File;

use embfuse::corpus::{prepare, PrepareOptions, SuffixStripper};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let default = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/corpus100/reviews.csv"
    );
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| default.to_string());
    let (dataset, report) = prepare(
        File::open(&path)?,
        &PrepareOptions::default(),
        &SuffixStripper,
    )?;
    println!(
        "kept {} of {} reviews from {:?} (share {:.2})",
        report.place.kept, report.place.total, report.place.place, report.place.share
    );
    println!("labels bad/neutral/good: {:?}", report.label_counts);
    println!(
        "train {} test {} vocab {}",
        report.train, report.test, report.vocab_size
    );
    println!("first training sequence: {:?}", dataset.train[0].indices);
    Ok(())
}
