//! Fuses a GloVe table with a fastText table over a corpus dictionary and
//! shows which rule produced each row.

use std::fs::File;
use std::path::Path;

use embfuse::corpus::{prepare, PrepareOptions, SuffixStripper};
use embfuse::fusion::{build_fused_matrix, fusion_report, FusionOptions};
use embfuse::EmbeddingFormat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/smoke");
    let (dataset, _) = prepare(
        File::open(dir.join("reviews.csv"))?,
        &PrepareOptions::default(),
        &SuffixStripper,
    )?;
    let e1 = EmbeddingFormat::Glove.load(&dir.join("emb_a.txt"))?.table;
    let e2 = EmbeddingFormat::FastText
        .load(&dir.join("emb_b.vec"))?
        .table;
    println!("mean of first table  {:?}", e1.mean());
    println!("mean of second table {:?}", e2.mean());

    let fused = build_fused_matrix(
        &dataset.dicts,
        &e1,
        &e2,
        e1.dim(),
        &FusionOptions::default(),
    )?;
    println!("{}", fusion_report(&fused));
    for word in ["good", "great", "staff", "bad", "room"] {
        if let Some(i) = dataset.dicts.index_of(word) {
            println!("{word:<8} {:?}", fused.row(i as usize));
        }
    }
    Ok(())
}
