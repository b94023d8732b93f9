//! Prints shape and mean norm of an embedding file.
//!
//! ```text
//! cargo run --example inspect_embeddings -- path/to/vectors.vec:fasttext
//! ```

use std::path::Path;

use embfuse::embedding_io::split_path_format;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let default = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/smoke/emb_b.vec:fasttext"
    );
    let arg = std::env::args()
        .nth(1)
        .unwrap_or_else(|| default.to_string());
    let (path, format) = split_path_format(&arg)?;
    let parsed = format.load(Path::new(path))?;
    let table = &parsed.table;
    let norm = table.mean().iter().map(|v| v * v).sum::<f64>().sqrt();
    println!(
        "{path}: {} words, dim {}, mean norm {norm:.4}",
        table.len(),
        table.dim()
    );
    for (token, row) in table.iter().take(5) {
        println!("  {token:<12} {row:?}");
    }
    if parsed.duplicate_count() > 0 {
        println!("{} duplicate tokens skipped", parsed.duplicate_count());
    }
    Ok(())
}
