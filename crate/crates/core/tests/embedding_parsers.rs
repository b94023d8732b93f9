use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use embfuse::embedding_io::{
    mean_vector, parse_fasttext_text, parse_glove_text, parse_word2vec_binary, write_text,
    write_word2vec_binary, EmbeddingError,
};
use embfuse::{EmbeddingFormat, EmbeddingTable};
use proptest::prelude::*;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn token_strategy() -> impl Strategy<Value = String> {
    // Any non-empty string without whitespace; word2vec tokens end at a space.
    "[^\\s]{1,12}"
}

fn table_strategy() -> impl Strategy<Value = EmbeddingTable> {
    (1usize..6, prop::collection::vec(token_strategy(), 1..25)).prop_flat_map(|(dim, tokens)| {
        let n = tokens.len();
        prop::collection::vec(
            prop::num::f32::NORMAL | prop::num::f32::ZERO | prop::num::f32::SUBNORMAL,
            n * dim,
        )
        .prop_map(move |values| {
            let rows = tokens.iter().cloned().zip(
                values
                    .chunks(dim)
                    .map(|c| c.iter().map(|&v| f64::from(v)).collect::<Vec<_>>()),
            );
            EmbeddingTable::from_rows("p", dim, rows).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn word2vec_write_then_parse_is_identity(table in table_strategy()) {
        let mut bytes = Vec::new();
        write_word2vec_binary(&table, &mut bytes).unwrap();
        let back = parse_word2vec_binary("p", bytes.as_slice()).unwrap();
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(back.table.tokens(), table.tokens());
        let same_bits = back.table.matrix().iter().zip(table.matrix()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same_bits);
    }

    #[test]
    fn text_write_then_parse_is_identity(table in table_strategy(), header in any::<bool>()) {
        let mut bytes = Vec::new();
        write_text(&table, header, &mut bytes).unwrap();
        let parsed = if header {
            parse_fasttext_text("p", bytes.as_slice())
        } else {
            parse_glove_text("p", bytes.as_slice())
        };
        let back = parsed.unwrap();
        prop_assert_eq!(back.table.tokens(), table.tokens());
        prop_assert_eq!(back.table.matrix(), table.matrix());
    }

    #[test]
    fn mean_moves_with_a_constant_shift(table in table_strategy(), c in -100.0f64..100.0) {
        let m = mean_vector(&table).unwrap();
        let rows = table.iter().map(|(t, r)| (t.to_string(), r.iter().map(|v| v + c).collect::<Vec<_>>()));
        let shifted = EmbeddingTable::from_rows("s", table.dim(), rows).unwrap();
        let ms = mean_vector(&shifted).unwrap();
        for (a, b) in m.iter().zip(&ms) {
            prop_assert!((b - (a + c)).abs() <= 1e-9 * (1.0 + a.abs() + c.abs()));
        }
    }
}

/// Kahan-compensated column mean.
fn kahan_mean(table: &EmbeddingTable) -> Vec<f64> {
    let d = table.dim();
    let mut sum = vec![0.0f64; d];
    let mut comp = vec![0.0f64; d];
    for (_, row) in table.iter() {
        for k in 0..d {
            let y = row[k] - comp[k];
            let t = sum[k] + y;
            comp[k] = (t - sum[k]) - y;
            sum[k] = t;
        }
    }
    sum.iter().map(|s| s / table.len() as f64).collect()
}

#[test]
fn mean_agrees_with_compensated_summation() {
    let mut rng = embfuse::seed::rng(5, &[]);
    use rand::Rng;
    for _ in 0..50 {
        let dim = rng.gen_range(1..10);
        let n = rng.gen_range(1..3000);
        let scale = 10f64.powi(rng.gen_range(-3..4));
        let rows = (0..n).map(|i| {
            (
                format!("t{i}"),
                (0..dim)
                    .map(|_| rng.gen_range(-scale..scale))
                    .collect::<Vec<_>>(),
            )
        });
        let table = EmbeddingTable::from_rows("k", dim, rows).unwrap();
        let ours = mean_vector(&table).unwrap();
        let reference = kahan_mean(&table);
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-9 * scale.max(1.0), "{a} vs {b}");
        }
        assert_eq!(table.mean(), ours.as_slice());
    }
}

/// Produces a GloVe file line by line without ever holding it in memory.
struct GloveGenerator {
    rows: usize,
    dim: usize,
    next: usize,
    pending: Vec<u8>,
    pos: usize,
}

impl Read for GloveGenerator {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if self.pos == self.pending.len() {
            if self.next == self.rows {
                return Ok(0);
            }
            self.pending.clear();
            self.pos = 0;
            let i = self.next;
            self.pending.extend(format!("w{i}").bytes());
            for k in 0..self.dim {
                self.pending
                    .extend(format!(" {}", (i * 31 + k) % 97).bytes());
            }
            self.pending.push(b'\n');
            self.next += 1;
        }
        let n = buf.len().min(self.pending.len() - self.pos);
        buf[..n].copy_from_slice(&self.pending[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

#[test]
fn streams_from_a_generator_reader() {
    let rows = 200_000;
    let dim = 3;
    let reader = BufReader::with_capacity(
        64,
        GloveGenerator {
            rows,
            dim,
            next: 0,
            pending: Vec::new(),
            pos: 0,
        },
    );
    let parsed = parse_glove_text("gen", reader).unwrap();
    assert_eq!(parsed.table.len(), rows);
    assert_eq!(
        parsed.table.get("w123456").unwrap(),
        &[
            ((123456 * 31) % 97) as f64,
            ((123456 * 31 + 1) % 97) as f64,
            ((123456 * 31 + 2) % 97) as f64
        ]
    );
}

#[test]
fn glove_fixture_matches_expected_table() {
    let parsed = EmbeddingFormat::Glove
        .load(&fixture("parsers/small.glove.txt"))
        .unwrap();
    let t = &parsed.table;
    assert_eq!(t.tokens(), ["the", "cat"]);
    assert_eq!(t.dim(), 3);
    assert_eq!(t.get("the").unwrap(), &[0.5, -1.25, 3.0]);
    assert_eq!(t.get("cat").unwrap(), &[0.0, 0.125, -0.25]);
    assert_eq!(parsed.duplicate_count(), 1);
    assert_eq!(t.mean(), &[0.25, -0.5625, 1.375]);
}

#[test]
fn fasttext_fixture_matches_expected_table() {
    let parsed = EmbeddingFormat::FastText
        .load(&fixture("parsers/small.vec"))
        .unwrap();
    let t = &parsed.table;
    assert_eq!(t.tokens(), ["hello", "world", "über"]);
    assert_eq!(t.matrix(), &[1.5, -2.0, 0.25, 0.75, -1.0, 1.0]);
    assert!(parsed.warnings.is_empty());
}

#[test]
fn word2vec_reads_from_any_bufread() {
    let table = EmbeddingTable::from_rows("x", 2, [("a", vec![1.0, 2.0]), ("b", vec![-0.5, 0.25])])
        .unwrap();
    let mut bytes = Vec::new();
    write_word2vec_binary(&table, &mut bytes).unwrap();
    // One-byte buffer forces every record across many refills.
    let reader: Box<dyn BufRead> = Box::new(BufReader::with_capacity(1, bytes.as_slice()));
    let back = parse_word2vec_binary("x", reader).unwrap();
    assert_eq!(back.table.matrix(), table.matrix());
    bytes.truncate(bytes.len() - 1);
    assert!(matches!(
        parse_word2vec_binary("x", bytes.as_slice()),
        Err(EmbeddingError::TruncatedRecord(2))
    ));
}
