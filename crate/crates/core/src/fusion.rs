//! Mean-shift fusion of two embedding tables into one corpus matrix.
//!
//! Every corpus word is looked up under a chain of candidate keys (as-is,
//! lowercased, capitalized, lemma). The first key found in either table
//! decides the row:
//!
//! | key present in | row                                  |
//! |----------------|--------------------------------------|
//! | both tables    | `(v1 + (v2 + (m1 - m2))) / 2`        |
//! | first only     | `v1`, copied verbatim                |
//! | second only    | `v2 + (m1 - m2)`                     |
//! | neither        | the unknown row                      |
//!
//! where `m1`, `m2` are the column means of the two tables. The shift
//! `m1 - m2` is computed once, before any row, so fusing a table with itself
//! reproduces its rows exactly.
//!
//! Row 0 (padding) stays zero and row 1 holds the unknown row.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{CorpusDictionaries, PAD_INDEX, UNK_INDEX};
use crate::embedding_io::{EmbeddingError, EmbeddingTable};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("corpus dictionaries are empty")]
    EmptyDictionaries,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn check_len(expected: usize, v: &[f64]) -> Result<(), FusionError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(FusionError::DimMismatch {
            expected,
            actual: v.len(),
        })
    }
}

/// Row for a word found in both tables: the first vector averaged with the
/// mean-shifted second vector.
pub fn fuse_both(v1: &[f64], v2: &[f64], m1: &[f64], m2: &[f64]) -> Result<Vec<f64>, FusionError> {
    let d = v1.len();
    for v in [v2, m1, m2] {
        check_len(d, v)?;
    }
    let shift = mean_shift(m1, m2);
    Ok(fuse_both_shifted(v1, v2, &shift))
}

/// Row for a word found only in the second table: the second vector moved
/// by `m1 - m2`.
pub fn fuse_second_only(v2: &[f64], m1: &[f64], m2: &[f64]) -> Result<Vec<f64>, FusionError> {
    let d = v2.len();
    for v in [m1, m2] {
        check_len(d, v)?;
    }
    let shift = mean_shift(m1, m2);
    Ok(shift_second(v2, &shift))
}

fn mean_shift(m1: &[f64], m2: &[f64]) -> Vec<f64> {
    m1.iter().zip(m2).map(|(a, b)| a - b).collect()
}

fn fuse_both_shifted(v1: &[f64], v2: &[f64], shift: &[f64]) -> Vec<f64> {
    v1.iter()
        .zip(v2)
        .zip(shift)
        .map(|((a, b), s)| (a + (b + s)) / 2.0)
        .collect()
}

fn shift_second(v2: &[f64], shift: &[f64]) -> Vec<f64> {
    v2.iter().zip(shift).map(|(b, s)| b + s).collect()
}

/// One step of the lookup chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateKey {
    AsIs,
    Lowercase,
    /// First character uppercased, the rest lowercased.
    Capitalized,
    Lemma,
}

impl CandidateKey {
    pub const DEFAULT_CHAIN: [CandidateKey; 4] = [
        CandidateKey::AsIs,
        CandidateKey::Lowercase,
        CandidateKey::Capitalized,
        CandidateKey::Lemma,
    ];

    fn apply(self, token: &str, dicts: &CorpusDictionaries) -> Option<String> {
        match self {
            CandidateKey::AsIs => Some(token.to_string()),
            CandidateKey::Lowercase => Some(token.to_lowercase()),
            CandidateKey::Capitalized => Some(capitalize(token)),
            CandidateKey::Lemma => dicts.lemma_of(token).map(str::to_string),
        }
    }
}

impl std::str::FromStr for CandidateKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "as-is" => Ok(CandidateKey::AsIs),
            "lower" => Ok(CandidateKey::Lowercase),
            "capitalized" => Ok(CandidateKey::Capitalized),
            "lemma" => Ok(CandidateKey::Lemma),
            _ => Err(format!(
                "unknown candidate key {s:?} (as-is, lower, capitalized, lemma)"
            )),
        }
    }
}

impl fmt::Display for CandidateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateKey::AsIs => "as-is",
            CandidateKey::Lowercase => "lower",
            CandidateKey::Capitalized => "capitalized",
            CandidateKey::Lemma => "lemma",
        })
    }
}

fn capitalize(token: &str) -> String {
    let mut chars = token.chars();
    match chars.next() {
        Some(first) => first
            .to_uppercase()
            .chain(chars.flat_map(char::to_lowercase))
            .collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOptions {
    pub chain: Vec<CandidateKey>,
    /// Every component of the unknown row.
    pub unknown_fill: f64,
}

impl Default for FusionOptions {
    fn default() -> Self {
        Self {
            chain: CandidateKey::DEFAULT_CHAIN.to_vec(),
            unknown_fill: 0.0,
        }
    }
}

/// Which rule produced a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Both,
    FirstOnly,
    SecondOnly,
    Unknown,
}

/// Per-branch row counts. `lemma_hit` and `case_hit` additionally tally rows
/// resolved through the lemma or a case variant, whatever their branch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BranchCounts {
    pub both: usize,
    pub first_only: usize,
    pub second_only: usize,
    pub unknown: usize,
    pub lemma_hit: usize,
    pub case_hit: usize,
}

impl BranchCounts {
    /// Sum of the four exclusive branches.
    pub fn total(&self) -> usize {
        self.both + self.first_only + self.second_only + self.unknown
    }

    fn merge(mut self, other: Self) -> Self {
        self.both += other.both;
        self.first_only += other.first_only;
        self.second_only += other.second_only;
        self.unknown += other.unknown;
        self.lemma_hit += other.lemma_hit;
        self.case_hit += other.case_hit;
        self
    }

    fn record(&mut self, branch: Branch, key: Option<CandidateKey>) {
        match branch {
            Branch::Both => self.both += 1,
            Branch::FirstOnly => self.first_only += 1,
            Branch::SecondOnly => self.second_only += 1,
            Branch::Unknown => self.unknown += 1,
        }
        match key {
            Some(CandidateKey::Lemma) => self.lemma_hit += 1,
            Some(CandidateKey::Lowercase | CandidateKey::Capitalized) => self.case_hit += 1,
            _ => {}
        }
    }
}

/// The fused matrix, indexed by corpus word index.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedMatrix {
    dim: usize,
    /// Row-major `(vocab_size, dim)`.
    matrix: Vec<f64>,
    branch_counts: BranchCounts,
    unknown_row: Vec<f64>,
}

impl FusedMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.matrix.len() / self.dim
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.matrix[index * self.dim..(index + 1) * self.dim]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn into_matrix(self) -> Vec<f64> {
        self.matrix
    }

    pub fn branch_counts(&self) -> BranchCounts {
        self.branch_counts
    }

    pub fn unknown_row(&self) -> &[f64] {
        &self.unknown_row
    }

    /// Converts to a table keyed by corpus tokens, `<pad>` and `<unk>` for
    /// rows 0 and 1, ready for `write_word2vec_binary`.
    pub fn to_table(&self, dicts: &CorpusDictionaries) -> Result<EmbeddingTable, FusionError> {
        let keys = [PAD_TOKEN, UNK_TOKEN]
            .into_iter()
            .chain(dicts.tokens().iter().map(String::as_str));
        let rows = keys
            .zip(self.matrix.chunks_exact(self.dim))
            .map(|(k, r)| (k, r.to_vec()));
        Ok(EmbeddingTable::from_rows("fused", self.dim, rows)?)
    }

    /// Recovers a fused matrix persisted with [`FusedMatrix::to_table`],
    /// checking that its keys line up with `dicts`.
    pub fn from_table(
        table: &EmbeddingTable,
        dicts: &CorpusDictionaries,
    ) -> Result<Self, FusionError> {
        let expected = [PAD_TOKEN, UNK_TOKEN]
            .into_iter()
            .chain(dicts.tokens().iter().map(String::as_str));
        let aligned = table.len() == dicts.vocab_size()
            && table.tokens().iter().map(String::as_str).eq(expected);
        if !aligned {
            return Err(FusionError::DimMismatch {
                expected: dicts.vocab_size(),
                actual: table.len(),
            });
        }
        Ok(Self {
            dim: table.dim(),
            matrix: table.matrix().to_vec(),
            branch_counts: BranchCounts::default(),
            unknown_row: table.row(UNK_INDEX as usize).to_vec(),
        })
    }

    /// Wraps an arbitrary `(rows, dim)` matrix; used by tests and examples.
    pub fn from_raw(dim: usize, matrix: Vec<f64>) -> Self {
        assert!(dim > 0 && matrix.len().is_multiple_of(dim) && matrix.len() >= 2 * dim);
        let unknown_row = matrix[dim..2 * dim].to_vec();
        Self {
            dim,
            matrix,
            branch_counts: BranchCounts::default(),
            unknown_row,
        }
    }
}

/// Resolves one corpus token: the winning key (if any) and its row.
fn resolve(
    token: &str,
    dicts: &CorpusDictionaries,
    emb1: &EmbeddingTable,
    emb2: &EmbeddingTable,
    shift: &[f64],
    options: &FusionOptions,
) -> (Branch, Option<CandidateKey>, Option<Vec<f64>>) {
    for &kind in &options.chain {
        let Some(key) = kind.apply(token, dicts) else {
            continue;
        };
        match (emb1.get(&key), emb2.get(&key)) {
            (Some(v1), Some(v2)) => {
                return (
                    Branch::Both,
                    Some(kind),
                    Some(fuse_both_shifted(v1, v2, shift)),
                )
            }
            (Some(v1), None) => return (Branch::FirstOnly, Some(kind), Some(v1.to_vec())),
            (None, Some(v2)) => {
                return (
                    Branch::SecondOnly,
                    Some(kind),
                    Some(shift_second(v2, shift)),
                )
            }
            (None, None) => {}
        }
    }
    (Branch::Unknown, None, None)
}

/// Builds the fused matrix for every word of `dicts`.
pub fn build_fused_matrix(
    dicts: &CorpusDictionaries,
    emb1: &EmbeddingTable,
    emb2: &EmbeddingTable,
    dim: usize,
    options: &FusionOptions,
) -> Result<FusedMatrix, FusionError> {
    for d in [emb1.dim(), emb2.dim()] {
        if d != dim {
            return Err(FusionError::DimMismatch {
                expected: dim,
                actual: d,
            });
        }
    }
    if dicts.is_empty() {
        return Err(FusionError::EmptyDictionaries);
    }

    let shift = mean_shift(emb1.mean(), emb2.mean());
    let unknown_row = vec![options.unknown_fill; dim];
    let mut matrix = vec![0.0; dicts.vocab_size() * dim];
    matrix[UNK_INDEX as usize * dim..(UNK_INDEX as usize + 1) * dim].copy_from_slice(&unknown_row);
    debug_assert_eq!(PAD_INDEX, 0);

    let words = &mut matrix[2 * dim..];
    let branch_counts = words
        .par_chunks_mut(dim)
        .zip(dicts.tokens().par_iter())
        .map(|(row, token)| {
            let (branch, key, fused) = resolve(token, dicts, emb1, emb2, &shift, options);
            row.copy_from_slice(fused.as_deref().unwrap_or(&unknown_row));
            let mut counts = BranchCounts::default();
            counts.record(branch, key);
            counts
        })
        .reduce(BranchCounts::default, BranchCounts::merge);

    Ok(FusedMatrix {
        dim,
        matrix,
        branch_counts,
        unknown_row,
    })
}

/// Coverage summary of a fused matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionReport {
    pub counts: BranchCounts,
    pub words: usize,
}

pub fn fusion_report(fused: &FusedMatrix) -> FusionReport {
    FusionReport {
        counts: fused.branch_counts,
        words: fused.rows().saturating_sub(2),
    }
}

impl FusionReport {
    pub fn unknown_rate(&self) -> f64 {
        self.fraction(self.counts.unknown)
    }

    fn fraction(&self, n: usize) -> f64 {
        if self.words == 0 {
            0.0
        } else {
            n as f64 / self.words as f64
        }
    }

    fn rows(&self) -> [(&'static str, usize); 6] {
        let c = &self.counts;
        [
            ("both", c.both),
            ("first_only", c.first_only),
            ("second_only", c.second_only),
            ("unknown", c.unknown),
            ("lemma_hit", c.lemma_hit),
            ("case_hit", c.case_hit),
        ]
    }

    /// `branch,count,percent` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "branch,count,percent")?;
        for (name, n) in self.rows() {
            writeln!(w, "{name},{n},{}", 100.0 * self.fraction(n))?;
        }
        writeln!(w, "total,{},100", self.words)?;
        Ok(())
    }
}

impl fmt::Display for FusionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fused {} corpus words", self.words)?;
        for (name, n) in self.rows() {
            writeln!(f, "  {name:<12} {n:>8}  {:>6.2}%", 100.0 * self.fraction(n))?;
        }
        write!(f, "  unknown rate {:.4}", self.unknown_rate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable {
        let dim = rows[0].1.len();
        EmbeddingTable::from_rows("t", dim, rows.iter().map(|(t, r)| (*t, r.to_vec()))).unwrap()
    }

    fn dicts(words: &[(&str, &str)]) -> CorpusDictionaries {
        CorpusDictionaries::from_entries(words.iter().map(|(t, l)| (t.to_string(), l.to_string())))
    }

    #[test]
    fn fuse_both_hand_values() {
        let r = fuse_both(&[1.0, 1.0], &[3.0, 3.0], &[1.0, 1.0], &[3.0, 3.0]).unwrap();
        assert_eq!(r, vec![1.0, 1.0]);
        assert_eq!(
            fuse_both(&[0.0], &[0.0], &[0.0], &[0.0]).unwrap(),
            vec![0.0]
        );
        assert!(matches!(
            fuse_both(&[1.0], &[1.0, 2.0], &[0.0], &[0.0]),
            Err(FusionError::DimMismatch { .. })
        ));
    }

    #[test]
    fn fuse_both_cancels_translation() {
        let v1 = [0.5, -1.25, 3.0];
        let m1 = [0.25, 2.0, -0.5];
        let c = [4.0, -8.5, 0.125];
        let v2: Vec<f64> = v1.iter().zip(&c).map(|(a, b)| a + b).collect();
        let m2: Vec<f64> = m1.iter().zip(&c).map(|(a, b)| a + b).collect();
        assert_eq!(fuse_both(&v1, &v2, &m1, &m2).unwrap(), v1.to_vec());
    }

    #[test]
    fn second_only_shift() {
        assert_eq!(
            fuse_second_only(&[3.0, 3.0], &[1.0, 1.0], &[3.0, 3.0]).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(
            fuse_second_only(&[0.3, 0.7], &[5.0, 1.0], &[5.0, 1.0]).unwrap(),
            vec![0.3, 0.7]
        );
        assert_eq!(
            fuse_second_only(&[0.0], &[2.0], &[5.0]).unwrap(),
            vec![-3.0]
        );
    }

    #[test]
    fn word_in_both_tables() {
        let f = build_fused_matrix(
            &dicts(&[("x", "x")]),
            &table(&[("x", &[1.0, 1.0])]),
            &table(&[("x", &[3.0, 3.0])]),
            2,
            &FusionOptions::default(),
        )
        .unwrap();
        assert_eq!(f.row(2), &[1.0, 1.0]);
        assert_eq!(f.branch_counts().both, 1);
        assert_eq!(f.row(0), &[0.0, 0.0]);
        assert_eq!(f.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn first_only_copies_verbatim() {
        let f = build_fused_matrix(
            &dicts(&[("y", "y")]),
            &table(&[("y", &[4.0, 4.0]), ("z", &[0.0, 0.0])]),
            &table(&[("q", &[9.0, 1.0])]),
            2,
            &FusionOptions::default(),
        )
        .unwrap();
        assert_eq!(f.row(2), &[4.0, 4.0]);
        assert_eq!(f.branch_counts().first_only, 1);
    }

    #[test]
    fn lemma_fallback() {
        let f = build_fused_matrix(
            &dicts(&[("Cats", "cat")]),
            &table(&[("cat", &[2.0, 2.0])]),
            &table(&[("dog", &[1.0, 0.0])]),
            2,
            &FusionOptions::default(),
        )
        .unwrap();
        assert_eq!(f.row(2), &[2.0, 2.0]);
        let c = f.branch_counts();
        assert_eq!((c.lemma_hit, c.first_only, c.total()), (1, 1, 1));
    }

    #[test]
    fn case_variants() {
        let d = dicts(&[("PARIS", "paris"), ("souk", "souk")]);
        let e1 = table(&[("Paris", &[1.0]), ("Souk", &[2.0])]);
        let e2 = table(&[("nothing", &[0.0])]);
        let f = build_fused_matrix(&d, &e1, &e2, 1, &FusionOptions::default()).unwrap();
        assert_eq!(f.row(2), &[1.0]);
        assert_eq!(f.row(3), &[2.0]);
        assert_eq!(f.branch_counts().case_hit, 2);
    }

    #[test]
    fn unknown_fill_and_counts() {
        let opts = FusionOptions {
            unknown_fill: -1.0,
            ..Default::default()
        };
        let f = build_fused_matrix(
            &dicts(&[("a", "a"), ("b", "b")]),
            &table(&[("a", &[1.0])]),
            &table(&[("c", &[1.0])]),
            1,
            &opts,
        )
        .unwrap();
        assert_eq!(f.row(1), &[-1.0]);
        assert_eq!(f.row(3), &[-1.0]);
        assert_eq!(f.row(0), &[0.0]);
        let report = fusion_report(&f);
        assert_eq!(report.counts.total(), 2);
        assert_eq!(report.unknown_rate(), 0.5);
    }

    #[test]
    fn chain_order_is_configurable() {
        let d = dicts(&[("Cats", "cat")]);
        let e1 = table(&[("cat", &[1.0]), ("cats", &[5.0])]);
        let e2 = table(&[("x", &[0.0])]);
        let default = build_fused_matrix(&d, &e1, &e2, 1, &FusionOptions::default()).unwrap();
        assert_eq!(default.row(2), &[5.0]);
        let lemma_first = FusionOptions {
            chain: vec![CandidateKey::Lemma, CandidateKey::Lowercase],
            ..Default::default()
        };
        let f = build_fused_matrix(&d, &e1, &e2, 1, &lemma_first).unwrap();
        assert_eq!(f.row(2), &[1.0]);
    }

    #[test]
    fn errors() {
        let e1 = table(&[("a", &[1.0])]);
        let e2 = table(&[("a", &[1.0, 2.0])]);
        assert!(matches!(
            build_fused_matrix(
                &dicts(&[("a", "a")]),
                &e1,
                &e2,
                1,
                &FusionOptions::default()
            ),
            Err(FusionError::DimMismatch { .. })
        ));
        assert!(matches!(
            build_fused_matrix(&dicts(&[]), &e1, &e1, 1, &FusionOptions::default()),
            Err(FusionError::EmptyDictionaries)
        ));
    }

    #[test]
    fn report_rates() {
        let counts = BranchCounts {
            both: 8,
            first_only: 1,
            second_only: 1,
            ..Default::default()
        };
        let r = FusionReport { counts, words: 10 };
        assert_eq!(r.unknown_rate(), 0.0);
        assert_eq!(r.counts.total(), 10);
        let all_unknown = FusionReport {
            counts: BranchCounts {
                unknown: 4,
                ..Default::default()
            },
            words: 4,
        };
        assert_eq!(all_unknown.unknown_rate(), 1.0);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("branch,count,percent\nboth,8,80\n"));
    }

    #[test]
    fn table_round_trip_keeps_alignment() {
        let d = dicts(&[("a", "a"), ("b", "b")]);
        let f = build_fused_matrix(
            &d,
            &table(&[("a", &[0.5])]),
            &table(&[("b", &[0.25])]),
            1,
            &FusionOptions::default(),
        )
        .unwrap();
        let t = f.to_table(&d).unwrap();
        assert_eq!(
            t.tokens()[..2],
            [PAD_TOKEN.to_string(), UNK_TOKEN.to_string()]
        );
        let back = FusedMatrix::from_table(&t, &d).unwrap();
        assert_eq!(back.matrix(), f.matrix());
        let other = dicts(&[("b", "b"), ("a", "a")]);
        assert!(FusedMatrix::from_table(&t, &other).is_err());
    }
}
