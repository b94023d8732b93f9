//! Pretrained embedding tables and their on-disk formats.
//!
//! Three layouts are understood:
//!
//! - GloVe text: one `token c1 c2 ... cd` line per word, no header.
//! - fastText text: a `vocab_size dim` header line followed by GloVe-style
//!   lines.
//! - word2vec binary: an ASCII `vocab_size dim` header line, then for each
//!   word the token bytes, one space, and `dim` little-endian `f32`s,
//!   optionally followed by a newline.
//!
//! All parsers stream: they read one line or record at a time and keep only
//! the growing table plus an O(dim) scratch buffer. Components are widened
//! to `f64` on load.

mod table;
mod text;
mod word2vec;

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub use table::{mean_vector, EmbeddingTable, TableBuilder};
pub use text::{parse_fasttext_text, parse_glove_text, write_text};
pub use word2vec::{parse_word2vec_binary, write_word2vec_binary};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("input contains no embeddings")]
    EmptyInput,
    #[error("line {0}: component count differs from the table dimension")]
    DimMismatch(usize),
    #[error("line {0}: unparseable component")]
    ParseFloat(usize),
    #[error("line {0}: not valid UTF-8")]
    Utf8(usize),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("record {0} is truncated")]
    TruncatedRecord(usize),
    #[error("record {0} contains a non-finite component")]
    NonFinite(usize),
    #[error("table is empty")]
    EmptyTable,
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("unknown embedding format {0:?} (expected glove, w2v-bin or fasttext)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Non-fatal conditions noticed while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// A token occurred again at `position` (line or record number); the
    /// first occurrence was kept.
    DuplicateToken { token: String, position: usize },
    /// The header announced `expected` words but `actual` were read.
    CountMismatch { expected: usize, actual: usize },
}

/// A parsed table together with the warnings raised on the way.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub table: EmbeddingTable,
    pub warnings: Vec<ParseWarning>,
}

impl Parsed {
    pub fn duplicate_count(&self) -> usize {
        self.warnings
            .iter()
            .filter(|w| matches!(w, ParseWarning::DuplicateToken { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingFormat {
    Glove,
    Word2VecBinary,
    FastText,
}

impl EmbeddingFormat {
    pub fn parse<R: BufRead>(self, name: &str, reader: R) -> Result<Parsed, EmbeddingError> {
        match self {
            EmbeddingFormat::Glove => parse_glove_text(name, reader),
            EmbeddingFormat::Word2VecBinary => parse_word2vec_binary(name, reader),
            EmbeddingFormat::FastText => parse_fasttext_text(name, reader),
        }
    }

    /// Opens and parses `path`; the table is named after the file stem.
    pub fn load(self, path: &Path) -> Result<Parsed, EmbeddingError> {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let reader = BufReader::with_capacity(1 << 20, File::open(path)?);
        self.parse(&name, reader)
    }
}

impl FromStr for EmbeddingFormat {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "glove" => Ok(EmbeddingFormat::Glove),
            "w2v-bin" => Ok(EmbeddingFormat::Word2VecBinary),
            "fasttext" => Ok(EmbeddingFormat::FastText),
            other => Err(EmbeddingError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for EmbeddingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingFormat::Glove => "glove",
            EmbeddingFormat::Word2VecBinary => "w2v-bin",
            EmbeddingFormat::FastText => "fasttext",
        })
    }
}

/// Splits a `path:format` argument at its last colon.
pub fn split_path_format(arg: &str) -> Result<(&str, EmbeddingFormat), EmbeddingError> {
    match arg.rsplit_once(':') {
        Some((path, fmt)) if !path.is_empty() => Ok((path, fmt.parse()?)),
        _ => Err(EmbeddingError::UnknownFormat(arg.to_string())),
    }
}
