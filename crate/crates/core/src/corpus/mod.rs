//! Review ingestion and encoding.
//!
//! The path from a scraped review CSV to model input is:
//! [`load_reviews_csv`] → [`filter_dominant_place`] → star bucketing via
//! [`StarBuckets`] → [`tokenize`] → [`build_dictionaries`] →
//! [`encode_sequence`] → [`split_train_test`]. [`prepare`] runs all of it
//! and [`Dataset`] persists the result.

mod dataset;
mod dictionary;
mod lemma;
mod reviews;
mod split;
mod tokenize;

use std::fmt;
use std::io;

use thiserror::Error;

pub use dataset::{prepare, Dataset, PrepareOptions, PrepareReport, DATASET_MAGIC};
pub use dictionary::{
    build_dictionaries, encode_sequence, CorpusDictionaries, EncodedExample, DEFAULT_MAX_LEN,
    PAD_INDEX, UNK_INDEX,
};
pub use lemma::{LemmaTable, Lemmatizer, SuffixStripper};
pub use reviews::{
    filter_dominant_place, load_reviews_csv, rate_to_label, LoadedReviews, PlaceReport,
    ReviewRecord, StarBuckets,
};
pub use split::split_train_test;
pub use tokenize::tokenize;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("CSV is missing the {0:?} column")]
    MissingColumn(String),
    #[error("CSV file is empty")]
    EmptyFile,
    #[error("no records to process")]
    EmptyInput,
    #[error("star rating {0} is outside 1..=5")]
    OutOfRange(i64),
    #[error("need at least 10 examples to split, got {0}")]
    TooFewExamples(usize),
    #[error("invalid star buckets {0:?} (expected e.g. 1-2/3/4-5)")]
    BadBuckets(String),
    #[error("lemma table line {0}: expected `token<TAB>lemma`")]
    BadLemmaTable(usize),
    #[error("dataset file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Three-way sentiment class with fixed integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SentimentLabel {
    Bad = 0,
    Neutral = 1,
    Good = 2,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Bad,
        SentimentLabel::Neutral,
        SentimentLabel::Good,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SentimentLabel::Bad => "bad",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Good => "good",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
