use std::collections::HashMap;

use super::{Lemmatizer, SentimentLabel};

pub const PAD_INDEX: u32 = 0;
pub const UNK_INDEX: u32 = 1;
pub const DEFAULT_MAX_LEN: usize = 60;

/// The word index and the lemma dictionary of a corpus.
///
/// Indices 0 and 1 are reserved for padding and unknown words; corpus
/// tokens take `2..vocab_size` in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDictionaries {
    dict_words: HashMap<String, u32>,
    tokens: Vec<String>,
    lemma_dict: HashMap<String, String>,
}

impl CorpusDictionaries {
    /// Rebuilds dictionaries from tokens in index order (index 2 first) and
    /// their lemmas.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut dicts = Self {
            dict_words: HashMap::new(),
            tokens: Vec::new(),
            lemma_dict: HashMap::new(),
        };
        for (token, lemma) in entries {
            if dicts.dict_words.contains_key(&token) {
                continue;
            }
            dicts
                .dict_words
                .insert(token.clone(), 2 + dicts.tokens.len() as u32);
            dicts.lemma_dict.insert(token.clone(), lemma);
            dicts.tokens.push(token);
        }
        dicts
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len() + 2
    }

    /// Number of corpus words, i.e. `vocab_size - 2`.
    pub fn word_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.dict_words.get(token).copied()
    }

    pub fn lemma_of(&self, token: &str) -> Option<&str> {
        self.lemma_dict.get(token).map(String::as_str)
    }

    /// Corpus tokens in index order; `tokens()[i]` has index `i + 2`.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// `(token, index)` pairs in index order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u32)> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32 + 2))
    }

    pub fn dict_words(&self) -> &HashMap<String, u32> {
        &self.dict_words
    }

    pub fn lemma_dict(&self) -> &HashMap<String, String> {
        &self.lemma_dict
    }
}

/// Builds the word index over original-case tokens in first-seen order;
/// each token's lemma is `lemmatizer(lowercase(token))`.
pub fn build_dictionaries<L: Lemmatizer + ?Sized>(
    token_lists: &[Vec<String>],
    lemmatizer: &L,
) -> CorpusDictionaries {
    let mut seen = std::collections::HashSet::new();
    let entries = token_lists
        .iter()
        .flatten()
        .filter(|t| seen.insert(t.as_str()))
        .map(|t| (t.clone(), lemmatizer.lemma(&t.to_lowercase())))
        .collect::<Vec<_>>();
    CorpusDictionaries::from_entries(entries)
}

/// A padded index sequence and its label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedExample {
    pub indices: Vec<u32>,
    pub label: SentimentLabel,
}

/// Maps tokens to indices (unknown → 1), keeps the first `max_len` and
/// left-pads with 0 up to `max_len`.
pub fn encode_sequence<S: AsRef<str>>(
    tokens: &[S],
    dicts: &CorpusDictionaries,
    max_len: usize,
) -> Vec<u32> {
    let kept = tokens.len().min(max_len);
    let mut out = vec![PAD_INDEX; max_len - kept];
    out.extend(
        tokens[..kept]
            .iter()
            .map(|t| dicts.index_of(t.as_ref()).unwrap_or(UNK_INDEX)),
    );
    out
}
