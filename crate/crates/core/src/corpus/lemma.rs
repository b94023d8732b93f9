use std::collections::HashMap;
use std::io::BufRead;

use super::CorpusError;

/// Maps a lowercased token to its lemma.
pub trait Lemmatizer {
    fn lemma(&self, token: &str) -> String;
}

impl<F: Fn(&str) -> String> Lemmatizer for F {
    fn lemma(&self, token: &str) -> String {
        self(token)
    }
}

/// Rule-based English suffix stripper.
///
/// Handles plural `-s`/`-es`/`-ies` and the `-ing`/`-ed` verb endings, with
/// undoubling of a trailing double consonant (`running` → `run`). Words of
/// three characters or fewer are returned unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixStripper;

impl Lemmatizer for SuffixStripper {
    fn lemma(&self, token: &str) -> String {
        strip_suffix(token)
    }
}

fn strip_suffix(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n <= 3 {
        return word.to_string();
    }
    let ends = |s: &str| word.ends_with(s);
    let stem = |k: usize| chars[..n - k].iter().collect::<String>();

    if ends("ies") && n > 4 {
        return stem(3) + "y";
    }
    if ends("es") {
        let base = stem(2);
        if ["s", "x", "z", "ch", "sh"]
            .iter()
            .any(|s| base.ends_with(s))
        {
            return base;
        }
    }
    if ends("s") && !ends("ss") && !ends("us") && !ends("is") {
        return stem(1);
    }
    for suffix in ["ing", "ed"] {
        if ends(suffix) {
            let k = suffix.len();
            let base: Vec<char> = chars[..n - k].to_vec();
            if base.len() >= 3 && base.iter().any(|c| is_vowel(*c)) {
                return undouble(base);
            }
        }
    }
    word.to_string()
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

fn undouble(mut base: Vec<char>) -> String {
    let n = base.len();
    if n >= 2 {
        let (a, b) = (base[n - 2], base[n - 1]);
        if a == b && a.is_alphabetic() && !is_vowel(a) && !matches!(a, 'l' | 's' | 'z') {
            base.pop();
        }
    }
    base.into_iter().collect()
}

/// Lemmas loaded from `token<TAB>lemma` lines, falling back to another
/// lemmatizer for tokens the table does not list.
pub struct LemmaTable<L = SuffixStripper> {
    entries: HashMap<String, String>,
    fallback: L,
}

impl LemmaTable<SuffixStripper> {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        Self::with_fallback(reader, SuffixStripper)
    }
}

impl<L: Lemmatizer> LemmaTable<L> {
    pub fn with_fallback<R: BufRead>(reader: R, fallback: L) -> Result<Self, CorpusError> {
        let mut entries = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            match line.split_once('\t') {
                Some((token, lemma))
                    if !token.is_empty() && !lemma.is_empty() && !lemma.contains('\t') =>
                {
                    entries
                        .entry(token.to_string())
                        .or_insert_with(|| lemma.to_string());
                }
                _ => return Err(CorpusError::BadLemmaTable(i + 1)),
            }
        }
        Ok(Self { entries, fallback })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<L: Lemmatizer> Lemmatizer for LemmaTable<L> {
    fn lemma(&self, token: &str) -> String {
        match self.entries.get(token) {
            Some(l) => l.clone(),
            None => self.fallback.lemma(token),
        }
    }
}
