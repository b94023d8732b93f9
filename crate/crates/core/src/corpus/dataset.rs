//! The prepared-dataset file and the pipeline that produces it.
//!
//! Layout (UTF-8, LF line endings, version 1):
//!
//! ```text
//! embfuse-dataset v1
//! vocab_size <n>
//! max_len <len>
//! train <count>
//! test <count>
//! dictionary
//! <index>\t<token>\t<lemma>        one line per corpus word, index 2..n
//! examples
//! <train|test>\t<label code>\t<i1 i2 ... i_len>
//! ```

use std::io::{BufRead, Read, Write};

use super::{
    build_dictionaries, encode_sequence, filter_dominant_place, load_reviews_csv, split_train_test,
    tokenize, CorpusDictionaries, CorpusError, EncodedExample, Lemmatizer, PlaceReport,
    SentimentLabel, StarBuckets, DEFAULT_MAX_LEN,
};

pub const DATASET_MAGIC: &str = "embfuse-dataset v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dicts: CorpusDictionaries,
    pub max_len: usize,
    pub train: Vec<EncodedExample>,
    pub test: Vec<EncodedExample>,
}

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub buckets: StarBuckets,
    pub with_title: bool,
    pub max_len: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            buckets: StarBuckets::default(),
            with_title: true,
            max_len: DEFAULT_MAX_LEN,
            train_fraction: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrepareReport {
    pub loaded: usize,
    pub dropped: usize,
    pub place: PlaceReport,
    /// Examples per label code after filtering.
    pub label_counts: [usize; 3],
    pub train: usize,
    pub test: usize,
    pub vocab_size: usize,
}

/// CSV → dominant place → labels → tokens → dictionaries → encoded split.
pub fn prepare<R: Read, L: Lemmatizer + ?Sized>(
    csv: R,
    options: &PrepareOptions,
    lemmatizer: &L,
) -> Result<(Dataset, PrepareReport), CorpusError> {
    let loaded = load_reviews_csv(csv)?;
    let n_loaded = loaded.records.len();
    let (records, place) = filter_dominant_place(loaded.records)?;

    let token_lists: Vec<Vec<String>> = records
        .iter()
        .map(|r| tokenize(&r.text(options.with_title)))
        .collect();
    let dicts = build_dictionaries(&token_lists, lemmatizer);

    let mut label_counts = [0usize; 3];
    let mut examples = Vec::with_capacity(records.len());
    for (record, tokens) in records.iter().zip(&token_lists) {
        let label = options.buckets.label(i64::from(record.rate))?;
        label_counts[label.code()] += 1;
        examples.push(EncodedExample {
            indices: encode_sequence(tokens, &dicts, options.max_len),
            label,
        });
    }
    let (train, test) = split_train_test(&examples, options.train_fraction, options.seed)?;

    let report = PrepareReport {
        loaded: n_loaded,
        dropped: loaded.dropped,
        place,
        label_counts,
        train: train.len(),
        test: test.len(),
        vocab_size: dicts.vocab_size(),
    };
    let dataset = Dataset {
        dicts,
        max_len: options.max_len,
        train,
        test,
    };
    Ok((dataset, report))
}

impl Dataset {
    pub fn vocab_size(&self) -> usize {
        self.dicts.vocab_size()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), CorpusError> {
        writeln!(w, "{DATASET_MAGIC}")?;
        writeln!(w, "vocab_size {}", self.vocab_size())?;
        writeln!(w, "max_len {}", self.max_len)?;
        writeln!(w, "train {}", self.train.len())?;
        writeln!(w, "test {}", self.test.len())?;
        writeln!(w, "dictionary")?;
        for (token, index) in self.dicts.entries() {
            let lemma = self.dicts.lemma_of(token).unwrap_or(token);
            writeln!(w, "{index}\t{token}\t{lemma}")?;
        }
        writeln!(w, "examples")?;
        for (split, examples) in [("train", &self.train), ("test", &self.test)] {
            for e in examples {
                write!(w, "{split}\t{}\t", e.label.code())?;
                for (i, idx) in e.indices.iter().enumerate() {
                    if i > 0 {
                        w.write_all(b" ")?;
                    }
                    write!(w, "{idx}")?;
                }
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String), CorpusError> {
            match lines.next() {
                Some((n, line)) => Ok((n, line?)),
                None => Err(CorpusError::Format {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let fail = |line: usize, message: String| CorpusError::Format { line, message };

        let (n, magic) = next("header")?;
        if magic != DATASET_MAGIC {
            return Err(fail(n, format!("expected {DATASET_MAGIC:?}")));
        }
        let mut field = |key: &str| -> Result<usize, CorpusError> {
            let (n, line) = next(key)?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| fail(n, format!("expected `{key} <count>`")))
        };
        let vocab_size = field("vocab_size")?;
        let max_len = field("max_len")?;
        let n_train = field("train")?;
        let n_test = field("test")?;
        if vocab_size < 2 {
            return Err(fail(2, "vocab_size must be at least 2".into()));
        }

        let (n, line) = next("dictionary")?;
        if line != "dictionary" {
            return Err(fail(n, "expected `dictionary`".into()));
        }
        let mut entries = Vec::with_capacity(vocab_size - 2);
        for expected in 2..vocab_size {
            let (n, line) = next("dictionary entry")?;
            let mut parts = line.splitn(3, '\t');
            let (Some(idx), Some(token), Some(lemma)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(fail(n, "expected `index<TAB>token<TAB>lemma`".into()));
            };
            if idx.parse::<usize>().ok() != Some(expected) {
                return Err(fail(n, format!("expected index {expected}")));
            }
            entries.push((token.to_string(), lemma.to_string()));
        }
        let dicts = CorpusDictionaries::from_entries(entries);
        if dicts.vocab_size() != vocab_size {
            return Err(fail(n, "duplicate dictionary token".into()));
        }

        let (n, line) = next("examples")?;
        if line != "examples" {
            return Err(fail(n, "expected `examples`".into()));
        }
        let mut train = Vec::with_capacity(n_train);
        let mut test = Vec::with_capacity(n_test);
        for _ in 0..n_train + n_test {
            let (n, line) = next("example")?;
            let mut parts = line.splitn(3, '\t');
            let (Some(split), Some(label), Some(indices)) =
                (parts.next(), parts.next(), parts.next())
            else {
                return Err(fail(n, "expected `split<TAB>label<TAB>indices`".into()));
            };
            let label = label
                .parse::<usize>()
                .ok()
                .and_then(SentimentLabel::from_code)
                .ok_or_else(|| fail(n, format!("bad label {label:?}")))?;
            let indices: Vec<u32> = indices
                .split(' ')
                .map(|s| s.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| fail(n, "bad index".into()))?;
            if indices.len() != max_len {
                return Err(fail(n, format!("expected {max_len} indices")));
            }
            if indices.iter().any(|&i| i as usize >= vocab_size) {
                return Err(fail(n, "index out of vocabulary".into()));
            }
            let example = EncodedExample { indices, label };
            match split {
                "train" if train.len() < n_train => train.push(example),
                "test" if test.len() < n_test => test.push(example),
                other => return Err(fail(n, format!("unexpected split {other:?}"))),
            }
        }
        Ok(Dataset {
            dicts,
            max_len,
            train,
            test,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SuffixStripper;

    fn csv() -> String {
        let mut s = String::from("Place,Title,Review,Rate\n");
        for i in 0..30 {
            let rate = [1, 2, 3, 4, 5][i % 5];
            s.push_str(&format!(
                "Souk,Visit {i},Great spices and tea number {i},{rate}\n"
            ));
        }
        s.push_str("Garden,Nice,Blue walls,5\n");
        s
    }

    #[test]
    fn prepare_and_round_trip() {
        let opts = PrepareOptions {
            seed: 3,
            max_len: 12,
            ..Default::default()
        };
        let (ds, report) = prepare(csv().as_bytes(), &opts, &SuffixStripper).unwrap();
        assert_eq!(report.loaded, 31);
        assert_eq!(report.place.place, "Souk");
        assert_eq!(report.label_counts, [12, 6, 12]);
        assert_eq!(report.train + report.test, 30);

        let mut bytes = Vec::new();
        ds.write(&mut bytes).unwrap();
        let back = Dataset::read(bytes.as_slice()).unwrap();
        assert_eq!(back, ds);

        let (again, _) = prepare(csv().as_bytes(), &opts, &SuffixStripper).unwrap();
        let mut bytes2 = Vec::new();
        again.write(&mut bytes2).unwrap();
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn title_flag_changes_tokens() {
        let with = PrepareOptions {
            seed: 1,
            ..Default::default()
        };
        let without = PrepareOptions {
            with_title: false,
            ..with.clone()
        };
        let (a, _) = prepare(csv().as_bytes(), &with, &SuffixStripper).unwrap();
        let (b, _) = prepare(csv().as_bytes(), &without, &SuffixStripper).unwrap();
        assert!(a.dicts.index_of("Visit").is_some());
        assert!(b.dicts.index_of("Visit").is_none());
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(Dataset::read("nope\n".as_bytes()).is_err());
        let truncated =
            format!("{DATASET_MAGIC}\nvocab_size 3\nmax_len 2\ntrain 1\ntest 0\ndictionary\n");
        assert!(Dataset::read(truncated.as_bytes()).is_err());
        let oob = format!(
            "{DATASET_MAGIC}\nvocab_size 3\nmax_len 2\ntrain 1\ntest 0\ndictionary\n2\ta\ta\nexamples\ntrain\t0\t0 3\n"
        );
        assert!(matches!(
            Dataset::read(oob.as_bytes()),
            Err(CorpusError::Format { line: 9, .. })
        ));
    }
}
