use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use super::{CorpusError, SentimentLabel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewRecord {
    pub place_name: String,
    pub title: String,
    pub review_text: String,
    /// Star rating in `1..=5`.
    pub rate: u8,
}

impl ReviewRecord {
    /// Title and review joined by one space, or the review alone.
    pub fn text(&self, with_title: bool) -> String {
        if with_title && !self.title.trim().is_empty() {
            format!("{} {}", self.title, self.review_text)
        } else {
            self.review_text.clone()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadedReviews {
    pub records: Vec<ReviewRecord>,
    /// Data rows rejected for an invalid rate, blank review or short row.
    pub dropped: usize,
}

#[derive(Clone, Copy)]
enum Column {
    Place,
    Title,
    Review,
    Rate,
}

impl Column {
    const ALL: [Column; 4] = [Column::Place, Column::Title, Column::Review, Column::Rate];

    fn display(self) -> &'static str {
        match self {
            Column::Place => "Place",
            Column::Title => "Title",
            Column::Review => "Review",
            Column::Rate => "Rate",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            Column::Place => &[
                "place",
                "place_name",
                "name",
                "shop",
                "shop_place",
                "name_of_the_shop_place",
            ],
            Column::Title => &["title", "review_title", "title_of_the_review"],
            Column::Review => &["review", "review_text", "text", "content"],
            Column::Rate => &["rate", "rating", "stars", "star_rating"],
        }
    }
}

/// Lowercases and maps every run of non-alphanumerics to one underscore.
fn normalize_header(h: &str) -> String {
    let mut out = String::with_capacity(h.len());
    for c in h.trim().chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if !out.is_empty() && !out.ends_with('_') {
            out.push('_');
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

/// Reads review rows from a CSV with a header naming the four columns in
/// any order. Invalid rows are dropped and counted.
pub fn load_reviews_csv<R: Read>(reader: R) -> Result<LoadedReviews, CorpusError> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(normalize_header).collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(CorpusError::EmptyFile);
    }

    let mut positions = [0usize; 4];
    for (slot, col) in positions.iter_mut().zip(Column::ALL) {
        *slot = headers
            .iter()
            .position(|h| col.aliases().contains(&h.as_str()))
            .ok_or_else(|| CorpusError::MissingColumn(col.display().to_string()))?;
    }
    let [place, title, review, rate] = positions;

    let mut out = LoadedReviews::default();
    for row in csv.records() {
        let row = row?;
        let field = |i: usize| row.get(i).map(str::trim);
        let parsed = match (field(place), field(title), field(review), field(rate)) {
            (Some(p), Some(t), Some(r), Some(s)) => s
                .parse::<u8>()
                .ok()
                .filter(|s| (1..=5).contains(s) && !r.is_empty())
                .map(|s| ReviewRecord {
                    place_name: p.to_string(),
                    title: t.to_string(),
                    review_text: r.to_string(),
                    rate: s,
                }),
            _ => None,
        };
        match parsed {
            Some(rec) => out.records.push(rec),
            None => out.dropped += 1,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaceReport {
    pub place: String,
    pub kept: usize,
    pub total: usize,
    /// `kept / total`.
    pub share: f64,
    /// Other places with the same (maximal) review count.
    pub tied_with: Vec<String>,
}

impl PlaceReport {
    pub fn is_tie(&self) -> bool {
        !self.tied_with.is_empty()
    }
}

/// Keeps only the records of the most-reviewed place.
///
/// Ties go to the lexicographically smallest name and are listed in the
/// report.
pub fn filter_dominant_place(
    records: Vec<ReviewRecord>,
) -> Result<(Vec<ReviewRecord>, PlaceReport), CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(r.place_name.trim()).or_default() += 1;
    }
    let best = *counts.values().max().expect("non-empty");
    let mut modal = counts
        .iter()
        .filter(|(_, &c)| c == best)
        .map(|(p, _)| p.to_string());
    let place = modal.next().expect("at least one modal place");
    let tied_with: Vec<String> = modal.collect();

    let total = records.len();
    let kept: Vec<ReviewRecord> = records
        .into_iter()
        .filter(|r| r.place_name.trim() == place)
        .collect();
    let report = PlaceReport {
        kept: kept.len(),
        total,
        share: kept.len() as f64 / total as f64,
        place,
        tied_with,
    };
    Ok((kept, report))
}

/// Mapping from star ratings to sentiment classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarBuckets {
    labels: [SentimentLabel; 5],
}

impl Default for StarBuckets {
    /// 1–2 stars bad, 3 neutral, 4–5 good.
    fn default() -> Self {
        use SentimentLabel::*;
        Self {
            labels: [Bad, Bad, Neutral, Good, Good],
        }
    }
}

impl StarBuckets {
    pub fn label(&self, rate: i64) -> Result<SentimentLabel, CorpusError> {
        if (1..=5).contains(&rate) {
            Ok(self.labels[(rate - 1) as usize])
        } else {
            Err(CorpusError::OutOfRange(rate))
        }
    }
}

/// Default bucketing: 1–2 → bad, 3 → neutral, 4–5 → good.
pub fn rate_to_label(rate: i64) -> Result<SentimentLabel, CorpusError> {
    StarBuckets::default().label(rate)
}

impl FromStr for StarBuckets {
    type Err = CorpusError;

    /// Parses `bad/neutral/good` star ranges such as `1-2/3/4-5`. The three
    /// ranges must be non-empty and tile `1..=5` in order.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorpusError::BadBuckets(s.to_string());
        let groups: Vec<&str> = s.split('/').collect();
        if groups.len() != 3 {
            return Err(bad());
        }
        let mut labels = [SentimentLabel::Bad; 5];
        let mut next = 1u8;
        for (group, label) in groups.iter().zip(SentimentLabel::ALL) {
            let (lo, hi) = match group.split_once('-') {
                Some((a, b)) => (a.trim().parse::<u8>(), b.trim().parse::<u8>()),
                None => (group.trim().parse::<u8>(), group.trim().parse::<u8>()),
            };
            let (lo, hi) = (lo.map_err(|_| bad())?, hi.map_err(|_| bad())?);
            if lo != next || hi < lo || hi > 5 {
                return Err(bad());
            }
            for star in lo..=hi {
                labels[(star - 1) as usize] = label;
            }
            next = hi + 1;
        }
        if next != 6 {
            return Err(bad());
        }
        Ok(Self { labels })
    }
}

impl fmt::Display for StarBuckets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for label in SentimentLabel::ALL {
            let stars: Vec<usize> = (1..=5).filter(|&s| self.labels[s - 1] == label).collect();
            let (lo, hi) = (stars[0], stars[stars.len() - 1]);
            parts.push(if lo == hi {
                lo.to_string()
            } else {
                format!("{lo}-{hi}")
            });
        }
        f.write_str(&parts.join("/"))
    }
}
