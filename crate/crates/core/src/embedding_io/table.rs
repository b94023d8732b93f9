use std::collections::HashMap;

use super::EmbeddingError;

/// A token to vector lookup table with its column mean.
///
/// Rows are stored row-major in insertion order. The table is immutable once
/// built; the mean is computed by [`TableBuilder::finish`] as a plain
/// sequential column sum divided by the row count.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    name: String,
    dim: usize,
    vocab: HashMap<String, usize>,
    tokens: Vec<String>,
    matrix: Vec<f64>,
    mean: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from `(token, row)` pairs; later duplicates are ignored.
    pub fn from_rows<I, S>(name: &str, dim: usize, rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut builder = TableBuilder::new(name, dim);
        for (i, (token, row)) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(EmbeddingError::DimMismatch(i + 1));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite(i + 1));
            }
            builder.push(token.into(), &row);
        }
        Ok(builder.finish())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Row index of `token`, byte-exact.
    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.vocab.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.matrix[index * self.dim..(index + 1) * self.dim]
    }

    /// Tokens in row order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vocab(&self) -> &HashMap<String, usize> {
        &self.vocab
    }

    /// The row-major `(len, dim)` matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Cached column mean; all zeros for an empty table.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.tokens
            .iter()
            .zip(self.matrix.chunks_exact(self.dim))
            .map(|(t, r)| (t.as_str(), r))
    }
}

/// Recomputes the column mean of `table` from its rows.
pub fn mean_vector(table: &EmbeddingTable) -> Result<Vec<f64>, EmbeddingError> {
    if table.is_empty() {
        return Err(EmbeddingError::EmptyTable);
    }
    Ok(column_mean(&table.matrix, table.dim))
}

fn column_mean(matrix: &[f64], dim: usize) -> Vec<f64> {
    let mut sums = vec![0.0; dim];
    let mut n = 0usize;
    for row in matrix.chunks_exact(dim) {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
        n += 1;
    }
    if n > 0 {
        let n = n as f64;
        sums.iter_mut().for_each(|s| *s /= n);
    }
    sums
}

/// Incremental table construction used by the streaming parsers.
#[derive(Debug)]
pub struct TableBuilder {
    name: String,
    dim: usize,
    vocab: HashMap<String, usize>,
    tokens: Vec<String>,
    matrix: Vec<f64>,
}

impl TableBuilder {
    pub fn new(name: &str, dim: usize) -> Self {
        Self {
            name: name.to_string(),
            dim,
            vocab: HashMap::new(),
            tokens: Vec::new(),
            matrix: Vec::new(),
        }
    }

    pub fn with_capacity(name: &str, dim: usize, rows: usize) -> Self {
        let mut b = Self::new(name, dim);
        b.vocab.reserve(rows);
        b.tokens.reserve(rows);
        b.matrix.reserve(rows.saturating_mul(dim));
        b
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Appends a row. Returns `false` (and stores nothing) for a duplicate.
    pub fn push(&mut self, token: String, row: &[f64]) -> bool {
        debug_assert_eq!(row.len(), self.dim);
        if self.vocab.contains_key(&token) {
            return false;
        }
        self.vocab.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.matrix.extend_from_slice(row);
        true
    }

    pub fn finish(self) -> EmbeddingTable {
        let mean = column_mean(&self.matrix, self.dim);
        EmbeddingTable {
            name: self.name,
            dim: self.dim,
            vocab: self.vocab,
            tokens: self.tokens,
            matrix: self.matrix,
            mean,
        }
    }
}
