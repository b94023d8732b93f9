use std::io::{BufRead, Write};

use super::{EmbeddingError, EmbeddingTable, ParseWarning, Parsed, TableBuilder};

/// Parses a headerless GloVe text stream.
///
/// The dimension is fixed by the first line. Blank lines are skipped; any
/// other line whose component count differs is an error, including a
/// truncated final line.
pub fn parse_glove_text<R: BufRead>(name: &str, reader: R) -> Result<Parsed, EmbeddingError> {
    let mut lines = LineReader::new(reader);
    let mut scratch = Vec::new();
    let mut warnings = Vec::new();

    let first = loop {
        match lines.next_line()? {
            None => return Err(EmbeddingError::EmptyInput),
            Some((line_no, line)) => {
                if let Some(token) = split_line(line, line_no, None, &mut scratch)? {
                    break token;
                }
            }
        }
    };
    let mut builder = TableBuilder::new(name, scratch.len());
    builder.push(first, &scratch);
    read_rows(&mut lines, &mut builder, &mut scratch, &mut warnings)?;
    Ok(Parsed {
        table: builder.finish(),
        warnings,
    })
}

/// Parses a fastText `.vec` stream: `vocab_size dim` header, then GloVe lines.
///
/// A header count that disagrees with the number of rows read is reported as
/// a [`ParseWarning::CountMismatch`] rather than an error.
pub fn parse_fasttext_text<R: BufRead>(name: &str, reader: R) -> Result<Parsed, EmbeddingError> {
    let mut lines = LineReader::new(reader);
    let header = match lines.next_line()? {
        None => return Err(EmbeddingError::EmptyInput),
        Some((_, line)) => String::from_utf8_lossy(line).into_owned(),
    };
    let (declared, dim) = parse_header(&header)?;

    let mut builder = TableBuilder::with_capacity(name, dim, declared.min(1 << 22));
    let mut scratch = Vec::with_capacity(dim);
    let mut warnings = Vec::new();
    read_rows(&mut lines, &mut builder, &mut scratch, &mut warnings)?;
    if builder.is_empty() {
        return Err(EmbeddingError::EmptyInput);
    }
    if builder.len() + duplicates(&warnings) != declared {
        warnings.push(ParseWarning::CountMismatch {
            expected: declared,
            actual: builder.len() + duplicates(&warnings),
        });
    }
    Ok(Parsed {
        table: builder.finish(),
        warnings,
    })
}

/// Writes `table` as text, one `token c1 ... cd` line per row, optionally
/// preceded by a fastText-style `len dim` header.
///
/// Components use the shortest representation that parses back to the same
/// `f64`, so text round trips are exact.
pub fn write_text<W: Write>(
    table: &EmbeddingTable,
    with_header: bool,
    mut writer: W,
) -> Result<(), EmbeddingError> {
    if with_header {
        writeln!(writer, "{} {}", table.len(), table.dim())?;
    }
    for (token, row) in table.iter() {
        writer.write_all(token.as_bytes())?;
        for v in row {
            write!(writer, " {v}")?;
        }
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub(super) fn parse_header(header: &str) -> Result<(usize, usize), EmbeddingError> {
    let bad = || EmbeddingError::BadHeader(header.trim_end().to_string());
    let mut fields = header.split_ascii_whitespace();
    let count = fields
        .next()
        .and_then(|f| f.parse::<usize>().ok())
        .ok_or_else(bad)?;
    let dim = fields
        .next()
        .and_then(|f| f.parse::<usize>().ok())
        .ok_or_else(bad)?;
    if fields.next().is_some() || dim == 0 {
        return Err(bad());
    }
    Ok((count, dim))
}

fn duplicates(warnings: &[ParseWarning]) -> usize {
    warnings
        .iter()
        .filter(|w| matches!(w, ParseWarning::DuplicateToken { .. }))
        .count()
}

fn read_rows<R: BufRead>(
    lines: &mut LineReader<R>,
    builder: &mut TableBuilder,
    scratch: &mut Vec<f64>,
    warnings: &mut Vec<ParseWarning>,
) -> Result<(), EmbeddingError> {
    let dim = builder.dim();
    while let Some((line_no, line)) = lines.next_line()? {
        if let Some(token) = split_line(line, line_no, Some(dim), scratch)? {
            if !builder.push(token.clone(), scratch) {
                warnings.push(ParseWarning::DuplicateToken {
                    token,
                    position: line_no,
                });
            }
        }
    }
    Ok(())
}

/// Splits one line into its token and components (written to `scratch`).
/// Returns `None` for a blank line.
fn split_line(
    line: &[u8],
    line_no: usize,
    dim: Option<usize>,
    scratch: &mut Vec<f64>,
) -> Result<Option<String>, EmbeddingError> {
    let line = std::str::from_utf8(line).map_err(|_| EmbeddingError::Utf8(line_no))?;
    let mut fields = line.split_ascii_whitespace();
    let Some(token) = fields.next() else {
        return Ok(None);
    };
    scratch.clear();
    for field in fields {
        let v: f64 = field
            .parse()
            .map_err(|_| EmbeddingError::ParseFloat(line_no))?;
        if !v.is_finite() {
            return Err(EmbeddingError::ParseFloat(line_no));
        }
        scratch.push(v);
    }
    match dim {
        Some(d) if scratch.len() != d => Err(EmbeddingError::DimMismatch(line_no)),
        None if scratch.is_empty() => Err(EmbeddingError::DimMismatch(line_no)),
        _ => Ok(Some(token.to_string())),
    }
}

/// Reads LF-terminated lines into a reused buffer, tracking 1-based numbers.
struct LineReader<R> {
    inner: R,
    buf: Vec<u8>,
    line_no: usize,
}

impl<R: BufRead> LineReader<R> {
    fn new(inner: R) -> Self {
        Self {
            inner,
            buf: Vec::new(),
            line_no: 0,
        }
    }

    fn next_line(&mut self) -> Result<Option<(usize, &[u8])>, EmbeddingError> {
        self.buf.clear();
        if self.inner.read_until(b'\n', &mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        let mut end = self.buf.len();
        while end > 0 && matches!(self.buf[end - 1], b'\n' | b'\r') {
            end -= 1;
        }
        Ok(Some((self.line_no, &self.buf[..end])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn glove(s: &str) -> Result<Parsed, EmbeddingError> {
        parse_glove_text("t", s.as_bytes())
    }

    fn fasttext(s: &str) -> Result<Parsed, EmbeddingError> {
        parse_fasttext_text("t", s.as_bytes())
    }

    #[test]
    fn glove_two_lines() {
        let p = glove("a 1.0 2.0\nb 3.0 4.0\n").unwrap();
        assert_eq!(p.table.dim(), 2);
        assert_eq!(p.table.index_of("a"), Some(0));
        assert_eq!(p.table.index_of("b"), Some(1));
        assert_eq!(p.table.mean(), &[2.0, 3.0]);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn glove_empty_input() {
        assert!(matches!(glove(""), Err(EmbeddingError::EmptyInput)));
        assert!(matches!(glove("\n\n"), Err(EmbeddingError::EmptyInput)));
    }

    #[test]
    fn glove_dim_mismatch_reports_line() {
        assert!(matches!(
            glove("a 1.0\nb 2.0 3.0\n"),
            Err(EmbeddingError::DimMismatch(2))
        ));
    }

    #[test]
    fn glove_bad_component() {
        assert!(matches!(
            glove("a 1.0 2.0\nb 3.0 x\n"),
            Err(EmbeddingError::ParseFloat(2))
        ));
        assert!(matches!(
            glove("a 1.0 nan\n"),
            Err(EmbeddingError::ParseFloat(1))
        ));
    }

    #[test]
    fn glove_truncated_tail_fails_loudly() {
        assert!(matches!(
            glove("a 1.0 2.0\nb 3.0"),
            Err(EmbeddingError::DimMismatch(2))
        ));
        assert!(glove("a 1.0 2.0\nb 3.0 4.").is_ok());
        assert!(matches!(
            glove("a 1.0 2.0\nb 3.0 4.0e"),
            Err(EmbeddingError::ParseFloat(2))
        ));
    }

    #[test]
    fn glove_duplicates_keep_first() {
        let p = glove("a 1 1\nb 2 2\na 9 9\n").unwrap();
        assert_eq!(p.table.len(), 2);
        assert_eq!(p.table.get("a").unwrap(), &[1.0, 1.0]);
        assert_eq!(
            p.warnings,
            vec![ParseWarning::DuplicateToken {
                token: "a".into(),
                position: 3
            }]
        );
    }

    #[test]
    fn glove_tolerates_crlf_and_trailing_space() {
        let p = glove("a 1 2 \r\nb 3 4\r\n").unwrap();
        assert_eq!(p.table.mean(), &[2.0, 3.0]);
    }

    #[test]
    fn fasttext_single_entry() {
        let p = fasttext("1 2\nq 5.0 7.0\n").unwrap();
        assert_eq!(p.table.dim(), 2);
        assert_eq!(p.table.index_of("q"), Some(0));
        assert_eq!(p.table.mean(), &[5.0, 7.0]);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn fasttext_count_mismatch_is_a_warning() {
        let p = fasttext("3 2\nq 5.0 7.0\n").unwrap();
        assert_eq!(p.table.len(), 1);
        assert_eq!(
            p.warnings,
            vec![ParseWarning::CountMismatch {
                expected: 3,
                actual: 1
            }]
        );
    }

    #[test]
    fn fasttext_header_only_is_empty() {
        assert!(matches!(
            fasttext("0 300\n"),
            Err(EmbeddingError::EmptyInput)
        ));
        assert!(matches!(fasttext(""), Err(EmbeddingError::EmptyInput)));
    }

    #[test]
    fn fasttext_bad_header() {
        assert!(matches!(
            fasttext("q 1 2\n"),
            Err(EmbeddingError::BadHeader(_))
        ));
        assert!(matches!(
            fasttext("1 0\n"),
            Err(EmbeddingError::BadHeader(_))
        ));
        assert!(matches!(fasttext("1\n"), Err(EmbeddingError::BadHeader(_))));
    }

    #[test]
    fn fasttext_dim_must_match_header() {
        assert!(matches!(
            fasttext("1 3\nq 5.0 7.0\n"),
            Err(EmbeddingError::DimMismatch(2))
        ));
    }

    #[test]
    fn text_writer_round_trips() {
        let p = glove("a 0.1 -2.5e-7\nb 3 4\n").unwrap();
        let mut out = Vec::new();
        write_text(&p.table, true, &mut out).unwrap();
        let back = fasttext(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(back.table.matrix(), p.table.matrix());
        assert_eq!(back.table.tokens(), p.table.tokens());
    }
}
