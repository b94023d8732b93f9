use std::io::{self, BufRead, Write};

use super::text::parse_header;
use super::{EmbeddingError, EmbeddingTable, ParseWarning, Parsed, TableBuilder};

/// Parses the word2vec binary layout.
///
/// Each record is the token bytes, a single space, and `dim` little-endian
/// `f32`s. A newline directly after a record's floats is consumed. Tokens
/// that are not valid UTF-8 are converted lossily.
pub fn parse_word2vec_binary<R: BufRead>(
    name: &str,
    mut reader: R,
) -> Result<Parsed, EmbeddingError> {
    let mut header = Vec::new();
    if reader.read_until(b'\n', &mut header)? == 0 {
        return Err(EmbeddingError::EmptyInput);
    }
    let header = std::str::from_utf8(&header)
        .map_err(|_| EmbeddingError::BadHeader(String::from_utf8_lossy(&header).into_owned()))?;
    let (count, dim) = parse_header(header)?;

    let mut builder = TableBuilder::with_capacity(name, dim, count.min(1 << 22));
    let mut warnings = Vec::new();
    let mut token = Vec::new();
    let mut raw = vec![0u8; dim * 4];
    let mut row = vec![0.0f64; dim];

    for record in 1..=count {
        token.clear();
        reader.read_until(b' ', &mut token)?;
        if token.pop() != Some(b' ') {
            return Err(EmbeddingError::TruncatedRecord(record));
        }
        reader.read_exact(&mut raw).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => EmbeddingError::TruncatedRecord(record),
            _ => EmbeddingError::Io(e),
        })?;
        for (v, bytes) in row.iter_mut().zip(raw.chunks_exact(4)) {
            let f = f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
            if !f.is_finite() {
                return Err(EmbeddingError::NonFinite(record));
            }
            *v = f64::from(f);
        }
        if reader.fill_buf()?.first() == Some(&b'\n') {
            reader.consume(1);
        }

        let token = String::from_utf8_lossy(&token).into_owned();
        if !builder.push(token.clone(), &row) {
            warnings.push(ParseWarning::DuplicateToken {
                token,
                position: record,
            });
        }
    }

    Ok(Parsed {
        table: builder.finish(),
        warnings,
    })
}

/// Writes `table` in the word2vec binary layout, narrowing components to
/// `f32`. No newline follows the records.
pub fn write_word2vec_binary<W: Write>(
    table: &EmbeddingTable,
    mut writer: W,
) -> Result<(), EmbeddingError> {
    writeln!(writer, "{} {}", table.len(), table.dim())?;
    let mut raw = Vec::with_capacity(table.dim() * 4);
    for (token, row) in table.iter() {
        writer.write_all(token.as_bytes())?;
        writer.write_all(b" ")?;
        raw.clear();
        for &v in row {
            raw.extend_from_slice(&(v as f32).to_le_bytes());
        }
        writer.write_all(&raw)?;
    }
    writer.flush()?;
    Ok(())
}
