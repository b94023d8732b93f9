//! Binary checkpoint container.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic        8 bytes  "EMBFCKPT"
//! version      u32      1
//! config       u64 max_len, emb_dim, lstm_units, gru_units, num_classes,
//!              seed, vocab_size; f64 spatial_dropout_rate, dropout_rate;
//!              u8 train_embeddings
//! block count  u32
//! per block    u32 name length, name bytes (UTF-8), u64 rows, u64 cols,
//!              rows·cols f64 values
//! ```
//!
//! Blocks appear in the order of [`ModelParameters::blocks`], embedding
//! included.

use std::io::{Read, Write};

use super::{ModelConfig, ModelError, ModelParameters};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"EMBFCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(params: &ModelParameters, mut w: W) -> Result<(), ModelError> {
    let c = params.config();
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for v in [
        c.max_len,
        c.emb_dim,
        c.lstm_units,
        c.gru_units,
        c.num_classes,
    ] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    w.write_all(&c.seed.to_le_bytes())?;
    w.write_all(&(params.vocab_size() as u64).to_le_bytes())?;
    w.write_all(&c.spatial_dropout_rate.to_le_bytes())?;
    w.write_all(&c.dropout_rate.to_le_bytes())?;
    w.write_all(&[u8::from(c.train_embeddings)])?;

    w.write_all(&(params.blocks().len() as u32).to_le_bytes())?;
    let mut buf = Vec::new();
    for block in params.blocks() {
        w.write_all(&(block.name.len() as u32).to_le_bytes())?;
        w.write_all(block.name.as_bytes())?;
        w.write_all(&(block.rows as u64).to_le_bytes())?;
        w.write_all(&(block.cols as u64).to_le_bytes())?;
        buf.clear();
        for v in &params.values()[block.range()] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn u32_le<R: Read>(r: &mut R) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn u64_le<R: Read>(r: &mut R) -> Result<u64, ModelError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn f64_le<R: Read>(r: &mut R) -> Result<f64, ModelError> {
    Ok(f64::from_bits(u64_le(r)?))
}

fn usize_le<R: Read>(r: &mut R) -> Result<usize, ModelError> {
    usize::try_from(u64_le(r)?).map_err(|_| ModelError::Checkpoint("size overflows usize".into()))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ModelParameters, ModelError> {
    let bad = |m: String| ModelError::Checkpoint(m);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not an embfuse checkpoint".into()));
    }
    let version = u32_le(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let max_len = usize_le(&mut r)?;
    let emb_dim = usize_le(&mut r)?;
    let lstm_units = usize_le(&mut r)?;
    let gru_units = usize_le(&mut r)?;
    let num_classes = usize_le(&mut r)?;
    let seed = u64_le(&mut r)?;
    let vocab_size = usize_le(&mut r)?;
    let spatial_dropout_rate = f64_le(&mut r)?;
    let dropout_rate = f64_le(&mut r)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let config = ModelConfig {
        max_len,
        emb_dim,
        lstm_units,
        gru_units,
        spatial_dropout_rate,
        dropout_rate,
        num_classes,
        seed,
        train_embeddings: flag[0] != 0,
    };
    config.validate()?;

    // Zero-valued template gives the expected block layout.
    let template = ModelParameters::init(&config, &vec![0.0; vocab_size * emb_dim], vocab_size)?;
    let count = u32_le(&mut r)? as usize;
    if count != template.blocks().len() {
        return Err(bad(format!(
            "expected {} blocks, found {count}",
            template.blocks().len()
        )));
    }
    let mut values = Vec::with_capacity(template.values().len());
    for expected in template.blocks() {
        let name_len = u32_le(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let rows = usize_le(&mut r)?;
        let cols = usize_le(&mut r)?;
        if name != expected.name.as_bytes() || rows != expected.rows || cols != expected.cols {
            return Err(bad(format!(
                "block {:?} ({rows}x{cols}) does not match expected {} ({}x{})",
                String::from_utf8_lossy(&name),
                expected.name,
                expected.rows,
                expected.cols
            )));
        }
        let mut raw = vec![0u8; rows * cols * 8];
        r.read_exact(&mut raw)?;
        values.extend(
            raw.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))),
        );
    }
    ModelParameters::from_values(&config, vocab_size, values)
}
