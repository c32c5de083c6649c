use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{GeloError, Result};
use crate::numerics::{matrix_from_rows, to_row_major, Dtype, Matrix};

pub const GELD_MAGIC: &[u8; 4] = b"GELD";
pub const GELD_VERSION: u16 = 1;

/// Writes `magic | version u16 | dtype u16 | n u32 | d u32` followed by the
/// row-major little-endian payload.
pub fn write_dataset(path: &Path, h: &Matrix, dtype: Dtype) -> Result<()> {
    let rows = u32::try_from(h.nrows()).map_err(|_| GeloError::InvalidDimension("too many rows".into()))?;
    let cols = u32::try_from(h.ncols()).map_err(|_| GeloError::InvalidDimension("too many columns".into()))?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(GELD_MAGIC)?;
    out.write_all(&GELD_VERSION.to_le_bytes())?;
    out.write_all(&u16::from(dtype.code()).to_le_bytes())?;
    out.write_all(&rows.to_le_bytes())?;
    out.write_all(&cols.to_le_bytes())?;
    for v in to_row_major(h) {
        match dtype {
            Dtype::F32 => out.write_all(&(v as f32).to_le_bytes())?,
            Dtype::F64 => out.write_all(&v.to_le_bytes())?,
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<(Matrix, Dtype)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..4] != GELD_MAGIC {
        return Err(GeloError::InvalidInput("not a GELD dataset".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let version = u16_at(4);
    if version != GELD_VERSION {
        return Err(GeloError::InvalidInput(format!("unsupported GELD version {version}")));
    }
    let dtype = u8::try_from(u16_at(6))
        .ok()
        .and_then(Dtype::from_code)
        .ok_or_else(|| GeloError::InvalidInput("unknown dtype".into()))?;
    let (n, d) = (u32_at(8), u32_at(12));
    let payload = &bytes[16..];
    if payload.len() != n * d * dtype.size() {
        return Err(GeloError::InvalidInput(format!(
            "payload of {} bytes for {n}x{d} {dtype:?}",
            payload.len()
        )));
    }
    let values: Vec<f64> = match dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    Ok((matrix_from_rows(n, d, &values)?, dtype))
}

pub fn write_token_stream(path: &Path, tokens: &[u32]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in tokens {
        writeln!(out, "{t}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_token_stream(path: &Path) -> Result<Vec<u32>> {
    let reader = BufReader::new(File::open(path)?);
    let mut tokens = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        tokens.push(trimmed.parse().map_err(|_| {
            GeloError::InvalidInput(format!("line {}: {trimmed:?} is not a token id", lineno + 1))
        })?);
    }
    Ok(tokens)
}
