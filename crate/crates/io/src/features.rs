//! Condition-token sidecar files.
//!
//! Layout: `b"AKFT"`, `u32` token count, `u32` dimension, then
//! `count * dim` little-endian `f32` values in row-major order.

use std::path::Path;

use artikit_core::{Error, Result, Scalar};

use crate::fs::{read_bytes, write_atomic};

pub const FEATURE_MAGIC: &[u8; 4] = b"AKFT";

/// `rows × cols` condition tokens, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T = f64> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

fn format_error(msg: impl std::fmt::Display) -> Error {
    Error::parse(format!("feature file format: {msg}"))
}

pub fn decode_features<T: Scalar>(bytes: &[u8]) -> Result<FeatureMatrix<T>> {
    if bytes.len() < 12 || &bytes[..4] != FEATURE_MAGIC {
        return Err(format_error("missing AKFT header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (rows, cols) = (word(4), word(8));
    let expected = rows.checked_mul(cols).and_then(|n| n.checked_mul(4)).ok_or_else(|| format_error("size overflow"))?;
    let payload = &bytes[12..];
    if payload.len() != expected {
        return Err(format_error(format!("{rows}x{cols} tokens need {expected} payload bytes, found {}", payload.len())));
    }
    let data = payload.chunks_exact(4).map(|c| T::lit(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)).collect();
    Ok(FeatureMatrix { rows, cols, data })
}

/// Narrows every value to `f32`.
pub fn encode_features<T: Scalar>(m: &FeatureMatrix<T>) -> Result<Vec<u8>> {
    if m.data.len() != m.rows * m.cols {
        return Err(Error::shape(format!("{} values", m.rows * m.cols), m.data.len()));
    }
    let dim = |n: usize| u32::try_from(n).map_err(|_| Error::Range(format!("feature dimension {n} exceeds u32")));
    let mut out = Vec::with_capacity(12 + 4 * m.data.len());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&dim(m.rows)?.to_le_bytes());
    out.extend_from_slice(&dim(m.cols)?.to_le_bytes());
    for v in &m.data {
        out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn load_features<T: Scalar>(path: &Path) -> Result<FeatureMatrix<T>> {
    decode_features(&read_bytes(path)?)
}

pub fn save_features<T: Scalar>(m: &FeatureMatrix<T>, path: &Path) -> Result<()> {
    write_atomic(path, &encode_features(m)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_decode() {
        let bytes = encode_features(&FeatureMatrix::<f64>::zeros(1, 32)).unwrap();
        assert_eq!(bytes.len(), 12 + 128);
        assert_eq!(decode_features::<f64>(&bytes).unwrap(), FeatureMatrix::zeros(1, 32));
    }

    #[test]
    fn truncation_and_magic() {
        let mut bytes = encode_features(&FeatureMatrix { rows: 2, cols: 2, data: vec![1.0, 2.0, 3.0, 4.0] }).unwrap();
        bytes.pop();
        assert!(decode_features::<f64>(&bytes).unwrap_err().to_string().contains("format"));
        bytes[0] = b'X';
        assert!(decode_features::<f64>(&bytes).is_err());
    }
}
