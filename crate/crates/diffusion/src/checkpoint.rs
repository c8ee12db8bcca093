//! Binary checkpoints: the model configuration plus every named parameter.
//!
//! Layout, all integers little-endian: the header `ARTIKIT-CKPT-1\n`, a `u32`
//! length and that many bytes of configuration JSON, a `u32` parameter count,
//! then per parameter a `u32` name length, the UTF-8 name, `u32` rows, `u32`
//! cols and `rows · cols` `f64` values row-major.

use std::io::Write;
use std::path::Path;

use artikit_core::{Error, Result, Scalar};

use crate::config::DenoiserConfig;
use crate::model::Denoiser;
use crate::params::ParamStore;
use crate::tensor::Matrix;

pub const CHECKPOINT_HEADER: &[u8] = b"ARTIKIT-CKPT-1\n";

pub fn checkpoint_bytes<T: Scalar>(model: &Denoiser<T>) -> Vec<u8> {
    let mut out = CHECKPOINT_HEADER.to_vec();
    let cfg = serde_json::to_vec(&model.config).expect("config serializes");
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg);
    out.extend_from_slice(&(model.params.len() as u32).to_le_bytes());
    for (_, name, m) in model.params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(m.rows as u32).to_le_bytes());
        out.extend_from_slice(&(m.cols as u32).to_le_bytes());
        for v in &m.data {
            out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Parse { message: "truncated checkpoint".into(), offset: Some(self.pos), payload: None })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

pub fn checkpoint_from_bytes<T: Scalar>(bytes: &[u8]) -> Result<Denoiser<T>> {
    if !bytes.starts_with(CHECKPOINT_HEADER) {
        return Err(Error::parse("not an ARTIKIT-CKPT-1 checkpoint"));
    }
    let mut r = Reader { bytes, pos: CHECKPOINT_HEADER.len() };
    let len = r.u32()?;
    let config: DenoiserConfig =
        serde_json::from_slice(r.take(len)?).map_err(|e| Error::parse(format!("checkpoint config: {e}")))?;
    let count = r.u32()?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let len = r.u32()?;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| Error::parse("parameter name is not UTF-8"))?.to_string();
        let (rows, cols) = (r.u32()?, r.u32()?);
        let raw = r.take(rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or_else(|| Error::parse("parameter too large"))?)?;
        let data = raw.chunks_exact(8).map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes")))).collect();
        params.insert(name, Matrix { rows, cols, data })?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Parse { message: "trailing bytes after checkpoint".into(), offset: Some(r.pos), payload: None });
    }
    Denoiser::from_parts(config, params)
}

/// Writes next to `path` and renames into place.
pub fn save_checkpoint<T: Scalar>(model: &Denoiser<T>, path: &Path) -> Result<()> {
    let tmp = path.with_extension("ckpt.tmp");
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(&checkpoint_bytes(model))?;
    f.sync_all()?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Denoiser<T>> {
    checkpoint_from_bytes(&std::fs::read(path)?)
}
