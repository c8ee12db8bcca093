use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::instantiation::{instantiation_distance_posed, object_digest, IdConfig, ObjectAsset, PosedClouds};
use crate::scalar::Scalar;

const CACHE_MAGIC: &[u8; 16] = b"ARTIKIT-DMAT-1\n\0";

/// `rows × cols` instantiation distances, generated objects by reference objects.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T = f64> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
    /// Hash of the object lists and configuration that produced the entries.
    pub provenance: String,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("rows of equal length", "ragged rows"));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat(), provenance: String::new() })
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self { rows: self.cols, cols: self.rows, data, provenance: self.provenance.clone() }
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.data.len());
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
        out
    }

    fn from_bytes(bytes: &[u8], provenance: String) -> Option<Self> {
        let body = bytes.strip_prefix(CACHE_MAGIC)?;
        let word = |k: usize| body.get(8 * k..8 * k + 8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")));
        let rows = word(0)? as usize;
        let cols = word(1)? as usize;
        if body.len() != 16 + 8 * rows.checked_mul(cols)? {
            return None;
        }
        let data = (0..rows * cols).map(|k| word(2 + k).map(|w| T::lit(f64::from_bits(w)))).collect::<Option<Vec<T>>>()?;
        Some(Self { rows, cols, data, provenance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
}

/// Cache key: SHA-256 over the object digests of both lists and the config hash.
pub fn matrix_key<T: Scalar>(gen: &[ObjectAsset<T>], reference: &[ObjectAsset<T>], cfg: &IdConfig<T>) -> String {
    let mut h = Sha256::new();
    h.update(b"dmat-1");
    for list in [gen, reference] {
        h.update((list.len() as u64).to_le_bytes());
        for o in list {
            h.update(object_digest(o));
        }
    }
    h.update(cfg.hash().as_bytes());
    hex::encode(h.finalize())
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.dmat"))
}

/// Entry `(i, j)` is the instantiation distance between `gen[i]` and
/// `reference[j]`. With a cache directory, a stored matrix under the same key
/// is returned as is, and fresh results are stored by write-then-rename.
pub fn pairwise_distance_matrix<T: Scalar>(
    gen: &[ObjectAsset<T>],
    reference: &[ObjectAsset<T>],
    cfg: &IdConfig<T>,
    cache_dir: Option<&Path>,
) -> Result<(DistanceMatrix<T>, CacheStatus)> {
    if gen.is_empty() || reference.is_empty() {
        return Err(Error::Parameter("both object sets must be nonempty".into()));
    }
    cfg.check()?;
    let key = matrix_key(gen, reference, cfg);
    if let Some(dir) = cache_dir {
        if let Ok(bytes) = std::fs::read(cache_path(dir, &key)) {
            match DistanceMatrix::from_bytes(&bytes, key.clone()) {
                Some(m) if m.rows == gen.len() && m.cols == reference.len() => {
                    log::info!("cache hit {key}");
                    return Ok((m, CacheStatus::Hit));
                }
                _ => log::warn!("ignoring unreadable cache entry {key}"),
            }
        }
    }
    let g: Vec<PosedClouds<T>> = gen.iter().map(|o| PosedClouds::build(o, cfg)).collect::<Result<_>>()?;
    let same = std::ptr::eq(gen, reference);
    let r: Vec<PosedClouds<T>> = if same {
        Vec::new()
    } else {
        reference.iter().map(|o| PosedClouds::build(o, cfg)).collect::<Result<_>>()?
    };
    let r = if same { &g } else { &r };
    let mut data = Vec::with_capacity(gen.len() * reference.len());
    for a in &g {
        for b in r {
            data.push(instantiation_distance_posed(a, b, &cfg.orientations));
        }
    }
    let m = DistanceMatrix { rows: gen.len(), cols: reference.len(), data, provenance: key.clone() };
    let status = match cache_dir {
        None => CacheStatus::Disabled,
        Some(dir) => {
            if let Err(e) = store(dir, &key, &m.to_bytes()) {
                log::warn!("could not write distance cache {}: {e}", cache_path(dir, &key).display());
            }
            CacheStatus::Miss
        }
    };
    Ok((m, status))
}

fn store(dir: &Path, key: &str, bytes: &[u8]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    std::fs::rename(&tmp, cache_path(dir, key))
}
