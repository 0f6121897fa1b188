//! On-disk cache of per-feature distance matrices.
//!
//! Layout of a matrix file (all integers little-endian):
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 8            | magic `MSTSDM1\0`                         |
//! | 4            | feature index (`u32`)                     |
//! | 4            | sample count `N` (`u32`)                  |
//! | `8 * N * N`  | distances as `f64`, row-major             |
//! | 8            | FNV-1a 64 checksum of all preceding bytes |
//!
//! A `manifest.json` next to the matrix files records which dataset and
//! DTW configuration the files belong to. Files are only served when the
//! manifest matches the caller's [`CacheKey`].

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dtw::{DistanceMatrix, DtwConfig, COST_TAG};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MSTSDM1\0";
pub const MANIFEST_FILE: &str = "manifest.json";
const HEADER_LEN: usize = 16;

/// 64-bit FNV-1a.
pub fn checksum(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn encode(matrix: &DistanceMatrix) -> Vec<u8> {
    let n = matrix.n();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * n + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(matrix.feature() as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in matrix.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let sum = checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<DistanceMatrix> {
    let corrupt = |reason: String| Error::CorruptCache {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN + 8 {
        return Err(corrupt(format!("truncated file of {} bytes", bytes.len())));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if checksum(body) != stored {
        return Err(corrupt("checksum mismatch".into()));
    }
    if &body[..8] != MAGIC {
        return Err(corrupt("bad magic bytes".into()));
    }
    let feature = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
    let payload = &body[HEADER_LEN..];
    if payload.len() != 8 * n * n {
        return Err(corrupt(format!(
            "payload of {} bytes does not hold a {n}x{n} matrix",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DistanceMatrix::from_values(feature, n, values).map_err(|e| corrupt(e.to_string()))
}

/// Identifies the dataset and DTW configuration a cache belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub fingerprint: String,
    pub n_features: usize,
    pub n_samples: usize,
    pub cost: String,
    pub band: Option<usize>,
}

impl CacheKey {
    pub fn new(dataset: &Dataset, config: DtwConfig) -> Self {
        Self {
            fingerprint: dataset.fingerprint(),
            n_features: dataset.n_features(),
            n_samples: dataset.len(),
            cost: COST_TAG.to_string(),
            band: config.band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub key: CacheKey,
    /// Matrix file names, relative to the cache directory.
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct DistanceCache {
    dir: PathBuf,
    key: CacheKey,
}

pub fn file_name(feature: usize) -> String {
    format!("feature_{feature:04}.dm")
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name))
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

impl DistanceCache {
    pub fn new(dir: impl Into<PathBuf>, key: CacheKey) -> Self {
        Self {
            dir: dir.into(),
            key,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(&self) -> &CacheKey {
        &self.key
    }

    pub fn read_manifest(&self) -> Result<Option<Manifest>> {
        let path = self.dir.join(MANIFEST_FILE);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes `matrix` and registers it in the manifest. A manifest for a
    /// different key is replaced, which invalidates all of its files.
    pub fn store(&self, matrix: &DistanceMatrix) -> Result<()> {
        if matrix.n() != self.key.n_samples || matrix.feature() >= self.key.n_features {
            return Err(Error::InvalidArgument(format!(
                "matrix for feature {} with N={} does not fit cache key ({} features, N={})",
                matrix.feature(),
                matrix.n(),
                self.key.n_features,
                self.key.n_samples
            )));
        }
        std::fs::create_dir_all(&self.dir)?;
        let name = file_name(matrix.feature());
        write_atomic(&self.dir, &name, &encode(matrix))?;

        let mut manifest = match self.read_manifest() {
            Ok(Some(m)) if m.key == self.key => m,
            _ => Manifest {
                key: self.key.clone(),
                files: Vec::new(),
            },
        };
        if !manifest.files.contains(&name) {
            manifest.files.push(name);
            manifest.files.sort();
        }
        write_atomic(
            &self.dir,
            MANIFEST_FILE,
            serde_json::to_string_pretty(&manifest)?.as_bytes(),
        )
    }

    /// Reads the matrix for `feature`. Fails with [`Error::StaleCache`] when
    /// the manifest is absent, belongs to another key, or does not list the
    /// file, and with [`Error::CorruptCache`] when the file fails
    /// validation.
    pub fn load(&self, feature: usize) -> Result<DistanceMatrix> {
        let stale = |reason: String| Error::StaleCache {
            dir: self.dir.clone(),
            reason,
        };
        let manifest = self
            .read_manifest()?
            .ok_or_else(|| stale("no manifest".into()))?;
        if manifest.key != self.key {
            return Err(stale(format!(
                "manifest is for fingerprint {} (cost {}, band {:?}), expected {} (cost {}, band {:?})",
                manifest.key.fingerprint,
                manifest.key.cost,
                manifest.key.band,
                self.key.fingerprint,
                self.key.cost,
                self.key.band
            )));
        }
        let name = file_name(feature);
        if !manifest.files.contains(&name) {
            return Err(stale(format!("feature {feature} not cached")));
        }
        let path = self.dir.join(&name);
        let matrix = decode(&std::fs::read(&path)?, &path)?;
        if matrix.feature() != feature || matrix.n() != self.key.n_samples {
            return Err(Error::CorruptCache {
                path,
                reason: format!(
                    "holds feature {} with N={}, expected feature {feature} with N={}",
                    matrix.feature(),
                    matrix.n(),
                    self.key.n_samples
                ),
            });
        }
        Ok(matrix)
    }
}
