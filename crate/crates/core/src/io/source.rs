//! Source ingestion: `.npy` arrays or raw little-endian blobs described by a
//! JSON sidecar, normalized to `[0, 1]`.
//!
//! A raw blob `volume.raw` is described by `volume.raw.json`:
//!
//! ```json
//! {"shape": [512, 512, 300], "dtype": "uint16", "intensity_range": [0, 4095]}
//! ```
//!
//! `intensity_range` is optional; without it the per-source min and max are used.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::manifest::SourceRecord;
use super::npy::{decode_array, Dtype};
use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub shape: Vec<usize>,
    pub dtype: String,
    #[serde(default)]
    pub intensity_range: Option<[f64; 2]>,
}

pub fn sidecar_path(blob: &Path) -> PathBuf {
    let mut s = blob.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reads a source without normalizing it. Returns the grid, the sidecar's
/// fixed range if any, and the SHA-256 of the data file.
pub fn read_source_raw(path: &Path) -> Result<(Grid, Option<[f64; 2]>, String)> {
    let bytes = fs::read(path)?;
    let digest = sha256_hex(&bytes);
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let meta: Sidecar = serde_json::from_str(&fs::read_to_string(&sidecar)?)
            .map_err(|e| Error::Format(format!("{}: {e}", sidecar.display())))?;
        let dtype = Dtype::parse_name(&meta.dtype)?;
        let n: usize = meta.shape.iter().product();
        if bytes.len() != n * dtype.size() {
            return Err(Error::Format(format!(
                "{} holds {} bytes, sidecar implies {}",
                path.display(),
                bytes.len(),
                n * dtype.size()
            )));
        }
        let grid = Grid::new(meta.shape, dtype.decode(&bytes))?;
        return Ok((grid, meta.intensity_range, digest));
    }
    Ok((decode_array(&bytes)?, None, digest))
}

/// Loads and normalizes a source. `fixed_range` overrides both the sidecar and
/// the min-max range.
pub fn load_source(
    path: &Path,
    uri: &str,
    fixed_range: Option<[f64; 2]>,
) -> Result<(Grid, SourceRecord)> {
    let (raw, sidecar_range, sha256) = read_source_raw(path)?;
    let range = match fixed_range.or(sidecar_range) {
        Some(r) => r,
        None => {
            let (lo, hi) = raw.min_max();
            [f64::from(lo), f64::from(hi)]
        }
    };
    let record = SourceRecord {
        uri: uri.to_string(),
        shape: raw.shape().to_vec(),
        intensity_range: range,
        sha256,
    };
    Ok((raw.normalized(range[0], range[1]), record))
}
