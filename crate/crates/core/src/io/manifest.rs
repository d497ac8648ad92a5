//! Corpus manifests: canonical JSON records sufficient to regenerate every
//! output byte from the source bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::DegradationConfig;
use crate::error::{Error, Result};
use crate::rng::Lineage;
use crate::sampler::{PatchRecord, SamplingConfig, SkipRecord};

pub const MANIFEST_VERSION: &str = "tjp-manifest/1";

/// Serializes through `serde_json::Value` (whose maps are key-sorted) and
/// pretty-prints with LF newlines and a trailing newline. Floats use the
/// shortest representation that round-trips.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Manifest(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Manifest(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Mask,
    Deform,
    Lowres,
    Noise,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Mask, Task::Deform, Task::Lowres, Task::Noise];

    /// Stream label and file-name component.
    pub fn label(self) -> &'static str {
        match self {
            Task::Mask => "mask",
            Task::Deform => "deform",
            Task::Lowres => "lowres",
            Task::Noise => "noise",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::config(format!("unknown task {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceRecord {
    pub uri: String,
    pub shape: Vec<usize>,
    pub intensity_range: [f64; 2],
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub role: String,
    pub file: String,
    pub shape: Vec<usize>,
}

/// One patch, optionally paired with the degradation applied to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchEntry {
    pub patch: PatchRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_seed: Option<Lineage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    pub outputs: Vec<OutputFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub version: String,
    pub master_seed: u64,
    pub config: DegradationConfig,
    pub sampling: SamplingConfig,
    pub sources: Vec<SourceRecord>,
    pub patches: Vec<PatchEntry>,
    pub skips: Vec<SkipRecord>,
}

impl CorpusManifest {
    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // Missing fields and unknown keys are both schema violations.
        let m: CorpusManifest =
            serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported manifest version {:?}",
                m.version
            )));
        }
        m.config
            .validate()
            .map_err(|e| Error::Manifest(format!("invalid config: {e}")))?;
        Ok(m)
    }
}

pub fn write_manifest(m: &CorpusManifest, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, m.to_json()?)?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest> {
    CorpusManifest::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CorpusManifest {
        let patches = (0..7)
            .map(|k| PatchEntry {
                patch: PatchRecord {
                    patch_id: k,
                    source_uri: "vol.npy".into(),
                    scale: 0.5,
                    origin: vec![1, 2],
                    window: vec![8, 8],
                    seed: Lineage::new(42, "sample", k),
                },
                task: Some(Task::Noise),
                task_seed: Some(Lineage::new(42, "noise", k)),
                params: Some(serde_json::json!({"sigma_noise": 0.1, "amount": 0.02})),
                outputs: vec![OutputFile {
                    role: "input".into(),
                    file: format!("patch_{k:05}_noise_input.npy"),
                    shape: vec![8, 8],
                }],
            })
            .collect();
        CorpusManifest {
            version: MANIFEST_VERSION.into(),
            master_seed: 42,
            config: DegradationConfig::default(),
            sampling: SamplingConfig::default(),
            sources: vec![SourceRecord {
                uri: "vol.npy".into(),
                shape: vec![32, 32],
                intensity_range: [0.0, 1.0],
                sha256: "00".into(),
            }],
            patches,
            skips: vec![],
        }
    }

    #[test]
    fn round_trip_and_canonical() {
        let m = sample();
        let json = m.to_json().unwrap();
        assert_eq!(CorpusManifest::from_json(&json).unwrap(), m);
        assert_eq!(json, sample().to_json().unwrap());
        assert!(json.ends_with("}\n"));
        assert!(!json.contains('\r'));
        // Keys appear sorted at the top level.
        let keys: Vec<usize> = [
            "\"config\"",
            "\"master_seed\"",
            "\"patches\"",
            "\"version\"",
        ]
        .iter()
        .map(|k| json.find(k).unwrap())
        .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn missing_seed_is_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("master_seed");
        let err = CorpusManifest::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Manifest(_)));
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(CorpusManifest::from_json(&v.to_string()).is_err());
        let mut m = sample();
        m.version = "tjp-manifest/2".into();
        assert!(CorpusManifest::from_json(&m.to_json().unwrap()).is_err());
    }

    #[test]
    fn task_labels() {
        for t in Task::ALL {
            assert_eq!(t.label().parse::<Task>().unwrap(), t);
        }
        assert!("blur".parse::<Task>().is_err());
    }
}
