//! Corpus generation and verification: sampling, the four degradations per
//! patch, file layout and manifest bookkeeping.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::DegradationConfig;
use crate::deformation::{degrade_deform, grid_image, warp};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::manifest::{
    to_canonical_json, CorpusManifest, OutputFile, PatchEntry, SourceRecord, Task, MANIFEST_VERSION,
};
use crate::io::npy::{encode_array, parse_header};
use crate::io::source::load_source;
use crate::lowres::degrade_lowres;
use crate::masking::dual_mask;
use crate::noising::degrade_noise;
use crate::resample;
use crate::rng::{rng_substream, RngStream};
use crate::sampler::{build_corpus, sample_window, PatchRecord, SamplePlan, SamplingConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub degradation: DegradationConfig,
    pub sampling: SamplingConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        c.degradation.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TaskOptions {
    /// Also emit a warped lattice image for deformation tasks.
    pub grid_preview: bool,
}

/// Arrays and parameters produced by one degradation.
#[derive(Clone, Debug)]
pub struct TaskOutput {
    pub task: Task,
    pub params: serde_json::Value,
    pub arrays: Vec<(String, Grid)>,
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Manifest(e.to_string()))
}

/// Applies `task` to a clean patch using the task stream `rng`.
pub fn apply_task(
    task: Task,
    clean: &Grid,
    cfg: &DegradationConfig,
    rng: &RngStream,
    opts: TaskOptions,
) -> Result<TaskOutput> {
    let (params, arrays) = match task {
        Task::Mask => {
            let (a, b, pair) = dual_mask(clean, cfg, rng)?;
            let params = serde_json::json!({
                "tau_keep": pair.tau_keep,
                "cell": pair.cell,
                "attempts": pair.attempts,
                "both_hidden_fraction": pair.both_hidden_fraction(),
            });
            (
                params,
                vec![
                    ("input_a".to_string(), a),
                    ("input_b".to_string(), b),
                    ("mask_a".to_string(), pair.m_a),
                    ("mask_b".to_string(), pair.m_b),
                ],
            )
        }
        Task::Deform => {
            let (warped, field, params) = degrade_deform(clean, cfg, rng)?;
            let mut arrays = vec![("input".to_string(), warped)];
            if opts.grid_preview {
                let lattice = grid_image(clean.shape(), cfg.grid_spacing, cfg.grid_line_width)?;
                arrays.push(("grid_preview".to_string(), warp(&lattice, &field)?));
            }
            for (axis, c) in field.components().iter().enumerate() {
                arrays.push((format!("field_{axis}"), c.clone()));
            }
            (to_value(&params)?, arrays)
        }
        Task::Lowres => {
            let (out, params) = degrade_lowres(clean, cfg, rng)?;
            (to_value(&params)?, vec![("input".to_string(), out)])
        }
        Task::Noise => {
            let (out, params) = degrade_noise(clean, cfg, rng)?;
            (to_value(&params)?, vec![("input".to_string(), out)])
        }
    };
    Ok(TaskOutput {
        task,
        params,
        arrays,
    })
}

pub fn patch_file(id: u64, suffix: &str) -> String {
    format!("patch_{id:05}_{suffix}.npy")
}

fn output(role: &str, file: String, grid: &Grid) -> OutputFile {
    OutputFile {
        role: role.to_string(),
        file,
        shape: grid.shape().to_vec(),
    }
}

/// Inputs common to `sample` and `pipeline`.
#[derive(Clone, Debug)]
pub struct RunRequest {
    pub source: PathBuf,
    pub config: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub intensity_range: Option<[f64; 2]>,
    /// Degradations to apply per patch; empty for plain sampling.
    pub tasks: Vec<Task>,
}

fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

/// Samples the source, applies `req.tasks` to every patch and writes arrays
/// plus `manifest.json` into `req.out_dir`. Output bytes depend only on the
/// source bytes, the config and the seed.
pub fn run(req: &RunRequest) -> Result<CorpusManifest> {
    req.config.degradation.validate()?;
    fs::create_dir_all(&req.out_dir)?;
    let uri = req.source.to_string_lossy().into_owned();
    let (source, source_record) = load_source(&req.source, &uri, req.intensity_range)?;
    let plan = SamplePlan {
        sampling: req.config.sampling.clone(),
        master_seed: req.seed,
    };
    let corpus = build_corpus(&source, &uri, &plan)?;
    log::info!(
        "{} patches from {uri}, {} scales skipped",
        corpus.records.len(),
        corpus.skips.len()
    );

    let cfg = &req.config.degradation;
    let entries: Vec<Vec<PatchEntry>> = corpus
        .patches
        .par_iter()
        .zip(&corpus.records)
        .map(|(patch, record)| {
            let target = patch_file(record.patch_id, "target");
            write_bytes(&req.out_dir, &target, &encode_array(patch))?;
            let target_out = output("target", target, patch);
            if req.tasks.is_empty() {
                return Ok(vec![PatchEntry {
                    patch: record.clone(),
                    task: None,
                    task_seed: None,
                    params: None,
                    outputs: vec![target_out],
                }]);
            }
            req.tasks
                .iter()
                .map(|&task| {
                    let rng = rng_substream(req.seed, task.label(), record.patch_id)?;
                    let out = apply_task(task, patch, cfg, &rng, TaskOptions::default())?;
                    let mut outputs = vec![target_out.clone()];
                    for (role, grid) in &out.arrays {
                        let name = patch_file(record.patch_id, &format!("{}_{role}", task.label()));
                        write_bytes(&req.out_dir, &name, &encode_array(grid))?;
                        outputs.push(output(role, name, grid));
                    }
                    Ok(PatchEntry {
                        patch: record.clone(),
                        task: Some(task),
                        task_seed: Some(rng.lineage().clone()),
                        params: Some(out.params),
                        outputs,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let manifest = CorpusManifest {
        version: MANIFEST_VERSION.to_string(),
        master_seed: req.seed,
        config: cfg.clone(),
        sampling: req.config.sampling.clone(),
        sources: vec![source_record],
        patches: entries.into_iter().flatten().collect(),
        skips: corpus.skips,
    };
    write_bytes(&req.out_dir, MANIFEST_FILE, manifest.to_json()?.as_bytes())?;
    Ok(manifest)
}

/// Outcome of re-deriving one manifest entry.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyResult {
    pub patch_id: u64,
    pub task: Option<Task>,
    pub passed: bool,
    pub detail: String,
}

/// Resolves a source URI: as given when it exists, else relative to the manifest.
fn resolve(uri: &str, manifest_dir: &Path) -> PathBuf {
    let p = PathBuf::from(uri);
    if p.is_absolute() || p.exists() {
        p
    } else {
        manifest_dir.join(p)
    }
}

struct LoadedSource {
    record: SourceRecord,
    grid: Result<Grid>,
}

fn check_entry(
    entry: &PatchEntry,
    manifest: &CorpusManifest,
    dir: &Path,
    levels: &HashMap<(String, u64), Grid>,
) -> Result<()> {
    let rec: &PatchRecord = &entry.patch;
    let level = levels
        .get(&(rec.source_uri.clone(), rec.scale.to_bits()))
        .ok_or_else(|| Error::Manifest(format!("source {} not loaded", rec.source_uri)))?;

    let mut rng = RngStream::from_lineage(rec.seed.clone())?;
    if rec.seed.master_seed != manifest.master_seed {
        return Err(Error::Manifest(
            "patch seed does not derive from master seed".into(),
        ));
    }
    let (patch, origin) = sample_window(level, &rec.window, &mut rng)?;
    if origin != rec.origin {
        return Err(Error::Manifest(format!(
            "origin {:?} redraws as {origin:?}",
            rec.origin
        )));
    }

    let mut expected: Vec<(String, Grid)> = vec![("target".into(), patch.clone())];
    if let Some(task) = entry.task {
        let lineage = entry
            .task_seed
            .clone()
            .ok_or_else(|| Error::Manifest("task entry lacks task_seed".into()))?;
        let rng = RngStream::from_lineage(lineage)?;
        let out = apply_task(task, &patch, &manifest.config, &rng, TaskOptions::default())?;
        if entry.params.as_ref() != Some(&out.params) {
            return Err(Error::Manifest("recorded parameters differ".into()));
        }
        expected.extend(out.arrays);
    }
    if expected.len() != entry.outputs.len() {
        return Err(Error::Manifest(format!(
            "{} outputs recorded, {} regenerated",
            entry.outputs.len(),
            expected.len()
        )));
    }
    for (file, (role, grid)) in entry.outputs.iter().zip(&expected) {
        if &file.role != role {
            return Err(Error::Manifest(format!("role {} vs {role}", file.role)));
        }
        let bytes = fs::read(dir.join(&file.file))?;
        let (header, _) = parse_header(&bytes)?;
        if header.shape != file.shape {
            return Err(Error::Manifest(format!(
                "{}: header shape {:?} vs recorded {:?}",
                file.file, header.shape, file.shape
            )));
        }
        if bytes != encode_array(grid) {
            return Err(Error::Manifest(format!("{}: bytes differ", file.file)));
        }
    }
    Ok(())
}

/// Regenerates every manifest entry from the source bytes and compares it
/// byte-for-byte with the files on disk.
pub fn verify(manifest_path: &Path) -> Result<Vec<VerifyResult>> {
    let manifest = crate::io::read_manifest(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));

    let sources: Vec<LoadedSource> = manifest
        .sources
        .iter()
        .map(|rec| {
            let grid = load_source(&resolve(&rec.uri, dir), &rec.uri, Some(rec.intensity_range))
                .and_then(|(grid, loaded)| {
                    if loaded.sha256 != rec.sha256 || loaded.shape != rec.shape {
                        Err(Error::Manifest(format!("source {} changed", rec.uri)))
                    } else {
                        Ok(grid)
                    }
                });
            LoadedSource {
                record: rec.clone(),
                grid,
            }
        })
        .collect();

    let mut levels: HashMap<(String, u64), Grid> = HashMap::new();
    for entry in &manifest.patches {
        let key = (entry.patch.source_uri.clone(), entry.patch.scale.to_bits());
        if levels.contains_key(&key) {
            continue;
        }
        if let Some(Ok(g)) = sources
            .iter()
            .find(|s| s.record.uri == entry.patch.source_uri)
            .map(|s| s.grid.as_ref())
        {
            if entry.patch.scale > 0.0 && entry.patch.scale <= 1.0 {
                levels.insert(key, resample::downsample(g, entry.patch.scale));
            }
        }
    }

    let source_errors: HashMap<&str, String> = sources
        .iter()
        .filter_map(|s| {
            s.grid
                .as_ref()
                .err()
                .map(|e| (s.record.uri.as_str(), e.to_string()))
        })
        .collect();

    Ok(manifest
        .patches
        .par_iter()
        .map(|entry| {
            let outcome = match source_errors.get(entry.patch.source_uri.as_str()) {
                Some(e) => Err(Error::Manifest(e.clone())),
                None => check_entry(entry, &manifest, dir, &levels),
            };
            VerifyResult {
                patch_id: entry.patch.patch_id,
                task: entry.task,
                passed: outcome.is_ok(),
                detail: outcome.err().map(|e| e.to_string()).unwrap_or_default(),
            }
        })
        .collect())
}

/// Single-image degradation as done by the `degrade` subcommand. Writes
/// `clean.npy`, one file per output role, and `params.json`.
pub fn degrade_file(
    input: &Path,
    task: Task,
    config: &RunConfig,
    seed: u64,
    out_dir: &Path,
    intensity_range: Option<[f64; 2]>,
) -> Result<TaskOutput> {
    config.degradation.validate()?;
    fs::create_dir_all(out_dir)?;
    let uri = input.to_string_lossy().into_owned();
    let (clean, source) = load_source(input, &uri, intensity_range)?;
    let rng = rng_substream(seed, task.label(), 0)?;
    let out = apply_task(
        task,
        &clean,
        &config.degradation,
        &rng,
        TaskOptions { grid_preview: true },
    )?;
    write_bytes(out_dir, "clean.npy", &encode_array(&clean))?;
    for (role, grid) in &out.arrays {
        write_bytes(out_dir, &format!("{role}.npy"), &encode_array(grid))?;
    }
    let record = serde_json::json!({
        "task": task,
        "seed": rng.lineage(),
        "source": source,
        "params": out.params,
        "outputs": out.arrays.iter().map(|(r, _)| format!("{r}.npy")).collect::<Vec<_>>(),
    });
    write_bytes(
        out_dir,
        "params.json",
        to_canonical_json(&record)?.as_bytes(),
    )?;
    Ok(out)
}
