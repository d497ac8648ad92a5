//! Random multi-scale sampling: a scale pyramid per source and uniformly
//! placed fixed-size windows on each level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::resample;
use crate::rng::{rng_substream, Lineage, RngStream};

pub const SAMPLE_LABEL: &str = "sample";

/// Scales, per-scale draw counts and window extents. The master seed is
/// supplied separately so config files stay seed-free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    pub window: Vec<usize>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            scales: vec![1.0, 0.5, 0.25],
            counts: vec![1, 1, 1],
            window: vec![64, 64],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    pub sampling: SamplingConfig,
    pub master_seed: u64,
}

impl SamplePlan {
    pub fn new(scales: Vec<f64>, counts: Vec<usize>, window: Vec<usize>, master_seed: u64) -> Self {
        Self {
            sampling: SamplingConfig {
                scales,
                counts,
                window,
            },
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sampling;
        if s.scales.is_empty() || s.scales.len() != s.counts.len() {
            return Err(Error::config(format!(
                "{} scales but {} counts",
                s.scales.len(),
                s.counts.len()
            )));
        }
        if let Some(bad) = s.scales.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::config(format!("scale {bad} outside (0, 1]")));
        }
        if !(2..=3).contains(&s.window.len()) || s.window.contains(&0) {
            return Err(Error::config(format!("invalid window {:?}", s.window)));
        }
        Ok(())
    }
}

/// Provenance of one extracted window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchRecord {
    pub patch_id: u64,
    pub source_uri: String,
    pub scale: f64,
    pub origin: Vec<usize>,
    pub window: Vec<usize>,
    pub seed: Lineage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipRecord {
    pub source: String,
    pub scale: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub patches: Vec<Grid>,
    pub records: Vec<PatchRecord>,
    pub skips: Vec<SkipRecord>,
}

fn check_scale(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::domain(format!("scale {s} outside (0, 1]")));
    }
    Ok(())
}

/// Resizes `image` to each scale. Extents are `floor(extent * s)`, at least 1.
pub fn multiscale_resize(image: &Grid, scales: &[f64]) -> Result<Vec<Grid>> {
    scales.iter().try_for_each(|&s| check_scale(s))?;
    Ok(scales
        .iter()
        .map(|&s| resample::downsample(image, s))
        .collect())
}

/// Copies a uniformly placed window out of `image`. Returns the patch and its origin.
pub fn sample_window(
    image: &Grid,
    window: &[usize],
    rng: &mut RngStream,
) -> Result<(Grid, Vec<usize>)> {
    if window.len() != image.rank()
        || window
            .iter()
            .zip(image.shape())
            .any(|(w, e)| *w == 0 || w > e)
    {
        return Err(Error::WindowTooLarge {
            window: window.to_vec(),
            extents: image.shape().to_vec(),
        });
    }
    let origin: Vec<usize> = window
        .iter()
        .zip(image.shape())
        .map(|(w, e)| rng.below((e - w + 1) as u64) as usize)
        .collect();
    let patch = image.crop(&origin, window)?;
    Ok((patch, origin))
}

/// Draws every planned window from `source`.
///
/// Patch ordinals run over scales in plan order, then draws, counting only
/// emitted patches; ordinal `k` seeds its window from `(seed, "sample", k)`.
pub fn build_corpus(source: &Grid, source_uri: &str, plan: &SamplePlan) -> Result<Corpus> {
    plan.validate()?;
    let s = &plan.sampling;
    if s.window.len() != source.rank() {
        return Err(Error::config(format!(
            "window rank {} does not match source rank {}",
            s.window.len(),
            source.rank()
        )));
    }
    let mut corpus = Corpus {
        patches: vec![],
        records: vec![],
        skips: vec![],
    };
    let mut usable = 0;
    let mut ordinal = 0u64;
    for (&scale, &count) in s.scales.iter().zip(&s.counts) {
        let level = resample::downsample(source, scale);
        if s.window.iter().zip(level.shape()).any(|(w, e)| w > e) {
            log::info!(
                "skipping scale {scale}: level {:?} smaller than window",
                level.shape()
            );
            corpus.skips.push(SkipRecord {
                source: source_uri.to_string(),
                scale,
                reason: format!(
                    "window {:?} larger than scaled extents {:?}",
                    s.window,
                    level.shape()
                ),
            });
            continue;
        }
        usable += 1;
        let first = ordinal;
        let drawn: Vec<(Grid, PatchRecord)> = (0..count as u64)
            .into_par_iter()
            .map(|n| {
                let id = first + n;
                let mut rng = rng_substream(plan.master_seed, SAMPLE_LABEL, id)?;
                let (patch, origin) = sample_window(&level, &s.window, &mut rng)?;
                Ok((
                    patch,
                    PatchRecord {
                        patch_id: id,
                        source_uri: source_uri.to_string(),
                        scale,
                        origin,
                        window: s.window.clone(),
                        seed: rng.lineage().clone(),
                    },
                ))
            })
            .collect::<Result<_>>()?;
        ordinal += count as u64;
        for (p, r) in drawn {
            corpus.patches.push(p);
            corpus.records.push(r);
        }
    }
    if usable == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

/// Re-extracts the patch a record describes.
pub fn regenerate_patch(source: &Grid, record: &PatchRecord) -> Result<Grid> {
    check_scale(record.scale)?;
    resample::downsample(source, record.scale).crop(&record.origin, &record.window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(shape: Vec<usize>) -> Grid {
        let n: usize = shape.iter().product();
        let mut k = 0;
        Grid::from_fn(shape, |_| {
            k += 1;
            k as f32 / n as f32
        })
        .unwrap()
    }

    #[test]
    fn pyramid_extents() {
        let g = ramp(vec![64, 64]);
        let levels = multiscale_resize(&g, &[1.0, 0.5, 0.25]).unwrap();
        let extents: Vec<_> = levels.iter().map(|l| l.shape().to_vec()).collect();
        assert_eq!(extents, vec![vec![64, 64], vec![32, 32], vec![16, 16]]);
        assert_eq!(levels[0], g);
    }

    #[test]
    fn pyramid_rejects_bad_scales() {
        let g = ramp(vec![8, 8]);
        assert!(matches!(
            multiscale_resize(&g, &[0.0]),
            Err(Error::Domain(_))
        ));
        assert!(multiscale_resize(&g, &[1.5]).is_err());
        assert!(multiscale_resize(&g, &[-0.5]).is_err());
    }

    #[test]
    fn constant_stays_constant() {
        let g = Grid::filled(vec![40, 24, 12], 0.3).unwrap();
        for level in multiscale_resize(&g, &[1.0, 0.5, 0.25, 0.7]).unwrap() {
            assert!(level.data().iter().all(|&v| v == 0.3));
        }
    }

    #[test]
    fn full_window_has_zero_origin() {
        let g = ramp(vec![9, 5]);
        let mut rng = rng_substream(1, "w", 0).unwrap();
        let (p, o) = sample_window(&g, &[9, 5], &mut rng).unwrap();
        assert_eq!(o, vec![0, 0]);
        assert_eq!(p, g);
    }

    #[test]
    fn oversized_window_errors() {
        let g = ramp(vec![9, 5]);
        let mut rng = rng_substream(1, "w", 0).unwrap();
        assert!(matches!(
            sample_window(&g, &[10, 5], &mut rng),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn origin_uniform_chi_square() {
        // 33 admissible origins; chi-square critical value for 32 dof at p = 0.01 is 53.49.
        let g = ramp(vec![64, 1]);
        let mut counts = [0u32; 33];
        let draws = 10_000;
        for k in 0..draws {
            let mut rng = rng_substream(99, "sample", k).unwrap();
            let (_, o) = sample_window(&g, &[32, 1], &mut rng).unwrap();
            counts[o[0]] += 1;
        }
        let expected = draws as f64 / 33.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 53.49, "chi2 = {chi2}");
    }

    #[test]
    fn corpus_counts_and_determinism() {
        let g = ramp(vec![256, 256]);
        let plan = SamplePlan::new(vec![1.0, 0.5, 0.25], vec![4, 2, 1], vec![32, 32], 7);
        let a = build_corpus(&g, "src", &plan).unwrap();
        assert_eq!(a.records.len(), 7);
        assert!(a.skips.is_empty());
        let b = build_corpus(&g, "src", &plan).unwrap();
        assert_eq!(a.patches, b.patches);
        assert_eq!(a.records, b.records);
        for (p, r) in a.patches.iter().zip(&a.records) {
            assert_eq!(&regenerate_patch(&g, r).unwrap(), p);
        }
        let ids: Vec<u64> = a.records.iter().map(|r| r.patch_id).collect();
        assert_eq!(ids, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn small_scales_are_skipped() {
        let g = ramp(vec![16, 16]);
        let plan = SamplePlan::new(vec![1.0, 0.25], vec![2, 3], vec![16, 16], 1);
        let c = build_corpus(&g, "tiny", &plan).unwrap();
        assert_eq!(c.records.len(), 2);
        assert_eq!(c.skips.len(), 1);
        assert_eq!(c.skips[0].scale, 0.25);

        let none = SamplePlan::new(vec![0.25], vec![3], vec![32, 32], 1);
        assert!(matches!(
            build_corpus(&g, "tiny", &none),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn patches_within_source_range() {
        let g = Grid::from_fn(vec![50, 37], |c| {
            ((c[0] * 31 + c[1] * 17) % 11) as f32 / 10.0
        })
        .unwrap();
        let (lo, hi) = g.min_max();
        let plan = SamplePlan::new(vec![1.0, 0.5, 0.3], vec![5, 5, 5], vec![8, 8], 3);
        let c = build_corpus(&g, "s", &plan).unwrap();
        for p in &c.patches {
            let (plo, phi) = p.min_max();
            assert!(plo >= lo && phi <= hi);
        }
    }
}
