//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use tjp::deformation::{
    deformation_field, grid_image, jacobian_stats, unsmoothed_deformation_field, warp,
    DeformationField,
};
use tjp::io::npy::{decode_array, encode_array};
use tjp::lowres::degrade_lowres;
use tjp::masking::dual_mask;
use tjp::metrics::{dice, hd95, psnr, psnr_slices, ssim};
use tjp::noising::degrade_noise;
use tjp::sampler::multiscale_resize;
use tjp::{rng_substream, DegradationConfig, Grid, LabelGrid, RngStream};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn stream(seed: u64, label: &str, index: u64) -> RngStream {
    rng_substream(seed, label, index).unwrap()
}

fn random_grid(shape: &[usize], rng: &mut RngStream) -> Grid {
    Grid::from_fn(shape.to_vec(), |_| rng.uniform() as f32).unwrap()
}

// ---------------------------------------------------------------------------
// Determinism

fn dir_snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

struct PipelineRun {
    out: PathBuf,
    elapsed: Duration,
}

fn run_pipeline(
    bin: &str,
    source: &Path,
    config: &Path,
    out: &Path,
) -> Result<PipelineRun, String> {
    let start = Instant::now();
    let o = Command::new(bin)
        .args(["--jobs", "4", "pipeline", "--seed", "42", "--source"])
        .arg(source)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    Ok(PipelineRun {
        out: out.to_path_buf(),
        elapsed: start.elapsed(),
    })
}

fn determinism(work: &Path) -> (Outcome, Option<PathBuf>) {
    let bin = env!("CARGO_BIN_EXE_tjp");
    let source = work.join("volume128.npy");
    let o = Command::new(bin)
        .args(["synth", "--shape", "128,128,128", "--seed", "2024", "--out"])
        .arg(&source)
        .output()
        .unwrap();
    if !o.status.success() {
        return (outcome(false, "synth failed"), None);
    }
    let config = work.join("pipeline.json");
    fs::write(
        &config,
        r#"{"sampling": {"scales": [1.0, 0.5, 0.25], "counts": [50, 30, 20], "window": [32, 32, 32]}}"#,
    )
    .unwrap();
    let runs: Result<Vec<_>, _> = ["run_a", "run_b"]
        .iter()
        .map(|d| run_pipeline(bin, &source, &config, &work.join(d)))
        .collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return (outcome(false, format!("pipeline failed: {e}")), None),
    };
    let (a, b) = (dir_snapshot(&runs[0].out), dir_snapshot(&runs[1].out));
    let manifest: serde_json::Value =
        serde_json::from_slice(&a["manifest.json"]).unwrap_or(serde_json::Value::Null);
    let patches = manifest["patches"]
        .as_array()
        .map(|p| {
            let mut ids: Vec<_> = p.iter().map(|e| e["patch"]["patch_id"].as_u64()).collect();
            ids.dedup();
            ids.len()
        })
        .unwrap_or(0);
    let identical = a == b;
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let pass = identical && patches == 100 && slowest < Duration::from_secs(60);
    (
        outcome(
            pass,
            format!(
                "{patches} patches, {} files, identical={identical}, slowest run {:.1}s with --jobs 4 on {cores} available core(s)",
                a.len(),
                slowest.as_secs_f64()
            ),
        ),
        Some(runs[0].out.clone()),
    )
}

// ---------------------------------------------------------------------------
// Sampling, masking, deformation

fn pyramid() -> Outcome {
    let img = random_grid(&[64, 64], &mut stream(1, "pyramid", 0));
    let levels = multiscale_resize(&img, &[1.0, 0.5, 0.25]).unwrap();
    let extents: Vec<Vec<usize>> = levels.iter().map(|g| g.shape().to_vec()).collect();
    let pass = extents == vec![vec![64, 64], vec![32, 32], vec![16, 16]] && levels[0] == img;
    outcome(pass, format!("extents {extents:?}"))
}

fn mask_statistics() -> Outcome {
    let cfg = DegradationConfig {
        mask_ratio: 0.5,
        mask_cell: 1,
        ..Default::default()
    };
    let x = Grid::filled(vec![64, 64], 1.0).unwrap();
    let (mut worst_vis, mut worst_both, mut invariant) = (0.0f64, 0.0f64, 0);
    for seed in 0..100 {
        let (xa, xb, pair) = dual_mask(&x, &cfg, &stream(seed, "mask", 0)).unwrap();
        let visible =
            |g: &Grid| g.data().iter().filter(|&&v| v == 1.0).count() as f64 / g.len() as f64;
        for f in [visible(&pair.m_a), visible(&pair.m_b)] {
            worst_vis = worst_vis.max((f - 0.5).abs());
        }
        let both = xa
            .data()
            .iter()
            .zip(xb.data())
            .filter(|(a, b)| **a == 0.0 && **b == 0.0)
            .count();
        worst_both = worst_both.max((both as f64 / x.len() as f64 - 0.25).abs());
        if both > 0 {
            invariant += 1;
        }
    }
    outcome(
        worst_vis <= 0.03 && worst_both <= 0.03 && invariant == 100,
        format!(
            "max |visible - 0.5| = {worst_vis:.4}, max |both hidden - 0.25| = {worst_both:.4}, invariant {invariant}/100"
        ),
    )
}

fn displacement_bound() -> Outcome {
    let cfg = DegradationConfig::default();
    let mut violations = 0;
    let mut largest = 0.0f64;
    for seed in 0..100u64 {
        let shape: &[usize] = if seed % 2 == 0 {
            &[64, 64]
        } else {
            &[20, 24, 28]
        };
        let f = deformation_field(shape, &cfg, &stream(seed, "deform", 0)).unwrap();
        for c in f.components() {
            for &v in c.data() {
                let a = f64::from(v).abs();
                largest = largest.max(a);
                if a > 0.6 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("100 fields (2D 64x64 and 3D 20x24x28), max |phi| = {largest:.6}, violations {violations}"),
    )
}

/// Field of `phi(v) = k * v` expressed in normalized displacement units.
fn scaling_field(shape: &[usize], k: f64) -> DeformationField {
    let comps = (0..shape.len())
        .map(|axis| {
            let half = shape[axis] as f64 / 2.0;
            Grid::from_fn(shape.to_vec(), |c| {
                ((k - 1.0) * c[axis] as f64 / half) as f32
            })
            .unwrap()
        })
        .collect();
    DeformationField::from_components(comps).unwrap()
}

fn smoothness() -> Outcome {
    let cfg = DegradationConfig::default();
    let mut wins = 0;
    for seed in 0..20 {
        let rng = stream(seed, "deform", 0);
        let smooth = jacobian_stats(&deformation_field(&[64, 64], &cfg, &rng).unwrap()).unwrap();
        let rough =
            jacobian_stats(&unsmoothed_deformation_field(&[64, 64], &cfg, &rng).unwrap()).unwrap();
        if smooth.sdlogj < rough.sdlogj {
            wins += 1;
        }
    }
    let zero2 = jacobian_stats(&DeformationField::zeros(&[16, 16]).unwrap()).unwrap();
    let zero3 = jacobian_stats(&DeformationField::zeros(&[8, 8, 8]).unwrap()).unwrap();
    let scale2 = jacobian_stats(&scaling_field(&[32, 32], 1.125)).unwrap();
    let scale3 = jacobian_stats(&scaling_field(&[16, 16, 16], 1.125)).unwrap();
    let exact = [zero2, zero3, scale2, scale3]
        .iter()
        .all(|s| s.sdlogj == 0.0 && s.nonpos_fraction == 0.0);
    let near = jacobian_stats(&scaling_field(&[32, 32], 1.1)).unwrap();
    outcome(
        wins >= 19 && exact,
        format!(
            "smoothed < unsmoothed in {wins}/20 seeds; zero and 1.125x scaling fields exact (0, 0): {exact}; \
             1.1x scaling gives sdlogj {:.1e} from f32 rounding",
            near.sdlogj
        ),
    )
}

fn warp_identity() -> Outcome {
    let mut worst = 0.0f32;
    for i in 0..20u64 {
        let shape: &[usize] = if i % 2 == 0 { &[32, 32] } else { &[16, 20, 24] };
        let x = random_grid(shape, &mut stream(i, "warp_patch", 0));
        let y = warp(&x, &DeformationField::zeros(shape).unwrap()).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max |warp(x, 0) - x| = {worst:e} over 20 patches"),
    )
}

// ---------------------------------------------------------------------------
// Low resolution and noise

/// Sum of a few random sinusoids with periods of 6 to 16 cells.
fn band_limited(seed: u64) -> Grid {
    let mut rng = stream(seed, "bandlimited", 0);
    let waves: Vec<[f64; 4]> = (0..6)
        .map(|_| {
            let period = rng.uniform_range(6.0, 16.0);
            let theta = rng.uniform_range(0.0, std::f64::consts::PI);
            [
                period,
                theta,
                rng.uniform_range(0.0, 6.3),
                rng.uniform_range(0.3, 1.0),
            ]
        })
        .collect();
    let total: f64 = waves.iter().map(|w| w[3]).sum();
    Grid::from_fn(vec![64, 64], |c| {
        let (y, x) = (c[0] as f64, c[1] as f64);
        let v: f64 = waves
            .iter()
            .map(|&[p, th, ph, amp]| {
                amp * (std::f64::consts::TAU * (x * th.cos() + y * th.sin()) / p + ph).sin()
            })
            .sum();
        (0.5 + 0.5 * v / total) as f32
    })
    .unwrap()
}

fn lowres_monotonicity() -> Outcome {
    let at = |s: f64| DegradationConfig {
        down_scale_range: [s, s],
        down_noise_range: [0.0, 0.0],
        ..Default::default()
    };
    let (hi_cfg, lo_cfg) = (at(0.75), at(0.25));
    let mut wins = 0;
    let mut gaps = vec![];
    for seed in 0..10 {
        let x = band_limited(seed);
        let rng = stream(seed, "lowres", 0);
        let (hi, _) = degrade_lowres(&x, &hi_cfg, &rng).unwrap();
        let (lo, _) = degrade_lowres(&x, &lo_cfg, &rng).unwrap();
        let (p_hi, p_lo) = (psnr(&x, &hi, 1.0).unwrap(), psnr(&x, &lo, 1.0).unwrap());
        gaps.push(p_hi - p_lo);
        if p_hi > p_lo {
            wins += 1;
        }
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        wins >= 8,
        format!("PSNR(s=0.75) > PSNR(s=0.25) in {wins}/10 seeds, smallest gap {min_gap:.2} dB"),
    )
}

fn noise_stages() -> Outcome {
    let disabled = DegradationConfig {
        gauss_noise_range: [0.0, 0.0],
        poisson_peak: 0.0,
        sp_amount_range: [0.0, 0.0],
        ..Default::default()
    };
    let x = random_grid(&[40, 50], &mut stream(3, "noise_input", 0));
    let (same, _) = degrade_noise(&x, &disabled, &stream(3, "noise", 0)).unwrap();
    let identity = same
        .data()
        .iter()
        .zip(x.data())
        .all(|(a, b)| a.to_bits() == b.to_bits());

    let sp_only = DegradationConfig {
        gauss_noise_range: [0.0, 0.0],
        poisson_peak: 0.0,
        ..Default::default()
    };
    let half = Grid::filled(vec![100, 100], 0.5).unwrap();
    let mut sp_exact = true;
    for seed in 0..20 {
        let (y, p) = degrade_noise(&half, &sp_only, &stream(seed, "noise", 0)).unwrap();
        let altered = y.data().iter().filter(|&&v| v != 0.5).count();
        let expected = (p.amount * half.len() as f64).round() as usize;
        sp_exact &= altered == expected && p.selected == expected && p.salt + p.pepper == expected;
    }

    let poisson_only = DegradationConfig {
        gauss_noise_range: [0.0, 0.0],
        poisson_peak: 255.0,
        sp_amount_range: [0.0, 0.0],
        ..Default::default()
    };
    let half = Grid::filled(vec![250, 400], 0.5).unwrap();
    let (y, _) = degrade_noise(&half, &poisson_only, &stream(8, "noise", 0)).unwrap();
    let n = y.len() as f64;
    let mean = y.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = y
        .data()
        .iter()
        .map(|&v| (f64::from(v) - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let target = 0.5 / 255.0;
    let poisson_ok = (mean - 0.5).abs() <= 0.005 && (var / target - 1.0).abs() <= 0.2;

    outcome(
        identity && sp_exact && poisson_ok,
        format!(
            "disabled is bit-identity: {identity}; salt-and-pepper count == round(amount n) in 20/20: {sp_exact}; \
             shot noise mean {mean:.5}, variance {var:.3e} vs {target:.3e} ({:+.1}%)",
            (var / target - 1.0) * 100.0
        ),
    )
}

// ---------------------------------------------------------------------------
// Metric oracles

fn coords(flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut c = vec![0; shape.len()];
    let mut r = flat;
    for a in (0..shape.len()).rev() {
        c[a] = r % shape[a];
        r /= shape[a];
    }
    c
}

fn oracle_dice(a: &[u32], b: &[u32], label: u32) -> f64 {
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for i in 0..a.len() {
        let (ia, ib) = (a[i] == label, b[i] == label);
        na += usize::from(ia);
        nb += usize::from(ib);
        both += usize::from(ia && ib);
    }
    2.0 * both as f64 / (na + nb) as f64
}

/// Labeled cells with a face neighbour of another label or outside the grid.
fn oracle_surface(g: &[u32], shape: &[usize], label: u32) -> Vec<Vec<usize>> {
    let mut out = vec![];
    for flat in 0..g.len() {
        if g[flat] != label {
            continue;
        }
        let c = coords(flat, shape);
        let mut edge = false;
        for axis in 0..shape.len() {
            for step in [-1i64, 1] {
                let pos = c[axis] as i64 + step;
                if pos < 0 || pos >= shape[axis] as i64 {
                    edge = true;
                    continue;
                }
                let mut n = c.clone();
                n[axis] = pos as usize;
                let idx = n
                    .iter()
                    .zip(shape)
                    .fold(0usize, |acc, (&v, &e)| acc * e + v);
                if g[idx] != label {
                    edge = true;
                }
            }
        }
        if edge {
            out.push(c);
        }
    }
    out
}

fn oracle_hd95(a: &[u32], b: &[u32], shape: &[usize], label: u32, spacing: &[f64]) -> f64 {
    let (sa, sb) = (
        oracle_surface(a, shape, label),
        oracle_surface(b, shape, label),
    );
    let nearest = |p: &Vec<usize>, set: &Vec<Vec<usize>>| {
        set.iter()
            .map(|q| {
                p.iter()
                    .zip(q)
                    .zip(spacing)
                    .map(|((&x, &y), &s)| {
                        let d = (x as f64 - y as f64) * s;
                        d * d
                    })
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    };
    let mut d: Vec<f64> = sa
        .iter()
        .map(|p| nearest(p, &sb))
        .chain(sb.iter().map(|p| nearest(p, &sa)))
        .collect();
    d.sort_by(f64::total_cmp);
    let pos = 0.95 * (d.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    d[lo] + (d[hi] - d[lo]) * (pos - lo as f64)
}

/// Random blobby label maps: a few boxes and spheres with labels 1..=3.
fn label_fixture(shape: &[usize], rng: &mut RngStream) -> Vec<u32> {
    let n: usize = shape.iter().product();
    let mut g = vec![0u32; n];
    for _ in 0..1 + rng.below(4) {
        let label = 1 + rng.below(3) as u32;
        let centre: Vec<f64> = shape.iter().map(|&e| rng.uniform() * e as f64).collect();
        let radius = 1.0 + rng.uniform() * shape.iter().copied().min().unwrap() as f64 / 2.5;
        let sphere = rng.uniform() < 0.5;
        for (flat, v) in g.iter_mut().enumerate() {
            let c = coords(flat, shape);
            let inside = if sphere {
                c.iter()
                    .zip(&centre)
                    .map(|(&x, m)| (x as f64 - m).powi(2))
                    .sum::<f64>()
                    <= radius * radius
            } else {
                c.iter()
                    .zip(&centre)
                    .all(|(&x, m)| (x as f64 - m).abs() <= radius)
            };
            if inside {
                *v = label;
            }
        }
    }
    // Sprinkle isolated cells so surfaces are irregular.
    for _ in 0..n / 40 {
        let i = rng.below(n as u64) as usize;
        g[i] = rng.below(4) as u32;
    }
    g
}

fn metric_oracles() -> Outcome {
    let mut notes = vec![];
    let mut ok = true;

    let p20 = psnr_slices(&[0.0f64; 100], &[0.1f64; 100], 1.0).unwrap();
    let p0 = psnr(
        &Grid::zeros(vec![8, 8]).unwrap(),
        &Grid::filled(vec![8, 8], 1.0).unwrap(),
        1.0,
    )
    .unwrap();
    ok &= (p20 - 20.0).abs() <= 1e-9 && p0.abs() <= 1e-9;
    notes.push(format!("psnr {p20} / {p0}"));

    let x = random_grid(&[24, 24], &mut stream(5, "ssim", 0));
    let s_same = ssim(&x, &x, 1.0).unwrap();
    let s_const = ssim(
        &Grid::filled(vec![16, 16], 0.5).unwrap(),
        &Grid::filled(vec![16, 16], 0.6).unwrap(),
        1.0,
    )
    .unwrap();
    let analytic = (2.0 * 0.3 + 1e-4) / (0.25 + 0.36 + 1e-4);
    ok &= (s_same - 1.0).abs() <= 1e-9
        && (s_const - analytic).abs() <= 1e-4
        && (s_const - 0.98361).abs() <= 1e-4;
    notes.push(format!("ssim(x,x) {s_same}, constants {s_const:.6}"));

    let mut rng = stream(17, "label_fixtures", 0);
    let mut checked = (0, 0);
    let mut mismatches = 0;
    let spacings: [&[f64]; 2] = [&[1.0, 1.0, 1.0], &[0.5, 2.0, 1.25]];
    for i in 0..60 {
        let rank = 2 + (i % 2);
        let shape: Vec<usize> = (0..rank).map(|_| 2 + rng.below(15) as usize).collect();
        let (a, b) = (
            label_fixture(&shape, &mut rng),
            label_fixture(&shape, &mut rng),
        );
        let (la, lb) = (
            LabelGrid::new(shape.clone(), a.clone()).unwrap(),
            LabelGrid::new(shape.clone(), b.clone()).unwrap(),
        );
        for label in 1..=3 {
            let in_a = a.contains(&label);
            let in_b = b.contains(&label);
            if in_a || in_b {
                checked.0 += 1;
                if dice(&la, &lb, label).unwrap() != oracle_dice(&a, &b, label) {
                    mismatches += 1;
                }
            }
            if in_a && in_b {
                for sp in spacings {
                    checked.1 += 1;
                    let sp = &sp[..rank];
                    if hd95(&la, &lb, label, sp).unwrap() != oracle_hd95(&a, &b, &shape, label, sp)
                    {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    ok &= mismatches == 0;
    notes.push(format!(
        "{} dice and {} hd95 evaluations on 60 fixtures <= 16^3, {mismatches} mismatches",
        checked.0, checked.1
    ));

    let img = grid_image(&[12, 12], 4, 1).unwrap();
    let frac = img.data().iter().filter(|&&v| v == 1.0).count() as f64 / img.len() as f64;
    ok &= frac == 0.4375;
    notes.push(format!("grid fraction {frac}"));

    outcome(ok, notes.join("; "))
}

// ---------------------------------------------------------------------------
// I/O

fn io_criteria(pipeline_out: Option<&Path>) -> Outcome {
    let mut rng = stream(99, "io_shapes", 0);
    let mut failures = 0;
    for _ in 0..1000 {
        let rank = 2 + rng.below(2) as usize;
        let shape: Vec<usize> = (0..rank).map(|_| 1 + rng.below(24) as usize).collect();
        let data = (0..shape.iter().product::<usize>())
            .map(|_| loop {
                let v = f32::from_bits(rng.next_u64() as u32);
                if v.is_finite() {
                    break v;
                }
            })
            .collect();
        let g = Grid::new(shape, data).unwrap();
        let bytes = encode_array(&g);
        let back = decode_array(&bytes).unwrap();
        let exact = back.shape() == g.shape()
            && back
                .data()
                .iter()
                .zip(g.data())
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && encode_array(&back) == bytes;
        if !exact {
            failures += 1;
        }
    }

    let golden_grid = Grid::new(vec![2, 3], vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5]).unwrap();
    let mut golden =
        b"\x93NUMPY\x01\x00\x76\x00{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }"
            .to_vec();
    golden.resize(127, b' ');
    golden.push(b'\n');
    for v in golden_grid.data() {
        golden.extend(v.to_le_bytes());
    }
    let golden_ok = encode_array(&golden_grid) == golden;

    let verify = match pipeline_out {
        Some(dir) => {
            let o = Command::new(env!("CARGO_BIN_EXE_tjp"))
                .args(["--jobs", "4", "verify", "--manifest"])
                .arg(dir.join("manifest.json"))
                .output()
                .unwrap();
            let text = String::from_utf8_lossy(&o.stdout);
            let pass = text.lines().filter(|l| l.starts_with("PASS")).count();
            let fail = text.lines().filter(|l| l.starts_with("FAIL")).count();
            (
                o.status.success() && fail == 0 && pass > 0,
                format!("verify {pass} PASS / {fail} FAIL"),
            )
        }
        None => (false, "no pipeline output to verify".into()),
    };
    outcome(
        failures == 0 && golden_ok && verify.0,
        format!(
            "1000 random shapes, {failures} inexact; golden (2,3) bytes match: {golden_ok}; {}",
            verify.1
        ),
    )
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Outcome)> = vec![];

    let (det, pipeline_out) = determinism(work.path());
    results.push(("determinism", det));
    results.push(("pyramid sizes", pyramid()));
    results.push(("mask statistics", mask_statistics()));
    results.push(("displacement bound", displacement_bound()));
    results.push(("smoothness", smoothness()));
    results.push(("warp identity", warp_identity()));
    results.push(("low-res monotonicity", lowres_monotonicity()));
    results.push(("noise stages", noise_stages()));
    results.push(("metric oracles", metric_oracles()));
    results.push(("i/o", io_criteria(pipeline_out.as_deref())));

    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
