//! Noisy down-sampling with spatially varying Gaussian blur.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::DegradationConfig;
use crate::error::{Error, Result};
use crate::grid::{unravel, Grid};
use crate::resample::{linear_resize, scaled_extent};
use crate::rng::{Lineage, RngStream};

/// σ values below this are treated as no blur.
pub const SIGMA_CUTOFF: f64 = 0.05;

/// Per-cell Gaussian standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaField {
    shape: Vec<usize>,
    values: Vec<f64>,
    range: [f64; 2],
    control_spacing: u32,
}

impl SigmaField {
    pub fn constant(shape: &[usize], sigma: f64) -> Result<Self> {
        crate::grid::check_shape(shape)?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!(
                "sigma {sigma} must be finite and >= 0"
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            values: vec![sigma; shape.iter().product()],
            range: [sigma, sigma],
            control_spacing: 1,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn range(&self) -> [f64; 2] {
        self.range
    }

    pub fn control_spacing(&self) -> u32 {
        self.control_spacing
    }

    pub fn to_grid(&self) -> Grid {
        Grid::from_parts(
            self.shape.clone(),
            self.values.iter().map(|&v| v as f32).collect(),
        )
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Independent `U(lo, hi)` draws on a control lattice every `control_spacing`
/// cells, multilinearly interpolated to every cell.
pub fn sigma_field(
    shape: &[usize],
    range: [f64; 2],
    control_spacing: u32,
    rng: &mut RngStream,
) -> Result<SigmaField> {
    crate::grid::check_shape(shape)?;
    let [lo, hi] = range;
    if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::domain(format!("sigma range {range:?} invalid")));
    }
    if control_spacing == 0 {
        return Err(Error::domain("control spacing must be >= 1"));
    }
    let spacing = control_spacing as usize;
    let ctrl_shape: Vec<usize> = shape
        .iter()
        .map(|&e| (e - 1).div_ceil(spacing) + 1)
        .collect();
    let ctrl_strides = crate::grid::strides(&ctrl_shape);
    let ctrl: Vec<f64> = (0..ctrl_shape.iter().product::<usize>())
        .map(|_| rng.uniform_range(lo, hi))
        .collect();

    let rank = shape.len();
    let n: usize = shape.iter().product();
    let mut idx = vec![0; rank];
    let mut base = vec![0; rank];
    let mut frac = vec![0.0; rank];
    let values = (0..n)
        .map(|flat| {
            unravel(flat, shape, &mut idx);
            for a in 0..rank {
                base[a] = idx[a] / spacing;
                frac[a] = (idx[a] % spacing) as f64 / spacing as f64;
            }
            let mut acc = 0.0;
            for corner in 0..(1usize << rank) {
                let mut w = 1.0;
                let mut off = 0;
                for a in 0..rank {
                    let hi_side = corner >> a & 1 == 1;
                    let k = if hi_side {
                        (base[a] + 1).min(ctrl_shape[a] - 1)
                    } else {
                        base[a]
                    };
                    w *= if hi_side { frac[a] } else { 1.0 - frac[a] };
                    off += k * ctrl_strides[a];
                }
                if w != 0.0 {
                    acc += w * ctrl[off];
                }
            }
            acc.clamp(lo, hi)
        })
        .collect();
    Ok(SigmaField {
        shape: shape.to_vec(),
        values,
        range,
        control_spacing,
    })
}

fn as_3d(shape: &[usize]) -> [usize; 3] {
    match *shape {
        [h, w] => [1, h, w],
        [d, h, w] => [d, h, w],
        _ => unreachable!("grids are rank 2 or 3"),
    }
}

fn gaussian_weights(
    center: usize,
    extent: usize,
    radius: usize,
    sigma: f64,
    out: &mut Vec<f64>,
) -> (usize, f64) {
    out.clear();
    let lo = center.saturating_sub(radius);
    let hi = (center + radius).min(extent - 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut sum = 0.0;
    for j in lo..=hi {
        let u = j as f64 - center as f64;
        let w = (-u * u * inv).exp();
        out.push(w);
        sum += w;
    }
    (lo, sum)
}

/// Short f32 dot product over eight independent lanes so it vectorizes.
/// Rows are at most `2 * ceil(3σ) + 1` long, well within f32 accuracy.
#[inline]
fn dot(a: &[f32], k: &[f32]) -> f32 {
    let mut lanes = [0.0f32; 8];
    let (ac, kc) = (a.chunks_exact(8), k.chunks_exact(8));
    let tail: f32 = ac
        .remainder()
        .iter()
        .zip(kc.remainder())
        .map(|(v, w)| v * w)
        .sum();
    for (va, vk) in ac.zip(kc) {
        for i in 0..8 {
            lanes[i] += va[i] * vk[i];
        }
    }
    lanes.iter().sum::<f32>() + tail
}

/// Blurs several same-shape grids with one σ-field, sharing the per-cell kernels.
pub fn spatially_varying_gaussian_many(inputs: &[&Grid], sf: &SigmaField) -> Result<Vec<Grid>> {
    if let Some(bad) = inputs.iter().find(|g| g.shape() != sf.shape()) {
        return Err(Error::domain(format!(
            "grid shape {:?} does not match sigma field {:?}",
            bad.shape(),
            sf.shape()
        )));
    }
    let m = inputs.len();
    if m == 0 {
        return Ok(vec![]);
    }
    let [d, h, w] = as_3d(sf.shape());
    let plane = h * w;
    let mut out = vec![0f32; d * plane * m];
    out.par_chunks_mut(w * m)
        .enumerate()
        .for_each(|(row, dst)| {
            let (z, y) = (row / h, row % h);
            let (mut wz, mut wy, mut wx) = (vec![], vec![], vec![]);
            let mut wx32: Vec<f32> = vec![];
            let mut acc = vec![0.0f64; m];
            for x in 0..w {
                let flat = row * w + x;
                let sigma = sf.values[flat];
                if sigma < SIGMA_CUTOFF {
                    for (g, input) in inputs.iter().enumerate() {
                        dst[x * m + g] = input.data()[flat];
                    }
                    continue;
                }
                let radius = (3.0 * sigma).ceil() as usize;
                let (z0, sz) = gaussian_weights(z, d, radius, sigma, &mut wz);
                let (y0, sy) = gaussian_weights(y, h, radius, sigma, &mut wy);
                let (x0, sx) = gaussian_weights(x, w, radius, sigma, &mut wx);
                let norm = 1.0 / (sz * sy * sx);
                wx32.clear();
                wx32.extend(wx.iter().map(|&k| k as f32));
                acc.iter_mut().for_each(|a| *a = 0.0);
                for (iz, &kz) in wz.iter().enumerate() {
                    for (iy, &ky) in wy.iter().enumerate() {
                        let kzy = kz * ky;
                        let start = (z0 + iz) * plane + (y0 + iy) * w + x0;
                        for (g, input) in inputs.iter().enumerate() {
                            let src = &input.data()[start..start + wx.len()];
                            acc[g] += kzy * f64::from(dot(src, &wx32));
                        }
                    }
                }
                for g in 0..m {
                    dst[x * m + g] = (acc[g] * norm) as f32;
                }
            }
        });
    Ok((0..m)
        .map(|g| {
            let data = out.iter().skip(g).step_by(m).copied().collect();
            Grid::from_parts(sf.shape().to_vec(), data)
        })
        .collect())
}

/// `out(v) = Σ_u g_σ(v)(u) x(v − u)` with a per-cell kernel of radius
/// `ceil(3σ(v))`, renormalized after truncation and border clipping.
pub fn spatially_varying_gaussian(x: &Grid, sf: &SigmaField) -> Result<Grid> {
    Ok(spatially_varying_gaussian_many(&[x], sf)?.remove(0))
}

/// Draws recorded for one low-resolution degradation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowresParams {
    pub scale: f64,
    pub sigma_down: f64,
    pub down_shape: Vec<usize>,
    pub sigma_seed: Lineage,
    pub sigma_mean: f64,
}

/// `G_σvar(↑(↓(x + η)))`: additive Gaussian noise, linear down-sampling by a
/// random factor, linear up-sampling back to the input shape, then the
/// spatially varying blur.
pub fn degrade_lowres(
    x: &Grid,
    cfg: &DegradationConfig,
    rng: &RngStream,
) -> Result<(Grid, LowresParams)> {
    cfg.validate()?;
    let mut draws = rng.split("lowres_params")?;
    let scale = draws.uniform_range(cfg.down_scale_range[0], cfg.down_scale_range[1]);
    let sigma_down = draws.uniform_range(cfg.down_noise_range[0], cfg.down_noise_range[1]);

    let noisy = if sigma_down > 0.0 {
        let mut noise = rng.split("lowres_noise")?;
        let data = x
            .data()
            .iter()
            .map(|&v| noise.gaussian(f64::from(v), sigma_down) as f32)
            .collect();
        Grid::from_parts(x.shape().to_vec(), data)
    } else {
        x.clone()
    };

    let down_shape: Vec<usize> = x.shape().iter().map(|&e| scaled_extent(e, scale)).collect();
    let restored = linear_resize(&linear_resize(&noisy, &down_shape), x.shape());

    let mut sigma_rng = rng.split("lowres_sigma")?;
    let sigma_seed = sigma_rng.lineage().clone();
    let sf = sigma_field(
        x.shape(),
        cfg.down_sigma_range,
        cfg.down_sigma_control_spacing,
        &mut sigma_rng,
    )?;
    let out = spatially_varying_gaussian(&restored, &sf)?;
    Ok((
        out,
        LowresParams {
            scale,
            sigma_down,
            down_shape,
            sigma_seed,
            sigma_mean: sf.mean(),
        },
    ))
}
