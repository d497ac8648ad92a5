//! Smooth random deformations built from multi-octave gradient noise.
//!
//! Displacements are stored in normalized units: 1.0 along an axis equals half
//! of that axis' extent in cells.

use serde::{Deserialize, Serialize};

use crate::config::{DegradationConfig, SigmaMode};
use crate::error::{Error, Result};
use crate::grid::{check_shape, strides, unravel, Grid};
use crate::lowres::{sigma_field, spatially_varying_gaussian_many, SigmaField};
use crate::rng::RngStream;

/// Variance below which a component is only centred, not rescaled.
const MIN_VARIANCE: f64 = 1e-12;

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn random_gradient(rank: usize, rng: &mut RngStream) -> [f64; 3] {
    if rank == 2 {
        let theta = std::f64::consts::TAU * rng.uniform();
        [theta.cos(), theta.sin(), 0.0]
    } else {
        let z = 2.0 * rng.uniform() - 1.0;
        let phi = std::f64::consts::TAU * rng.uniform();
        let r = (1.0 - z * z).max(0.0).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    }
}

/// Gradient noise on an integer lattice with unit-length random gradients and
/// quintic fade. Its magnitude is at most `sqrt(rank) / 2 < 1`.
struct GradientLattice {
    shape: Vec<usize>,
    strides: Vec<usize>,
    gradients: Vec<[f64; 3]>,
}

impl GradientLattice {
    fn new(shape: Vec<usize>, rng: &mut RngStream) -> Self {
        let rank = shape.len();
        let n: usize = shape.iter().product();
        let gradients = (0..n).map(|_| random_gradient(rank, rng)).collect();
        let strides = strides(&shape);
        Self {
            shape,
            strides,
            gradients,
        }
    }

    fn sample(&self, p: &[f64]) -> f64 {
        let rank = p.len();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        let mut fades = [0.0; 3];
        for a in 0..rank {
            base[a] = (p[a].floor() as usize).min(self.shape[a] - 2);
            frac[a] = p[a] - base[a] as f64;
            fades[a] = fade(frac[a]);
        }
        let mut value = 0.0;
        for corner in 0..(1usize << rank) {
            let mut idx = 0;
            let mut weight = 1.0;
            let mut dot = 0.0;
            for a in 0..rank {
                let hi = corner >> a & 1;
                idx += (base[a] + hi) * self.strides[a];
                weight *= if hi == 1 { fades[a] } else { 1.0 - fades[a] };
            }
            let g = self.gradients[idx];
            for a in 0..rank {
                dot += g[a] * (frac[a] - (corner >> a & 1) as f64);
            }
            value += weight * dot;
        }
        value
    }
}

/// Multi-octave gradient noise:
/// `value(x) = Σ_{n=1..N} p^(n-1) · S(f^(n-1) · x / base_spacing)`.
///
/// Each octave draws its own lattice of gradients from `rng`, lowest
/// frequency first.
pub fn perlin_field(
    shape: &[usize],
    octaves: u32,
    persistence: f64,
    base_spacing: f64,
    lacunarity: f64,
    rng: &mut RngStream,
) -> Result<Grid> {
    check_shape(shape)?;
    if octaves == 0
        || !(persistence > 0.0 && persistence <= 1.0)
        || !(base_spacing >= 2.0 && base_spacing.is_finite())
        || !(lacunarity > 1.0 && lacunarity.is_finite())
    {
        return Err(Error::domain(format!(
            "invalid noise parameters: octaves {octaves}, persistence {persistence}, \
             base spacing {base_spacing}, lacunarity {lacunarity}"
        )));
    }
    let rank = shape.len();
    let n: usize = shape.iter().product();
    let mut acc = vec![0.0f64; n];
    let mut idx = vec![0; rank];
    let mut p = vec![0.0; rank];
    let mut amplitude = 1.0;
    let mut freq = 1.0 / base_spacing;
    for _ in 0..octaves {
        let lattice_shape: Vec<usize> = shape
            .iter()
            .map(|&e| ((e - 1) as f64 * freq).floor() as usize + 2)
            .collect();
        let lattice = GradientLattice::new(lattice_shape, rng);
        for (flat, a) in acc.iter_mut().enumerate() {
            unravel(flat, shape, &mut idx);
            for (pa, &i) in p.iter_mut().zip(&idx) {
                *pa = i as f64 * freq;
            }
            *a += amplitude * lattice.sample(&p);
        }
        amplitude *= persistence;
        freq *= lacunarity;
    }
    Ok(Grid::from_parts(
        shape.to_vec(),
        acc.into_iter().map(|v| v as f32).collect(),
    ))
}

/// Summary of the smoothing σ realized for a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaUsed {
    pub mode: SigmaMode,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl SigmaUsed {
    fn of(mode: SigmaMode, sf: &SigmaField) -> Self {
        let (min, max) = sf
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Self {
            mode,
            min,
            max,
            mean: sf.mean(),
        }
    }
}

/// Per-axis displacement grids in normalized units.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationField {
    shape: Vec<usize>,
    components: Vec<Grid>,
    alpha: f64,
    sigma_used: Option<SigmaUsed>,
}

impl DeformationField {
    /// Wraps explicit components. Their count must equal the rank and every
    /// shape must match; `alpha` is the declared bound, checked here.
    pub fn new(components: Vec<Grid>, alpha: f64) -> Result<Self> {
        let shape = components
            .first()
            .ok_or_else(|| Error::domain("deformation field needs components"))?
            .shape()
            .to_vec();
        if components.len() != shape.len() || components.iter().any(|c| c.shape() != shape) {
            return Err(Error::domain(format!(
                "need {} components of shape {shape:?}",
                shape.len()
            )));
        }
        if components
            .iter()
            .flat_map(|c| c.data())
            .any(|&v| f64::from(v).abs() > alpha)
        {
            return Err(Error::domain(format!("component exceeds bound {alpha}")));
        }
        Ok(Self {
            shape,
            components,
            alpha,
            sigma_used: None,
        })
    }

    /// Wraps components without a declared bound (alpha = largest magnitude).
    pub fn from_components(components: Vec<Grid>) -> Result<Self> {
        let alpha = components
            .iter()
            .flat_map(|c| c.data())
            .fold(0.0f64, |m, &v| m.max(f64::from(v).abs()));
        Self::new(components, alpha)
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        let comps = (0..shape.len())
            .map(|_| Grid::zeros(shape.to_vec()))
            .collect::<Result<_>>()?;
        Self::new(comps, 0.0)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn components(&self) -> &[Grid] {
        &self.components
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma_used(&self) -> Option<&SigmaUsed> {
        self.sigma_used.as_ref()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.data())
            .fold(0.0f64, |m, &v| m.max(f64::from(v).abs()))
    }

    /// Displacement along `axis` at flat index `flat`, in cells.
    #[inline]
    fn cells(&self, axis: usize, flat: usize) -> f64 {
        f64::from(self.components[axis].data()[flat]) * self.shape[axis] as f64 / 2.0
    }
}

/// Largest f32 not exceeding `alpha`.
fn f32_bound(alpha: f64) -> f32 {
    let b = alpha as f32;
    if f64::from(b) > alpha {
        f32::from_bits(b.to_bits() - 1)
    } else {
        b
    }
}

/// Centres each component, scales it to unit variance (when the variance is
/// not negligible), and bounds it with `alpha * tanh(.)`.
pub fn bound_components(raw: Vec<Grid>, alpha: f64) -> Result<Vec<Grid>> {
    let cap = f32_bound(alpha);
    raw.into_iter()
        .map(|g| {
            let n = g.len() as f64;
            let mean = g.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
            let var = g
                .data()
                .iter()
                .map(|&v| (f64::from(v) - mean).powi(2))
                .sum::<f64>()
                / n;
            let inv_std = if var < MIN_VARIANCE {
                1.0
            } else {
                1.0 / var.sqrt()
            };
            let data = g
                .data()
                .iter()
                .map(|&v| {
                    let z = (f64::from(v) - mean) * inv_std;
                    ((alpha * z.tanh()) as f32).clamp(-cap, cap)
                })
                .collect();
            Ok(Grid::from_parts(g.shape().to_vec(), data))
        })
        .collect()
}

fn raw_components(shape: &[usize], cfg: &DegradationConfig, rng: &RngStream) -> Result<Vec<Grid>> {
    (0..shape.len())
        .map(|axis| {
            let mut stream = rng.split(&format!("flow{axis}"))?;
            perlin_field(
                shape,
                cfg.perlin_octaves,
                cfg.perlin_persistence,
                cfg.perlin_base_spacing,
                cfg.perlin_lacunarity,
                &mut stream,
            )
        })
        .collect()
}

fn flow_sigma(shape: &[usize], cfg: &DegradationConfig, rng: &RngStream) -> Result<SigmaField> {
    let mut stream = rng.split("flow_sigma")?;
    match cfg.flow_sigma_mode {
        SigmaMode::Field => sigma_field(
            shape,
            cfg.flow_sigma_range,
            cfg.flow_sigma_control_spacing,
            &mut stream,
        ),
        SigmaMode::Constant => {
            let sigma = stream.uniform_range(cfg.flow_sigma_range[0], cfg.flow_sigma_range[1]);
            SigmaField::constant(shape, sigma)
        }
    }
}

/// Random smooth bounded displacement field.
///
/// Per axis `c`: gradient noise from child stream `"flow{c}"`, blurred with a
/// σ-field from `"flow_sigma"` shared by all axes, normalized, then bounded
/// by `flow_alpha * tanh(.)`.
pub fn deformation_field(
    shape: &[usize],
    cfg: &DegradationConfig,
    rng: &RngStream,
) -> Result<DeformationField> {
    cfg.validate()?;
    check_shape(shape)?;
    let raw = raw_components(shape, cfg, rng)?;
    let sf = flow_sigma(shape, cfg, rng)?;
    let refs: Vec<&Grid> = raw.iter().collect();
    let smoothed = spatially_varying_gaussian_many(&refs, &sf)?;
    let mut field =
        DeformationField::new(bound_components(smoothed, cfg.flow_alpha)?, cfg.flow_alpha)?;
    field.sigma_used = Some(SigmaUsed::of(cfg.flow_sigma_mode, &sf));
    Ok(field)
}

/// The same field as [`deformation_field`] with the Gaussian smoothing left out.
pub fn unsmoothed_deformation_field(
    shape: &[usize],
    cfg: &DegradationConfig,
    rng: &RngStream,
) -> Result<DeformationField> {
    cfg.validate()?;
    check_shape(shape)?;
    let raw = raw_components(shape, cfg, rng)?;
    DeformationField::new(bound_components(raw, cfg.flow_alpha)?, cfg.flow_alpha)
}

/// Resamples `x` at `v + Φ(v) · extent / 2` by multilinear interpolation.
/// Samples falling outside the grid read as 0.
pub fn warp(x: &Grid, field: &DeformationField) -> Result<Grid> {
    if x.shape() != field.shape() {
        return Err(Error::domain(format!(
            "image shape {:?} does not match field shape {:?}",
            x.shape(),
            field.shape()
        )));
    }
    let shape = x.shape();
    let rank = shape.len();
    let st = x.strides();
    let mut idx = vec![0; rank];
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    let data = (0..x.len())
        .map(|flat| {
            unravel(flat, shape, &mut idx);
            for a in 0..rank {
                let p = idx[a] as f64 + field.cells(a, flat);
                let f = p.floor();
                base[a] = f as i64;
                frac[a] = p - f;
            }
            let mut acc = 0.0;
            'corner: for corner in 0..(1usize << rank) {
                let mut w = 1.0;
                let mut off = 0;
                for a in 0..rank {
                    let hi = corner >> a & 1;
                    let wa = if hi == 1 { frac[a] } else { 1.0 - frac[a] };
                    if wa == 0.0 {
                        continue 'corner;
                    }
                    let i = base[a] + hi as i64;
                    if i < 0 || i >= shape[a] as i64 {
                        continue 'corner;
                    }
                    w *= wa;
                    off += i as usize * st[a];
                }
                acc += w * f64::from(x.data()[off]);
            }
            acc as f32
        })
        .collect();
    Ok(Grid::from_parts(shape.to_vec(), data))
}

/// Jacobian-determinant statistics of `identity + displacement`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianStats {
    /// Population standard deviation of `log det J` over cells with `det J > 0`.
    pub sdlogj: f64,
    /// Fraction of interior cells with `det J <= 0`.
    pub nonpos_fraction: f64,
}

/// Determinant of the Jacobian at every interior cell, by central differences
/// in cell units.
pub fn jacobian_determinants(field: &DeformationField) -> Result<Vec<f64>> {
    let shape = field.shape();
    if shape.iter().any(|&e| e < 3) {
        return Err(Error::domain(format!(
            "jacobian needs every extent >= 3, got {shape:?}"
        )));
    }
    let rank = shape.len();
    let st = strides(shape);
    let interior: Vec<usize> = shape.iter().map(|e| e - 2).collect();
    let n: usize = interior.iter().product();
    let mut idx = vec![0; rank];
    let mut dets = Vec::with_capacity(n);
    for k in 0..n {
        unravel(k, &interior, &mut idx);
        let flat: usize = idx.iter().zip(&st).map(|(i, s)| (i + 1) * s).sum();
        let mut j = [[0.0f64; 3]; 3];
        for (c, row) in j.iter_mut().enumerate().take(rank) {
            for (d, entry) in row.iter_mut().enumerate().take(rank) {
                let diff = (field.cells(c, flat + st[d]) - field.cells(c, flat - st[d])) / 2.0;
                *entry = diff + if c == d { 1.0 } else { 0.0 };
            }
        }
        let det = if rank == 2 {
            j[0][0] * j[1][1] - j[0][1] * j[1][0]
        } else {
            j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
        };
        dets.push(det);
    }
    Ok(dets)
}

pub fn jacobian_stats(field: &DeformationField) -> Result<JacobianStats> {
    let dets = jacobian_determinants(field)?;
    // Welford: constant inputs give exactly zero spread.
    let (mut count, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
    let mut nonpos = 0usize;
    for &det in &dets {
        if det > 0.0 {
            let x = det.ln();
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        } else {
            nonpos += 1;
        }
    }
    if count == 0 {
        return Err(Error::DegenerateField(
            "every Jacobian determinant is nonpositive".into(),
        ));
    }
    Ok(JacobianStats {
        sdlogj: (m2 / count as f64).sqrt(),
        nonpos_fraction: nonpos as f64 / dets.len() as f64,
    })
}

/// Binary lattice image: 1 where some axis index `i` has `i mod spacing < line_width`.
pub fn grid_image(shape: &[usize], spacing: u32, line_width: u32) -> Result<Grid> {
    if spacing == 0 || line_width == 0 {
        return Err(Error::domain("grid spacing and line width must be >= 1"));
    }
    let (spacing, width) = (spacing as usize, line_width as usize);
    Grid::from_fn(shape.to_vec(), |c| {
        if c.iter().any(|&i| i % spacing < width) {
            1.0
        } else {
            0.0
        }
    })
}

/// Draws recorded for one deformation degradation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformParams {
    pub alpha: f64,
    pub sigma: SigmaUsed,
    pub max_abs_displacement: f64,
    pub sdlogj: Option<f64>,
    pub nonpos_fraction: Option<f64>,
}

/// Warps `x` with a fresh random field. Returns the warped image, the field
/// and its parameters.
pub fn degrade_deform(
    x: &Grid,
    cfg: &DegradationConfig,
    rng: &RngStream,
) -> Result<(Grid, DeformationField, DeformParams)> {
    let field = deformation_field(x.shape(), cfg, rng)?;
    let warped = warp(x, &field)?;
    let stats = jacobian_stats(&field).ok();
    let params = DeformParams {
        alpha: field.alpha(),
        sigma: field
            .sigma_used()
            .cloned()
            .expect("random fields record sigma"),
        max_abs_displacement: field.max_abs(),
        sdlogj: stats.map(|s| s.sdlogj),
        nonpos_fraction: stats.map(|s| s.nonpos_fraction),
    };
    Ok((warped, field, params))
}
