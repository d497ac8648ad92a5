//! Evaluation kernels: PSNR, SSIM, Dice, HD95 and SDlogJ.

use crate::deformation::{jacobian_stats, DeformationField, JacobianStats};
use crate::error::{Error, Result};
use crate::grid::{strides, unravel, Grid, LabelGrid};

fn same_shape(a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::domain(format!("shape mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}

/// PSNR over raw sample slices. Returns `f64::INFINITY` when the inputs are equal.
pub fn psnr_slices<T: Copy + Into<f64>>(a: &[T], b: &[T], max_val: f64) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::domain(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if max_val.is_nan() || max_val <= 0.0 {
        return Err(Error::domain(format!("max_val {max_val} must be positive")));
    }
    let mse = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.into() - y.into();
            d * d
        })
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_val * max_val / mse).log10())
}

/// `10 · log10(max_val² / MSE)`.
pub fn psnr(a: &Grid, b: &Grid, max_val: f64) -> Result<f64> {
    same_shape(a.shape(), b.shape())?;
    psnr_slices(a.data(), b.data(), max_val)
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn ssim_kernel(size: usize) -> Vec<f64> {
    let c = (size / 2) as f64;
    let w: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Valid-mode separable filtering of an `h × w` plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * plane[y * w + x + i])
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, k: &[f64], max_val: f64) -> (f64, usize) {
    let c1 = (SSIM_K1 * max_val).powi(2);
    let c2 = (SSIM_K2 * max_val).powi(2);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, h, w, k);
    let mu_b = filter_valid(b, h, w, k);
    let e_aa = filter_valid(&aa, h, w, k);
    let e_bb = filter_valid(&bb, h, w, k);
    let e_ab = filter_valid(&ab, h, w, k);
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        sum +=
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    (sum, mu_a.len())
}

/// Mean SSIM with an 11-tap Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03.
///
/// Volumes are scored slice by slice along the first axis. Planes smaller
/// than 11 cells use the largest odd window that fits (at least 3).
pub fn ssim(a: &Grid, b: &Grid, max_val: f64) -> Result<f64> {
    same_shape(a.shape(), b.shape())?;
    if max_val.is_nan() || max_val <= 0.0 {
        return Err(Error::domain(format!("max_val {max_val} must be positive")));
    }
    let shape = a.shape();
    let (h, w) = (shape[shape.len() - 2], shape[shape.len() - 1]);
    let mut size = SSIM_WINDOW.min(h).min(w);
    if size % 2 == 0 {
        size -= 1;
    }
    if size < 3 {
        return Err(Error::domain(format!(
            "extents {shape:?} too small for SSIM"
        )));
    }
    let k = ssim_kernel(size);
    let plane = h * w;
    let (mut total, mut count) = (0.0, 0usize);
    for s in 0..a.len() / plane {
        let pa: Vec<f64> = a.data()[s * plane..(s + 1) * plane]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        let pb: Vec<f64> = b.data()[s * plane..(s + 1) * plane]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        let (sum, n) = ssim_plane(&pa, &pb, h, w, &k, max_val);
        total += sum;
        count += n;
    }
    Ok(total / count as f64)
}

/// `2|A ∩ B| / (|A| + |B|)` for the cells carrying `label`.
pub fn dice(a: &LabelGrid, b: &LabelGrid, label: u32) -> Result<f64> {
    same_shape(a.shape(), b.shape())?;
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (ia, ib) = (x == label, y == label);
        na += ia as usize;
        nb += ib as usize;
        both += (ia && ib) as usize;
    }
    if na + nb == 0 {
        return Err(Error::UndefinedMetric(format!(
            "label {label} absent from both grids"
        )));
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Mean Dice over every foreground label present in either grid.
pub fn dice_macro(a: &LabelGrid, b: &LabelGrid) -> Result<f64> {
    let mut labels = a.labels();
    labels.extend(b.labels());
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() {
        return Err(Error::UndefinedMetric("no foreground labels".into()));
    }
    let total = labels.iter().map(|&l| dice(a, b, l)).sum::<Result<f64>>()?;
    Ok(total / labels.len() as f64)
}

/// Flat indices of `label` cells that touch a face neighbour with another
/// label. Cells on the grid border count as touching the outside.
pub fn surface_cells(grid: &LabelGrid, label: u32) -> Vec<usize> {
    let shape = grid.shape();
    let st = strides(shape);
    let mut idx = vec![0; shape.len()];
    let data = grid.data();
    (0..data.len())
        .filter(|&flat| {
            if data[flat] != label {
                return false;
            }
            unravel(flat, shape, &mut idx);
            (0..shape.len()).any(|a| {
                idx[a] == 0
                    || idx[a] + 1 == shape[a]
                    || data[flat - st[a]] != label
                    || data[flat + st[a]] != label
            })
        })
        .collect()
}

/// Squared Euclidean distance to the nearest marked cell along one line
/// (lower envelope of parabolas).
fn edt_line(f: &[f64], spacing: f64, out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let xq = q as f64 * spacing;
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let xp = p as f64 * spacing;
                    let s = ((fq + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let xq = q as f64 * spacing;
        while k + 1 < v.len() && z[k + 1] < xq {
            k += 1;
        }
        let d = (q as f64 - v[k] as f64) * spacing;
        *o = d * d + f[v[k]];
    }
}

/// Exact squared Euclidean distance transform to the `targets` cells.
pub fn squared_distance_transform(shape: &[usize], targets: &[usize], spacing: &[f64]) -> Vec<f64> {
    let n: usize = shape.iter().product();
    let mut dist = vec![f64::INFINITY; n];
    for &t in targets {
        dist[t] = 0.0;
    }
    let st = strides(shape);
    let (mut v, mut z) = (vec![], vec![]);
    for axis in 0..shape.len() {
        let len = shape[axis];
        let mut line = vec![0.0; len];
        let mut out = vec![0.0; len];
        let lines = n / len;
        let outer_shape: Vec<usize> = shape
            .iter()
            .enumerate()
            .map(|(a, &e)| if a == axis { 1 } else { e })
            .collect();
        let mut idx = vec![0; shape.len()];
        for l in 0..lines {
            unravel(l, &outer_shape, &mut idx);
            let start: usize = idx.iter().zip(&st).map(|(i, s)| i * s).sum();
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = dist[start + i * st[axis]];
            }
            edt_line(&line, spacing[axis], &mut out, &mut v, &mut z);
            for (i, &o) in out.iter().enumerate() {
                dist[start + i * st[axis]] = o;
            }
        }
    }
    dist
}

/// Linear-interpolated percentile (`q` in `[0, 1]`) of unsorted values.
pub fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = q * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

/// 95th percentile of the pooled surface-to-surface distances A→B and B→A,
/// in physical units given by `spacing`.
pub fn hd95(a: &LabelGrid, b: &LabelGrid, label: u32, spacing: &[f64]) -> Result<f64> {
    same_shape(a.shape(), b.shape())?;
    if spacing.len() != a.shape().len() || spacing.iter().any(|s| s.is_nan() || *s <= 0.0) {
        return Err(Error::domain(format!("invalid spacing {spacing:?}")));
    }
    let sa = surface_cells(a, label);
    let sb = surface_cells(b, label);
    if sa.is_empty() || sb.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "label {label} has an empty surface"
        )));
    }
    let da = squared_distance_transform(a.shape(), &sa, spacing);
    let db = squared_distance_transform(b.shape(), &sb, spacing);
    let mut pooled: Vec<f64> = sa
        .iter()
        .map(|&p| db[p].sqrt())
        .chain(sb.iter().map(|&p| da[p].sqrt()))
        .collect();
    Ok(percentile(&mut pooled, 0.95))
}

/// `(SDlogJ, fraction of det J <= 0)` of a deformation field.
pub fn sdlogj(field: &DeformationField) -> Result<JacobianStats> {
    jacobian_stats(field)
}
