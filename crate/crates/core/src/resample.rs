//! Separable resampling kernels shared by the sampler and the low-resolution
//! degradation. Every output value is a convex combination of input values.

use crate::grid::{strides, Grid};

/// Per output index: the contributing input indices and their weights.
type Taps = Vec<Vec<(usize, f64)>>;

/// Extent after scaling by `s`: `floor(extent * s)`, at least 1. A tiny
/// tolerance absorbs round-off for scales like 1/3.
pub fn scaled_extent(extent: usize, s: f64) -> usize {
    ((extent as f64 * s + 1e-9).floor() as usize).max(1)
}

/// Returns `k` when `s == 1/k` for an integer `k >= 2`.
pub fn reciprocal_integer(s: f64) -> Option<usize> {
    let inv = 1.0 / s;
    let k = inv.round();
    if k >= 2.0 && (inv - k).abs() < 1e-9 {
        Some(k as usize)
    } else {
        None
    }
}

fn linear_taps(input: usize, output: usize) -> Taps {
    let ratio = input as f64 / output as f64;
    (0..output)
        .map(|o| {
            let src = ((o as f64 + 0.5) * ratio - 0.5).clamp(0.0, (input - 1) as f64);
            let i0 = src.floor() as usize;
            let t = src - i0 as f64;
            let i1 = (i0 + 1).min(input - 1);
            if t == 0.0 || i1 == i0 {
                vec![(i0, 1.0)]
            } else {
                vec![(i0, 1.0 - t), (i1, t)]
            }
        })
        .collect()
}

fn area_taps(input: usize, output: usize, factor: usize) -> Taps {
    (0..output)
        .map(|o| {
            let start = (o * factor).min(input - 1);
            let end = (start + factor).min(input);
            let w = 1.0 / (end - start) as f64;
            (start..end).map(|i| (i, w)).collect()
        })
        .collect()
}

fn apply_axis(data: &[f64], shape: &[usize], axis: usize, taps: &Taps) -> (Vec<f64>, Vec<usize>) {
    let mut out_shape = shape.to_vec();
    out_shape[axis] = taps.len();
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let in_stride = strides(shape)[axis];
    let mut out = vec![0.0; outer * taps.len() * inner];
    for o in 0..outer {
        let in_base = o * shape[axis] * inner;
        let out_base = o * taps.len() * inner;
        for (t, tap) in taps.iter().enumerate() {
            let dst = &mut out[out_base + t * inner..out_base + (t + 1) * inner];
            for &(src, w) in tap {
                let row = &data[in_base + src * in_stride..in_base + src * in_stride + inner];
                for (d, s) in dst.iter_mut().zip(row) {
                    *d += w * s;
                }
            }
        }
    }
    (out, out_shape)
}

fn separable(grid: &Grid, taps_for: impl Fn(usize, usize) -> Option<Taps>) -> Grid {
    let mut shape = grid.shape().to_vec();
    let mut data: Vec<f64> = grid.data().iter().map(|&v| f64::from(v)).collect();
    for axis in 0..shape.len() {
        if let Some(taps) = taps_for(axis, shape[axis]) {
            let (d, s) = apply_axis(&data, &shape, axis, &taps);
            data = d;
            shape = s;
        }
    }
    Grid::from_parts(shape, data.into_iter().map(|v| v as f32).collect())
}

/// Linear (bi/trilinear, separable) resize to `target` extents using
/// half-pixel-centre alignment.
pub fn linear_resize(grid: &Grid, target: &[usize]) -> Grid {
    assert_eq!(target.len(), grid.rank());
    if target == grid.shape() {
        return grid.clone();
    }
    separable(grid, |axis, input| {
        (target[axis] != input).then(|| linear_taps(input, target[axis]))
    })
}

/// Box-average down-sampling by an integer factor along every axis.
pub fn area_downsample(grid: &Grid, factor: usize, target: &[usize]) -> Grid {
    separable(grid, |axis, input| {
        (target[axis] != input).then(|| area_taps(input, target[axis], factor))
    })
}

/// Down-samples by `s`: area averaging when `s` is a reciprocal integer,
/// linear interpolation otherwise. `s == 1` returns a copy.
pub fn downsample(grid: &Grid, s: f64) -> Grid {
    if s == 1.0 {
        return grid.clone();
    }
    let target: Vec<usize> = grid.shape().iter().map(|&e| scaled_extent(e, s)).collect();
    match reciprocal_integer(s) {
        Some(k) => area_downsample(grid, k, &target),
        None => linear_resize(grid, &target),
    }
}
