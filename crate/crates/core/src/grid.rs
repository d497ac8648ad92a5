//! Dense scalar grids for 2D images and 3D volumes.
//!
//! Storage is row-major: the last axis varies fastest. A `Grid` of shape
//! `[d, h, w]` stores cell `(z, y, x)` at `z * h * w + y * w + x`.

use crate::error::{Error, Result};

/// An n-dimensional (rank 2 or 3) scalar intensity array.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    data: Vec<f32>,
    spacing: Vec<f64>,
}

pub(crate) fn check_shape(shape: &[usize]) -> Result<()> {
    if !(2..=3).contains(&shape.len()) {
        return Err(Error::domain(format!(
            "grid rank must be 2 or 3, got {}",
            shape.len()
        )));
    }
    if shape.contains(&0) {
        return Err(Error::domain(format!(
            "grid extents must be positive: {shape:?}"
        )));
    }
    Ok(())
}

/// Row-major strides for `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for axis in (0..shape.len().saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * shape[axis + 1];
    }
    strides
}

/// Decomposes a flat row-major index into per-axis coordinates.
#[inline]
pub fn unravel(mut flat: usize, shape: &[usize], out: &mut [usize]) {
    for axis in (0..shape.len()).rev() {
        out[axis] = flat % shape[axis];
        flat /= shape[axis];
    }
}

impl Grid {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::domain(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite value at index {pos}")));
        }
        let spacing = vec![1.0; shape.len()];
        Ok(Self {
            shape,
            data,
            spacing,
        })
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Result<Self> {
        check_shape(&shape)?;
        let len = shape.iter().product();
        Self::new(shape, vec![value; len])
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    /// Builds a grid by evaluating `f` at every cell coordinate, in row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f32) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        let mut idx = vec![0; shape.len()];
        let data = (0..len)
            .map(|flat| {
                unravel(flat, &shape, &mut idx);
                f(&idx)
            })
            .collect();
        Self::new(shape, data)
    }

    /// Crate-internal constructor for outputs whose finiteness the caller guarantees.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f32>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        debug_assert!(data.iter().all(|v| v.is_finite()));
        let spacing = vec![1.0; shape.len()];
        Self {
            shape,
            data,
            spacing,
        }
    }

    pub fn with_spacing(mut self, spacing: Vec<f64>) -> Result<Self> {
        if spacing.len() != self.shape.len()
            || spacing
                .iter()
                .any(|s| s.is_nan() || *s <= 0.0 || !s.is_finite())
        {
            return Err(Error::domain(format!(
                "spacing {spacing:?} invalid for rank {}",
                self.shape.len()
            )));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn index(&self, coord: &[usize]) -> usize {
        coord.iter().zip(self.strides()).map(|(c, s)| c * s).sum()
    }

    pub fn get(&self, coord: &[usize]) -> f32 {
        self.data[self.index(coord)]
    }

    /// Minimum and maximum value.
    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }

    /// Elementwise product, used for masking.
    pub fn multiply(&self, other: &Grid) -> Result<Grid> {
        if self.shape != other.shape {
            return Err(Error::domain(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Grid::from_parts(self.shape.clone(), data))
    }

    /// Copies the sub-region starting at `origin` with extents `window`.
    pub fn crop(&self, origin: &[usize], window: &[usize]) -> Result<Grid> {
        if origin.len() != self.rank() || window.len() != self.rank() {
            return Err(Error::domain("crop rank mismatch"));
        }
        if origin
            .iter()
            .zip(window)
            .zip(&self.shape)
            .any(|((o, w), e)| *w == 0 || o + w > *e)
        {
            return Err(Error::WindowTooLarge {
                window: window.to_vec(),
                extents: self.shape.clone(),
            });
        }
        let strides = self.strides();
        let rows: usize = window[..self.rank() - 1].iter().product();
        let row_len = window[self.rank() - 1];
        let mut data = Vec::with_capacity(rows * row_len);
        let mut idx = vec![0; self.rank() - 1];
        for r in 0..rows {
            unravel(r, &window[..self.rank() - 1], &mut idx);
            let start: usize = idx
                .iter()
                .zip(origin)
                .zip(&strides)
                .map(|((i, o), s)| (i + o) * s)
                .sum::<usize>()
                + origin[self.rank() - 1];
            data.extend_from_slice(&self.data[start..start + row_len]);
        }
        Ok(Grid {
            shape: window.to_vec(),
            data,
            spacing: self.spacing.clone(),
        })
    }

    /// Maps values to `[0, 1]` using the range `[lo, hi]`, clamping outliers.
    /// A degenerate range maps everything to 0.
    pub fn normalized(&self, lo: f64, hi: f64) -> Grid {
        let span = hi - lo;
        let data = self
            .data
            .iter()
            .map(|&v| {
                if span > 0.0 {
                    ((f64::from(v) - lo) / span).clamp(0.0, 1.0) as f32
                } else {
                    0.0
                }
            })
            .collect();
        Grid {
            shape: self.shape.clone(),
            data,
            spacing: self.spacing.clone(),
        }
    }
}

/// Integer label map for segmentation metrics. 0 is background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelGrid {
    shape: Vec<usize>,
    data: Vec<u32>,
}

impl LabelGrid {
    pub fn new(shape: Vec<usize>, data: Vec<u32>) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::domain(format!(
                "shape {shape:?} needs {len} labels, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// Converts an intensity grid holding integral, nonnegative values.
    pub fn from_grid(grid: &Grid) -> Result<Self> {
        let data = grid
            .data()
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f32 {
                    Ok(v as u32)
                } else {
                    Err(Error::domain(format!("{v} is not a valid label")))
                }
            })
            .collect::<Result<_>>()?;
        Self::new(grid.shape().to_vec(), data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    /// Sorted distinct foreground labels.
    pub fn labels(&self) -> Vec<u32> {
        let mut labels: Vec<u32> = self.data.iter().copied().filter(|&l| l != 0).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rank_and_length() {
        assert!(Grid::new(vec![4], vec![0.0; 4]).is_err());
        assert!(Grid::new(vec![2, 2, 2, 2], vec![0.0; 16]).is_err());
        assert!(Grid::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Grid::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Grid::new(vec![1, 2], vec![0.0, f32::NAN]).is_err());
        assert!(Grid::new(vec![1, 2], vec![f32::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn crop_3d_matches_indexing() {
        let g = Grid::from_fn(vec![4, 5, 6], |c| (c[0] * 100 + c[1] * 10 + c[2]) as f32).unwrap();
        let c = g.crop(&[1, 2, 3], &[2, 3, 2]).unwrap();
        assert_eq!(c.shape(), &[2, 3, 2]);
        assert_eq!(c.get(&[0, 0, 0]), 123.0);
        assert_eq!(c.get(&[1, 2, 1]), 244.0);
        assert!(g.crop(&[3, 0, 0], &[2, 1, 1]).is_err());
    }

    #[test]
    fn labels_from_grid() {
        let g = Grid::new(vec![2, 2], vec![0.0, 1.0, 3.0, 1.0]).unwrap();
        let l = LabelGrid::from_grid(&g).unwrap();
        assert_eq!(l.labels(), vec![1, 3]);
        let bad = Grid::new(vec![1, 2], vec![0.5, 1.0]).unwrap();
        assert!(LabelGrid::from_grid(&bad).is_err());
    }
}
