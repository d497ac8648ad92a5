//! Tile origins for streaming over sources too large to process at once.

use crate::error::{Error, Result};

fn axis_origins(extent: usize, tile: usize, stride: usize) -> Vec<usize> {
    let mut origins = vec![0];
    let mut o = 0;
    while o + tile < extent {
        o = (o + stride).min(extent - tile);
        origins.push(o);
    }
    origins
}

/// Row-major tile origins at multiples of `stride`. The last origin on each
/// axis is pulled back so the final tile ends exactly at the boundary.
#[derive(Clone, Debug)]
pub struct TileIter {
    per_axis: Vec<Vec<usize>>,
    cursor: Vec<usize>,
    done: bool,
}

impl Iterator for TileIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let item = self
            .cursor
            .iter()
            .zip(&self.per_axis)
            .map(|(&c, axis)| axis[c])
            .collect();
        self.done = true;
        for a in (0..self.cursor.len()).rev() {
            self.cursor[a] += 1;
            if self.cursor[a] < self.per_axis[a].len() {
                self.done = false;
                break;
            }
            self.cursor[a] = 0;
        }
        Some(item)
    }
}

pub fn tile_iter(source_shape: &[usize], tile: &[usize], stride: &[usize]) -> Result<TileIter> {
    if tile.len() != source_shape.len() || stride.len() != source_shape.len() {
        return Err(Error::domain("tile, stride and source ranks differ"));
    }
    if tile.iter().zip(source_shape).any(|(t, e)| *t == 0 || t > e) {
        return Err(Error::domain(format!(
            "tile {tile:?} does not fit source {source_shape:?}"
        )));
    }
    if stride.contains(&0) {
        return Err(Error::domain("stride must be >= 1"));
    }
    let per_axis = source_shape
        .iter()
        .zip(tile)
        .zip(stride)
        .map(|((&e, &t), &s)| axis_origins(e, t, s))
        .collect();
    Ok(TileIter {
        per_axis,
        cursor: vec![0; source_shape.len()],
        done: false,
    })
}
