//! Deterministic synthetic phantoms for demos and tests.

use crate::error::Result;
use crate::grid::Grid;
use crate::rng::rng_substream;

/// Smooth blobs over a low-frequency background, scaled to `[0, 1]`.
pub fn phantom(shape: &[usize], seed: u64) -> Result<Grid> {
    let rank = shape.len();
    let mut rng = rng_substream(seed, "phantom", 0)?;
    let blobs: Vec<(Vec<f64>, f64, f64)> = (0..12)
        .map(|_| {
            let centre = shape.iter().map(|&e| rng.uniform() * e as f64).collect();
            let min_extent = *shape.iter().min().unwrap() as f64;
            let radius = min_extent * rng.uniform_range(0.05, 0.2);
            let amp = rng.uniform_range(0.3, 1.0);
            (centre, radius, amp)
        })
        .collect();
    let freqs: Vec<f64> = (0..rank).map(|_| rng.uniform_range(1.0, 3.0)).collect();
    let raw = Grid::from_fn(shape.to_vec(), |c| {
        let mut v = 0.0;
        for (centre, radius, amp) in &blobs {
            let d2: f64 = c
                .iter()
                .zip(centre)
                .map(|(&i, m)| (i as f64 - m).powi(2))
                .sum();
            v += amp * (-d2 / (2.0 * radius * radius)).exp();
        }
        let wave: f64 = c
            .iter()
            .zip(shape)
            .zip(&freqs)
            .map(|((&i, &e), f)| (std::f64::consts::TAU * f * i as f64 / e as f64).sin())
            .sum();
        (v + 0.1 * wave) as f32
    })?;
    let (lo, hi) = raw.min_max();
    Ok(raw.normalized(f64::from(lo), f64::from(hi)))
}
