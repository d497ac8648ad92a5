//! Multi-stage sensor noise: additive Gaussian, photon shot noise, then
//! salt-and-pepper.

use serde::{Deserialize, Serialize};

use crate::config::DegradationConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::RngStream;

/// Upper clamp applied after the shot-noise stage.
pub const POISSON_CLAMP: f32 = 1.5;
const INPUT_TOLERANCE: f32 = 1e-6;

/// Draws recorded for one noise degradation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub sigma_noise: f64,
    pub poisson_peak: f64,
    pub amount: f64,
    pub selected: usize,
    pub salt: usize,
    pub pepper: usize,
}

/// Applies `Bi(Poi(max(0, x + η)))`.
///
/// 1. `η ~ N(0, σ²)`, `σ ~ U(gauss_noise_range)`, then clamp below at 0.
/// 2. With `poisson_peak > 0`: `v ← Poisson(v · peak) / peak`, clamped to `[0, 1.5]`.
/// 3. `amount ~ U(sp_amount_range)`; exactly `round(amount · n)` distinct cells
///    are chosen and each set to 1 with probability `sp_salt_ratio`, else 0.
///
/// A stage whose drawn strength is zero is skipped and leaves values bit-identical.
pub fn degrade_noise(
    x: &Grid,
    cfg: &DegradationConfig,
    rng: &RngStream,
) -> Result<(Grid, NoiseParams)> {
    cfg.validate()?;
    if let Some(bad) = x
        .data()
        .iter()
        .find(|&&v| !(-INPUT_TOLERANCE..=1.0 + INPUT_TOLERANCE).contains(&v))
    {
        return Err(Error::domain(format!("noise input {bad} outside [0, 1]")));
    }
    let mut draws = rng.split("noise_params")?;
    let sigma_noise = draws.uniform_range(cfg.gauss_noise_range[0], cfg.gauss_noise_range[1]);
    let amount = draws.uniform_range(cfg.sp_amount_range[0], cfg.sp_amount_range[1]);

    let mut data = x.data().to_vec();

    if sigma_noise > 0.0 {
        let mut g = rng.split("noise_gauss")?;
        for v in data.iter_mut() {
            *v = (g.gaussian(f64::from(*v), sigma_noise).max(0.0)) as f32;
        }
    }

    let peak = cfg.poisson_peak;
    if peak > 0.0 {
        let mut p = rng.split("noise_poisson")?;
        for v in data.iter_mut() {
            let lambda = f64::from(v.max(0.0)) * peak;
            let count = p.poisson(lambda)?;
            *v = ((count as f64 / peak) as f32).clamp(0.0, POISSON_CLAMP);
        }
    }

    let n = data.len();
    let selected = ((amount * n as f64).round() as usize).min(n);
    let (mut salt, mut pepper) = (0, 0);
    if selected > 0 {
        let mut s = rng.split("noise_saltpepper")?;
        // Partial Fisher-Yates: the first `selected` slots are a uniform
        // sample without replacement.
        let mut order: Vec<usize> = (0..n).collect();
        for i in 0..selected {
            let j = i + s.below((n - i) as u64) as usize;
            order.swap(i, j);
        }
        for &cell in &order[..selected] {
            if s.uniform() < cfg.sp_salt_ratio {
                data[cell] = 1.0;
                salt += 1;
            } else {
                data[cell] = 0.0;
                pepper += 1;
            }
        }
    }

    Ok((
        Grid::from_parts(x.shape().to_vec(), data),
        NoiseParams {
            sigma_noise,
            poisson_peak: peak,
            amount,
            selected,
            salt,
            pepper,
        },
    ))
}
