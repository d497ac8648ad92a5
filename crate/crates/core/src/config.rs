//! Degradation parameters and their defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// How the smoothing σ for deformation fields varies over space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Smoothly interpolated σ drawn at control points.
    #[default]
    Field,
    /// One σ per field.
    Constant,
}

/// Every tunable of the four degradations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationConfig {
    /// Fraction of mask-lattice cells hidden in each view.
    pub mask_ratio: f64,
    /// Image cells per mask-lattice cell along each axis.
    pub mask_cell: u32,

    /// Displacement bound α (normalized units, 1.0 = half extent).
    pub flow_alpha: f64,
    pub flow_sigma_range: [f64; 2],
    pub flow_sigma_mode: SigmaMode,
    pub flow_sigma_control_spacing: u32,
    pub perlin_octaves: u32,
    pub perlin_persistence: f64,
    /// Lattice spacing (cells) of the first octave.
    pub perlin_base_spacing: f64,
    pub perlin_lacunarity: f64,

    pub down_scale_range: [f64; 2],
    pub down_noise_range: [f64; 2],
    pub down_sigma_range: [f64; 2],
    pub down_sigma_control_spacing: u32,

    pub gauss_noise_range: [f64; 2],
    /// Photons at intensity 1.0; 0 disables the shot-noise stage.
    pub poisson_peak: f64,
    pub sp_salt_ratio: f64,
    pub sp_amount_range: [f64; 2],

    pub grid_spacing: u32,
    pub grid_line_width: u32,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        Self {
            mask_ratio: 0.5,
            mask_cell: 4,
            flow_alpha: 0.6,
            flow_sigma_range: [1.5, 3.5],
            flow_sigma_mode: SigmaMode::Field,
            flow_sigma_control_spacing: 8,
            perlin_octaves: 4,
            perlin_persistence: 0.5,
            perlin_base_spacing: 16.0,
            perlin_lacunarity: 2.0,
            down_scale_range: [0.25, 0.75],
            down_noise_range: [0.01, 0.1],
            down_sigma_range: [0.25, 1.0],
            down_sigma_control_spacing: 8,
            gauss_noise_range: [0.075, 0.15],
            poisson_peak: 255.0,
            sp_salt_ratio: 0.5,
            sp_amount_range: [0.01, 0.05],
            grid_spacing: 4,
            grid_line_width: 1,
        }
    }
}

fn check_range(name: &str, r: [f64; 2], min: f64, max: f64) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite()) || r[0] > r[1] || r[0] < min || r[1] > max {
        return Err(Error::config(format!(
            "{name} = {r:?} must satisfy {min} <= lo <= hi <= {max}"
        )));
    }
    Ok(())
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::config(format!("{name} = {v} must lie in [0, 1]")));
    }
    Ok(())
}

impl DegradationConfig {
    pub fn validate(&self) -> Result<()> {
        check_fraction("mask_ratio", self.mask_ratio)?;
        if self.mask_cell == 0 {
            return Err(Error::config("mask_cell must be >= 1"));
        }
        if !(self.flow_alpha >= 0.0 && self.flow_alpha.is_finite()) {
            return Err(Error::config("flow_alpha must be finite and >= 0"));
        }
        check_range("flow_sigma_range", self.flow_sigma_range, 0.0, f64::MAX)?;
        if self.flow_sigma_control_spacing == 0 || self.down_sigma_control_spacing == 0 {
            return Err(Error::config("sigma control spacings must be >= 1"));
        }
        if self.perlin_octaves == 0 {
            return Err(Error::config("perlin_octaves must be >= 1"));
        }
        if !(self.perlin_persistence > 0.0 && self.perlin_persistence <= 1.0) {
            return Err(Error::config("perlin_persistence must lie in (0, 1]"));
        }
        if !(self.perlin_base_spacing >= 2.0 && self.perlin_base_spacing.is_finite()) {
            return Err(Error::config("perlin_base_spacing must be >= 2"));
        }
        if !(self.perlin_lacunarity > 1.0 && self.perlin_lacunarity.is_finite()) {
            return Err(Error::config("perlin_lacunarity must be > 1"));
        }
        check_range(
            "down_scale_range",
            self.down_scale_range,
            f64::MIN_POSITIVE,
            1.0,
        )?;
        check_range("down_noise_range", self.down_noise_range, 0.0, f64::MAX)?;
        check_range("down_sigma_range", self.down_sigma_range, 0.0, f64::MAX)?;
        check_range("gauss_noise_range", self.gauss_noise_range, 0.0, f64::MAX)?;
        if !(self.poisson_peak >= 0.0 && self.poisson_peak.is_finite()) {
            return Err(Error::config("poisson_peak must be finite and >= 0"));
        }
        check_fraction("sp_salt_ratio", self.sp_salt_ratio)?;
        check_range("sp_amount_range", self.sp_amount_range, 0.0, 1.0)?;
        if self.grid_spacing == 0 || self.grid_line_width == 0 {
            return Err(Error::config(
                "grid_spacing and grid_line_width must be >= 1",
            ));
        }
        Ok(())
    }

    /// Probability that a mask-lattice cell is visible.
    pub fn tau_keep(&self) -> f64 {
        1.0 - self.mask_ratio
    }

    /// Hex SHA-256 of the canonical JSON form. Equal configs hash equally.
    pub fn fingerprint(&self) -> String {
        let json = crate::io::manifest::to_canonical_json(self).expect("config always serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
