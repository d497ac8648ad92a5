//! Dual-masking degradation: two independently drawn coarse visibility masks
//! applied to the same patch.

use crate::config::DegradationConfig;
use crate::error::{Error, Result};
use crate::grid::{unravel, Grid};
use crate::rng::RngStream;

pub const MAX_MASK_ATTEMPTS: u32 = 16;

/// The two lattice masks behind a pair of masked views. 1 = visible.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskPair {
    pub m_a: Grid,
    pub m_b: Grid,
    pub cell: u32,
    pub tau_keep: f64,
    /// Number of draws needed to satisfy the jointly-hidden constraint.
    pub attempts: u32,
}

impl MaskPair {
    /// Fraction of lattice cells hidden in both masks.
    pub fn both_hidden_fraction(&self) -> f64 {
        let both = self
            .m_a
            .data()
            .iter()
            .zip(self.m_b.data())
            .filter(|(a, b)| **a == 0.0 && **b == 0.0)
            .count();
        both as f64 / self.m_a.len() as f64
    }
}

pub fn lattice_shape(shape: &[usize], cell: u32) -> Vec<usize> {
    shape.iter().map(|&e| e.div_ceil(cell as usize)).collect()
}

/// One uniform per lattice cell, in row-major order; visible iff `ξ < tau_keep`.
pub fn generate_lattice(lattice: &[usize], tau_keep: f64, rng: &mut RngStream) -> Grid {
    let n: usize = lattice.iter().product();
    let data = (0..n)
        .map(|_| if rng.uniform() < tau_keep { 1.0 } else { 0.0 })
        .collect();
    Grid::from_parts(lattice.to_vec(), data)
}

/// Nearest-neighbour block replication of a lattice mask to full resolution.
/// Partial border blocks take the value of the lattice cell they fall in.
pub fn expand_lattice(lattice: &Grid, shape: &[usize], cell: u32) -> Grid {
    let cell = cell as usize;
    let n: usize = shape.iter().product();
    let mut idx = vec![0; shape.len()];
    let mut lat = vec![0; shape.len()];
    let data = (0..n)
        .map(|flat| {
            unravel(flat, shape, &mut idx);
            for (l, i) in lat.iter_mut().zip(&idx) {
                *l = i / cell;
            }
            lattice.get(&lat)
        })
        .collect();
    Grid::from_parts(shape.to_vec(), data)
}

/// Full-resolution binary mask with visibility probability `tau_keep` per lattice cell.
pub fn generate_mask(
    shape: &[usize],
    cell: u32,
    tau_keep: f64,
    rng: &mut RngStream,
) -> Result<Grid> {
    crate::grid::check_shape(shape)?;
    if cell == 0 {
        return Err(Error::domain("mask cell must be >= 1"));
    }
    if !(0.0..=1.0).contains(&tau_keep) {
        return Err(Error::domain(format!("tau_keep {tau_keep} outside [0, 1]")));
    }
    let lattice = generate_lattice(&lattice_shape(shape, cell), tau_keep, rng);
    Ok(expand_lattice(&lattice, shape, cell))
}

/// Produces the masked views `x ⊙ M_A` and `x ⊙ M_B`.
///
/// Masks come from the child streams `"maskA"` and `"maskB"` and are redrawn
/// together until at least one lattice cell is hidden in both, up to
/// [`MAX_MASK_ATTEMPTS`] times.
pub fn dual_mask(
    x: &Grid,
    cfg: &DegradationConfig,
    rng: &RngStream,
) -> Result<(Grid, Grid, MaskPair)> {
    cfg.validate()?;
    let tau_keep = cfg.tau_keep();
    let lattice = lattice_shape(x.shape(), cfg.mask_cell);
    let mut rng_a = rng.split("maskA")?;
    let mut rng_b = rng.split("maskB")?;
    for attempt in 1..=MAX_MASK_ATTEMPTS {
        let m_a = generate_lattice(&lattice, tau_keep, &mut rng_a);
        let m_b = generate_lattice(&lattice, tau_keep, &mut rng_b);
        let jointly_hidden = m_a
            .data()
            .iter()
            .zip(m_b.data())
            .any(|(a, b)| *a == 0.0 && *b == 0.0);
        if !jointly_hidden {
            continue;
        }
        let x_a = x.multiply(&expand_lattice(&m_a, x.shape(), cfg.mask_cell))?;
        let x_b = x.multiply(&expand_lattice(&m_b, x.shape(), cfg.mask_cell))?;
        return Ok((
            x_a,
            x_b,
            MaskPair {
                m_a,
                m_b,
                cell: cfg.mask_cell,
                tau_keep,
                attempts: attempt,
            },
        ));
    }
    Err(Error::DegenerateMask {
        attempts: MAX_MASK_ATTEMPTS,
    })
}
