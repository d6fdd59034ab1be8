//! Friedrichs spectral truncation `J_n`: restriction to the frequency
//! annulus `1/n <= |xi| <= n`, turning the PDE into an ODE on band-limited
//! fields.

use std::sync::Arc;

use num_complex::Complex64;

use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;

/// Annulus indicator for one grid. Idempotent by construction; levels are
/// nested on the shared band.
#[derive(Clone)]
pub struct FriedrichsLevel {
    grid: Arc<Grid>,
    n: u32,
    mask: Vec<bool>,
}

impl FriedrichsLevel {
    pub fn new(grid: &Arc<Grid>, n: u32) -> Self {
        assert!(n >= 1);
        let lo = 1.0 / n as f64;
        let hi = n as f64;
        let mask: Vec<bool> = (0..grid.len())
            .map(|flat| {
                if flat == 0 || grid.touches_nyquist(flat) {
                    return false;
                }
                let r = grid.freq_norm(flat);
                (lo..=hi).contains(&r)
            })
            .collect();
        FriedrichsLevel {
            grid: grid.clone(),
            n,
            mask,
        }
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn keeps(&self, flat: usize) -> bool {
        self.mask[flat]
    }

    /// Apply `J_n` to raw coefficients in place.
    pub fn project_coeffs(&self, coeffs: &mut [Complex64]) {
        for (flat, c) in coeffs.iter_mut().enumerate() {
            if !self.mask[flat] {
                *c = Complex64::default();
            }
        }
    }

    pub fn project(&self, f: &SpectralField) -> SpectralField {
        let mut coeffs = f.coeffs().to_vec();
        self.project_coeffs(&mut coeffs);
        SpectralField::from_coeffs_unchecked(&self.grid, coeffs)
    }

    pub fn project_vector(&self, u: &VectorField) -> VectorField {
        VectorField::new(u.comps().iter().map(|c| self.project(c)).collect())
    }
}

/// Spectral mass kept by the level: `sum_{kept} |f_hat|^2`.
pub fn kept_mass(f: &SpectralField, level: &FriedrichsLevel) -> f64 {
    f.coeffs()
        .iter()
        .enumerate()
        .filter(|(flat, _)| level.keeps(*flat))
        .map(|(_, c)| c.norm_sqr())
        .sum()
}

pub fn friedrichs_project(f: &SpectralField, level: &FriedrichsLevel) -> SpectralField {
    level.project(f)
}
