//! Littlewood-Paley dyadic partition and block operators.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

/// Inner radius of the bump support.
pub const ANNULUS_LO: f64 = 0.75;
/// Outer radius of the bump support.
pub const ANNULUS_HI: f64 = 8.0 / 3.0;

/// Smooth step: 1 for `t <= 0`, 0 for `t >= 1`, strictly monotone between.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    b / (a + b)
}

/// Low-pass cutoff `chi`: 1 on `r <= 3/4`, 0 on `r >= 4/3`.
fn chi(r: f64) -> f64 {
    smooth_step((r - ANNULUS_LO) / (4.0 / 3.0 - ANNULUS_LO))
}

/// Radial bump `phi(r) = chi(r/2) - chi(r)`, supported exactly in
/// `[3/4, 8/3]`, telescoping to a partition of unity.
pub fn bump(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Dyadic partition resolved on a grid: block range `[l_min, l_max]` and
/// per-block multiplier masks `phi(2^{-l} |xi|)`.
pub struct DyadicPartition {
    grid: Arc<Grid>,
    l_min: i32,
    l_max: i32,
    /// `masks[b][flat] = phi(2^{-(l_min+b)} |xi_flat|)`, zero at the origin
    /// and on Nyquist rows.
    masks: Vec<Vec<f64>>,
    /// Flat indices with a nonzero mask per block (blocks are sparse).
    support: Vec<Vec<u32>>,
}

/// Resolve the partition for a grid: `l_min`/`l_max` are chosen so every
/// nonzero non-Nyquist lattice frequency is fully covered.
pub fn build_partition(grid: &Arc<Grid>) -> DyadicPartition {
    let r_min = grid.box_frequency();
    let r_max = grid.max_resolved_freq();
    // Block l touches |xi| iff 3/4 <= 2^{-l}|xi| <= 8/3.
    let l_min = (r_min * 3.0 / 8.0).log2().ceil() as i32;
    let l_max = (r_max * 4.0 / 3.0).log2().floor() as i32;
    let blocks = (l_max - l_min + 1) as usize;
    let mut masks = vec![vec![0.0f64; grid.len()]; blocks];
    let mut support = vec![Vec::new(); blocks];
    for flat in 1..grid.len() {
        if grid.touches_nyquist(flat) {
            continue;
        }
        let r = grid.freq_norm(flat);
        for (b, mask) in masks.iter_mut().enumerate() {
            let l = l_min + b as i32;
            let v = bump(r * 2.0f64.powi(-l));
            if v != 0.0 {
                mask[flat] = v;
                support[b].push(flat as u32);
            }
        }
    }
    DyadicPartition {
        grid: grid.clone(),
        l_min,
        l_max,
        masks,
        support,
    }
}

impl DyadicPartition {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn l_min(&self) -> i32 {
        self.l_min
    }

    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        self.l_min..=self.l_max
    }

    pub fn contains(&self, l: i32) -> bool {
        (self.l_min..=self.l_max).contains(&l)
    }

    pub fn mask(&self, l: i32) -> Result<&[f64]> {
        if !self.contains(l) {
            return Err(CoreError::BlockOutOfRange {
                l,
                l_min: self.l_min,
                l_max: self.l_max,
            });
        }
        Ok(&self.masks[(l - self.l_min) as usize])
    }

    /// Lattice points where block `l` has nonzero weight.
    pub fn block_support(&self, l: i32) -> Result<&[u32]> {
        if !self.contains(l) {
            return Err(CoreError::BlockOutOfRange {
                l,
                l_min: self.l_min,
                l_max: self.l_max,
            });
        }
        Ok(&self.support[(l - self.l_min) as usize])
    }

    /// Worst deviation of `sum_l mask_l(xi)` from 1 over the resolved lattice.
    pub fn partition_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for flat in 1..self.grid.len() {
            if self.grid.touches_nyquist(flat) {
                continue;
            }
            let total: f64 = self.masks.iter().map(|m| m[flat]).sum();
            worst = worst.max((total - 1.0).abs());
        }
        worst
    }

    /// Apply the block operator `Delta_l`.
    pub fn dyadic_block(&self, f: &SpectralField, l: i32) -> Result<SpectralField> {
        let mask = self.mask(l)?;
        let support = self.block_support(l)?;
        let mut coeffs = vec![Complex64::default(); self.grid.len()];
        for &flat in support {
            let flat = flat as usize;
            coeffs[flat] = f.coeffs()[flat] * mask[flat];
        }
        Ok(SpectralField::from_coeffs_unchecked(&self.grid, coeffs))
    }

    /// `L^2` norm of `Delta_l f`, computed spectrally (Parseval); avoids the
    /// inverse transform that [`Self::dyadic_block`] performs.
    pub fn block_l2_norm(&self, coeffs: &[Complex64], l: i32) -> Result<f64> {
        let mask = self.mask(l)?;
        let support = self.block_support(l)?;
        let volume = self.grid.period().powi(self.grid.dims() as i32);
        let mut acc = 0.0f64;
        for &flat in support {
            let flat = flat as usize;
            let w = mask[flat];
            acc += w * w * coeffs[flat].norm_sqr();
        }
        Ok((acc * volume).sqrt())
    }

    /// `L^p` norm of `Delta_l f` for general `p` (physical-grid quadrature;
    /// `p = 2` takes the spectral shortcut).
    pub fn block_lp_norm(&self, f: &SpectralField, l: i32, p: f64) -> Result<f64> {
        if (p - 2.0).abs() < 1e-14 {
            return self.block_l2_norm(f.coeffs(), l);
        }
        Ok(self.dyadic_block(f, l)?.lp_norm(p))
    }

    /// Low-frequency cumulative operator `S_l f = sum_{k <= l-1} Delta_k f + mean`.
    pub fn low_pass(&self, f: &SpectralField, l: i32) -> Result<SpectralField> {
        let mut coeffs = vec![Complex64::default(); self.grid.len()];
        coeffs[0] = f.coeffs()[0];
        for (flat, c) in coeffs.iter_mut().enumerate().skip(1) {
            if self.grid.touches_nyquist(flat) {
                continue;
            }
            let r = self.grid.freq_norm(flat);
            let mut total = 0.0;
            for k in self.l_min..=(l - 1).min(self.l_max) {
                total += bump(r * 2.0f64.powi(-k));
            }
            *c = f.coeffs()[flat] * total;
        }
        Ok(SpectralField::from_coeffs_unchecked(&self.grid, coeffs))
    }

    /// Reconstruction defect `||sum_l Delta_l f + mean - f||_inf / ||f||_inf`
    /// over the resolved band (the field must not touch Nyquist rows).
    pub fn reconstruction_defect(&self, f: &SpectralField) -> f64 {
        let mut acc = SpectralField::constant(&self.grid, f.mean());
        for l in self.blocks() {
            acc = acc.add(&self.dyadic_block(f, l).expect("block in range"));
        }
        acc.sub(f).linf_norm() / f.linf_norm().max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn bump_support_is_exact() {
        assert_eq!(bump(0.74), 0.0);
        assert_eq!(bump(8.0 / 3.0 + 1e-9), 0.0);
        assert!(bump(1.0) > 0.0);
        assert!(bump(2.0) > 0.0);
    }

    #[test]
    fn telescoping_partition_of_unity() {
        for &r in &[0.8, 1.0, 3.7, 10.0, 100.0, 127.0] {
            let total: f64 = (-10..=12).map(|l| bump(r * 2.0f64.powi(-l))).sum();
            assert!((total - 1.0).abs() < 1e-14, "r = {r}: {total}");
        }
    }

    #[test]
    fn resolved_range_matches_lattice_1d_256() {
        let g = make_grid(1, 256, 2.0 * PI).unwrap();
        let p = build_partition(&g);
        assert_eq!(p.l_min(), -1);
        assert_eq!(p.l_max(), 7);
        assert!(p.partition_defect() < 1e-12);
    }

    #[test]
    fn adjacent_plus_two_blocks_are_disjoint() {
        let g = make_grid(1, 128, 2.0 * PI).unwrap();
        let p = build_partition(&g);
        for l in p.l_min()..=(p.l_max() - 2) {
            let a = p.mask(l).unwrap();
            let b = p.mask(l + 2).unwrap();
            let overlap: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            assert_eq!(overlap, 0.0, "blocks {l} and {} overlap", l + 2);
        }
    }

    #[test]
    fn out_of_range_block_is_an_error() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let p = build_partition(&g);
        let f = SpectralField::zero(&g);
        assert!(matches!(
            p.dyadic_block(&f, p.l_max() + 1),
            Err(CoreError::BlockOutOfRange { .. })
        ));
    }

    #[test]
    fn single_mode_activates_expected_blocks() {
        let g = make_grid(1, 256, 2.0 * PI).unwrap();
        let p = build_partition(&g);
        let f = SpectralField::mode(&g, &[1], 1.0, 0.0);
        for l in p.blocks() {
            let norm = p.block_l2_norm(f.coeffs(), l).unwrap();
            let weight = bump(2.0f64.powi(-l));
            if weight > 0.0 {
                assert!(norm > 0.0, "block {l} should be active");
            } else {
                assert_eq!(norm, 0.0, "block {l} should be empty");
            }
        }
    }

    #[test]
    fn mean_free_reconstruction() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| {
            (x[0]).sin() + 0.4 * (3.0 * x[0] + 5.0 * x[1]).cos() + 0.1 * (9.0 * x[1]).sin()
        });
        let p = build_partition(&g);
        assert!(p.reconstruction_defect(&f) < 1e-10);
    }
}
