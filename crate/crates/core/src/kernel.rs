//! Capillary convolution kernel: even, nonnegative, unit mass.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

/// Convolution kernel for the nonlocal capillarity term `D[rho] = phi*rho - rho`.
///
/// `spectral_hat` holds the continuum-normalized transform
/// `phi_hat(xi) = integral phi(x) e^{-i xi.x} dx`, so convolution is
/// coefficient-wise multiplication by `phi_hat` and `phi_hat(0) = 1`.
#[derive(Clone, Debug)]
pub struct CapillaryKernel {
    samples: SpectralField,
    spectral_hat: Vec<f64>,
    sup_hat: f64,
}

impl CapillaryKernel {
    /// Build from physical samples; validates mass, symmetry and sign.
    pub fn from_samples(samples: SpectralField) -> Result<Self> {
        let grid = samples.grid().clone();
        let mass = samples.values().iter().sum::<f64>() * grid.cell_volume();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(CoreError::InvalidParams(format!(
                "kernel mass {mass:.12} violates `integral phi = 1` within 1e-10"
            )));
        }
        if samples.values().iter().any(|&v| v < -1e-12) {
            return Err(CoreError::InvalidParams(
                "kernel must satisfy phi >= 0 pointwise".into(),
            ));
        }
        let sym = evenness_defect(&samples);
        if sym > 1e-12 {
            return Err(CoreError::InvalidParams(format!(
                "kernel must be even: phi(-x) = phi(x) defect {sym:.3e}"
            )));
        }
        let volume = grid.period().powi(grid.dims() as i32);
        let mut spectral_hat = Vec::with_capacity(grid.len());
        let mut max_imag = 0.0f64;
        for c in samples.coeffs() {
            let hat = c * volume;
            max_imag = max_imag.max(hat.im.abs());
            spectral_hat.push(hat.re);
        }
        if max_imag > 1e-10 {
            return Err(CoreError::InvalidParams(format!(
                "kernel transform must be real (even kernel); imaginary residue {max_imag:.3e}"
            )));
        }
        let sup_hat = spectral_hat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(CapillaryKernel {
            samples,
            spectral_hat,
            sup_hat,
        })
    }

    /// Periodized Gaussian of width `sigma`, renormalized to unit discrete mass.
    pub fn gaussian(grid: &Arc<Grid>, sigma: f64) -> Result<Self> {
        assert!(sigma > 0.0);
        let period = grid.period();
        let dims = grid.dims();
        // Center at the origin; sum enough periodic images for full accuracy.
        let images = (8.0 * sigma / period).ceil() as i64 + 3;
        let raw = SpectralField::from_fn(grid, |x| {
            let mut total = 0.0;
            let mut accum = |r2: f64| total += (-r2 / (2.0 * sigma * sigma)).exp();
            match dims {
                1 => {
                    for mx in -images..=images {
                        let dx = shortest(x[0], mx, period);
                        accum(dx * dx);
                    }
                }
                2 => {
                    for mx in -images..=images {
                        let dx = shortest(x[0], mx, period);
                        for my in -images..=images {
                            let dy = shortest(x[1], my, period);
                            accum(dx * dx + dy * dy);
                        }
                    }
                }
                _ => {
                    for mx in -images..=images {
                        let dx = shortest(x[0], mx, period);
                        for my in -images..=images {
                            let dy = shortest(x[1], my, period);
                            for mz in -images..=images {
                                let dz = shortest(x[2], mz, period);
                                accum(dx * dx + dy * dy + dz * dz);
                            }
                        }
                    }
                }
            }
            total
        });
        let mass = raw.values().iter().sum::<f64>() * grid.cell_volume();
        Self::from_samples(raw.scale(1.0 / mass))
    }

    /// Dirac surrogate: `phi_hat = 1` on the whole resolved band, so
    /// convolution is the identity on band-limited fields.
    pub fn dirac(grid: &Arc<Grid>) -> Self {
        let mut coeffs = vec![Complex64::default(); grid.len()];
        let volume = grid.period().powi(grid.dims() as i32);
        for c in coeffs.iter_mut() {
            *c = Complex64::new(1.0 / volume, 0.0);
        }
        let samples = SpectralField::from_coeffs_unchecked(grid, coeffs);
        let spectral_hat = vec![1.0; grid.len()];
        CapillaryKernel {
            samples,
            spectral_hat,
            sup_hat: 1.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.samples.grid()
    }

    pub fn samples(&self) -> &SpectralField {
        &self.samples
    }

    /// `phi_hat` at the lattice point `flat`.
    #[inline]
    pub fn hat(&self, flat: usize) -> f64 {
        self.spectral_hat[flat]
    }

    pub fn sup_hat(&self) -> f64 {
        self.sup_hat
    }

    /// `phi_hat` evaluated at an arbitrary frequency norm, assuming the
    /// kernel is radial (true for the Gaussian default). Used by the
    /// symbol-eigenvalue oracle.
    pub fn hat_radial(&self, r: f64) -> f64 {
        // Nearest-lattice lookup along the first axis would be too coarse;
        // for the Gaussian the transform is analytic. For generic kernels we
        // interpolate linearly in r over the lattice values of axis 0.
        let grid = self.grid();
        let base = grid.box_frequency();
        let idx = r / base;
        let lo = idx.floor() as usize;
        let frac = idx - lo as f64;
        let n = grid.points_per_dim();
        let at = |i: usize| -> f64 {
            if i > n / 2 {
                0.0
            } else {
                let mut pos = [0usize; 3];
                pos[0] = i % n;
                self.spectral_hat[grid.ravel(&pos[..grid.dims()])]
            }
        };
        at(lo) * (1.0 - frac) + at(lo + 1) * frac
    }
}

fn shortest(x: f64, image: i64, period: f64) -> f64 {
    x + image as f64 * period
}

fn evenness_defect(f: &SpectralField) -> f64 {
    let grid = f.grid();
    let n = grid.points_per_dim();
    let scale = f.linf_norm().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for flat in 0..grid.len() {
        let pos = grid.unravel(flat);
        let mut neg = [0usize; 3];
        for ax in 0..grid.dims() {
            neg[ax] = (n - pos[ax]) % n;
        }
        let nflat = grid.ravel(&neg[..grid.dims()]);
        worst = worst.max((f.values()[flat] - f.values()[nflat]).abs());
    }
    worst / scale
}

/// Convolution `phi * f` by spectral multiplication with `phi_hat`.
pub fn convolve_kernel(f: &SpectralField, phi: &CapillaryKernel) -> Result<SpectralField> {
    if !(f.grid() == phi.grid() || Arc::ptr_eq(f.grid(), phi.grid())) {
        return Err(CoreError::GridMismatch);
    }
    let coeffs: Vec<Complex64> = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(flat, c)| c * phi.hat(flat))
        .collect();
    Ok(SpectralField::from_coeffs_unchecked(f.grid(), coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_kernel_invariants() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let phi = CapillaryKernel::gaussian(&g, g.period() / 16.0).unwrap();
        assert!((phi.hat(0) - 1.0).abs() < 1e-12);
        assert!(phi.sup_hat() <= 1.0 + 1e-12);
    }

    #[test]
    fn constant_field_is_preserved() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let phi = CapillaryKernel::gaussian(&g, g.period() / 16.0).unwrap();
        let c = SpectralField::constant(&g, 3.25);
        let out = convolve_kernel(&c, &phi).unwrap();
        assert!(out.sub(&c).linf_norm() < 1e-10);
    }

    #[test]
    fn dirac_kernel_is_identity_on_band() {
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let phi = CapillaryKernel::dirac(&g);
        let f = SpectralField::from_fn(&g, |x| (3.0 * x[0]).sin() + 0.2);
        let out = convolve_kernel(&f, &phi).unwrap();
        assert!(out.sub(&f).linf_norm() < 1e-12);
    }

    #[test]
    fn gaussian_single_mode_matches_analytic_transform() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let sigma = g.period() / 16.0;
        let phi = CapillaryKernel::gaussian(&g, sigma).unwrap();
        let k = 3.0;
        let f = SpectralField::from_fn(&g, |x| (k * x[0]).cos());
        let out = convolve_kernel(&f, &phi).unwrap();
        let expect = (-(sigma * k).powi(2) / 2.0).exp();
        let got = out.values()[0] / f.values()[0];
        assert!(
            (got - expect).abs() < 1e-10,
            "phi_hat({k}) = {got}, analytic {expect}"
        );
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let g1 = make_grid(1, 32, 2.0 * PI).unwrap();
        let g2 = make_grid(1, 64, 2.0 * PI).unwrap();
        let phi = CapillaryKernel::gaussian(&g1, g1.period() / 16.0).unwrap();
        let f = SpectralField::zero(&g2);
        assert!(matches!(
            convolve_kernel(&f, &phi),
            Err(CoreError::GridMismatch)
        ));
    }
}
