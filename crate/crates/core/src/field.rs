//! Real scalar/vector fields on a periodic grid with physical and spectral views.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::grid::Grid;

/// Relative tolerance for the Hermitian-symmetry and real-part checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Real scalar field carrying both its physical samples and its Fourier
/// coefficients. The two views are kept consistent at construction; all
/// operations treat the field as an immutable value.
///
/// Normalization: `f(x) = sum_k coeff[k] * exp(i xi_k . x)`, so a pure mode
/// `exp(i xi_k . x)` has coefficient 1 at `k` (and its conjugate at `-k`).
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("linf", &self.linf_norm())
            .finish()
    }
}

impl SpectralField {
    pub fn zero(grid: &Arc<Grid>) -> Self {
        SpectralField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        let mut coeffs = vec![Complex64::default(); grid.len()];
        coeffs[0] = Complex64::new(c, 0.0);
        SpectralField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
            coeffs,
        }
    }

    /// Build from physical samples; the spectral view is computed by FFT.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        let mut coeffs: Vec<Complex64> =
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.fft_forward(&mut coeffs);
        let scale = 1.0 / grid.len() as f64;
        for c in coeffs.iter_mut() {
            *c *= scale;
        }
        SpectralField {
            grid: grid.clone(),
            values,
            coeffs,
        }
    }

    /// Sample a function of the physical coordinates.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..grid.dims()])
            })
            .collect();
        Self::from_values(grid, values)
    }

    /// Build from Fourier coefficients. Checks Hermitian symmetry so the
    /// physical view is real up to [`HERMITIAN_TOL`].
    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        assert_eq!(coeffs.len(), grid.len());
        let f = Self::from_coeffs_unchecked(grid, coeffs);
        f.check_hermitian()?;
        Ok(f)
    }

    /// Build from coefficients, dropping any imaginary residue in the
    /// physical view without checking. Internal fast path for multiplier
    /// outputs that are Hermitian by construction.
    pub(crate) fn from_coeffs_unchecked(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        let mut work = coeffs.clone();
        grid.fft_inverse(&mut work);
        let values: Vec<f64> = work.iter().map(|c| c.re).collect();
        SpectralField {
            grid: grid.clone(),
            values,
            coeffs,
        }
    }

    /// Single real mode `amp * cos(xi_k . x + phase)` from an integer lattice vector.
    pub fn mode(grid: &Arc<Grid>, k: &[i64], amp: f64, phase: f64) -> Self {
        let n = grid.points_per_dim() as i64;
        let mut idx = [0usize; 3];
        for (ax, &ki) in k.iter().enumerate() {
            let wrapped = ki.rem_euclid(n) as usize;
            idx[ax] = wrapped;
        }
        let flat = grid.ravel(&idx[..grid.dims().max(k.len())]);
        let mut coeffs = vec![Complex64::default(); grid.len()];
        // cos(a+p) = (e^{i p} e^{i a} + e^{-i p} e^{-i a}) / 2
        let half = 0.5 * amp * Complex64::new(phase.cos(), phase.sin());
        coeffs[flat] += half;
        let neg = grid.ravel(&{
            let mut nidx = [0usize; 3];
            for (ax, &ki) in k.iter().enumerate() {
                nidx[ax] = (-ki).rem_euclid(n) as usize;
            }
            nidx
        }[..grid.dims().max(k.len())]);
        coeffs[neg] += half.conj();
        Self::from_coeffs_unchecked(grid, coeffs)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mean value over the torus (the `xi = 0` coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Copy with the mean mode removed.
    pub fn without_mean(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = Complex64::default();
        Self::from_coeffs_unchecked(&self.grid, coeffs)
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `L^p` norm by grid quadrature; `p = infinity` is the grid max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_of_samples(&self.values, p, self.grid.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// `L^2` inner product by grid quadrature.
    pub fn inner(&self, other: &Self) -> f64 {
        assert!(self.same_grid(other));
        let w = self.grid.cell_volume();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * w
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    fn check_hermitian(&self) -> Result<()> {
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |m, c| m.max(c.norm()))
            .max(f64::MIN_POSITIVE);
        let n = self.grid.points_per_dim();
        let mut worst = 0.0f64;
        for flat in 0..self.grid.len() {
            let pos = self.grid.unravel(flat);
            let mut nidx = [0usize; 3];
            for ax in 0..self.grid.dims() {
                nidx[ax] = (n - pos[ax]) % n;
            }
            let nflat = self.grid.ravel(&nidx[..self.grid.dims()]);
            let diff = (self.coeffs[flat] - self.coeffs[nflat].conj()).norm();
            worst = worst.max(diff);
        }
        if worst / scale > HERMITIAN_TOL {
            return Err(CoreError::Format(format!(
                "coefficients are not Hermitian-symmetric: relative defect {:.3e}",
                worst / scale
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.same_grid(other));
        SpectralField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_grid(other));
        SpectralField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        SpectralField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Pointwise product on the grid (aliased; see [`product_dealiased`]).
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        assert!(self.same_grid(other));
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Self::from_values(&self.grid, values)
    }

    /// Pointwise composition `g(f(x))`, aliased.
    pub fn compose(&self, g: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|&v| g(v)).collect();
        Self::from_values(&self.grid, values)
    }

    /// Round-trip defect `||ifft(fft(f)) - f||_inf / ||f||_inf`.
    pub fn roundtrip_defect(&self) -> f64 {
        let back = Self::from_values(&self.grid, self.values.clone());
        let again = Self::from_coeffs_unchecked(&self.grid, back.coeffs.clone());
        let denom = self.linf_norm().max(f64::MIN_POSITIVE);
        self.values
            .iter()
            .zip(&again.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / denom
    }
}

fn lp_of_samples(values: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else if (p - 2.0).abs() < 1e-14 {
        (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
    } else if (p - 1.0).abs() < 1e-14 {
        values.iter().map(|v| v.abs()).sum::<f64>() * cell
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// Vector field: one [`SpectralField`] per spatial component.
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: Vec<SpectralField>,
}

impl VectorField {
    pub fn new(comps: Vec<SpectralField>) -> Self {
        assert!(!comps.is_empty());
        assert!(comps.iter().all(|c| c.same_grid(&comps[0])));
        VectorField { comps }
    }

    pub fn zero(grid: &Arc<Grid>) -> Self {
        VectorField {
            comps: (0..grid.dims()).map(|_| SpectralField::zero(grid)).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.comps[0].grid()
    }

    pub fn dims(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, i: usize) -> &SpectralField {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[SpectralField] {
        &self.comps
    }

    pub fn add(&self, other: &Self) -> Self {
        VectorField::new(
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        VectorField::new(
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.sub(b))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        VectorField::new(self.comps.iter().map(|c| c.scale(s)).collect())
    }

    /// Grid max of the pointwise Euclidean magnitude.
    pub fn linf_norm(&self) -> f64 {
        let grid = self.grid();
        (0..grid.len())
            .map(|i| {
                self.comps
                    .iter()
                    .map(|c| c.values()[i] * c.values()[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max)
    }

    /// `L^p` norm of the pointwise magnitude.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if (p - 2.0).abs() < 1e-14 {
            return (self.comps.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>()).sqrt();
        }
        let grid = self.grid();
        let mags: Vec<f64> = (0..grid.len())
            .map(|i| {
                self.comps
                    .iter()
                    .map(|c| c.values()[i] * c.values()[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        lp_of_samples(&mags, p, grid.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }
}

/// Per-axis cutoff of the 2/3 dealiasing rule: keep `|k_i| <= floor(n/3)`.
pub fn dealias_cutoff(grid: &Grid) -> i64 {
    (grid.points_per_dim() / 3) as i64
}

/// Zero every coefficient with any `|k_i|` beyond the 2/3-rule cutoff
/// (this includes Nyquist).
pub fn dealias(f: &SpectralField) -> SpectralField {
    let grid = f.grid().clone();
    let cut = dealias_cutoff(&grid);
    let mut coeffs = f.coeffs().to_vec();
    for (flat, c) in coeffs.iter_mut().enumerate() {
        let pos = grid.unravel(flat);
        for ax in 0..grid.dims() {
            if grid.signed_index(pos[ax]).abs() > cut {
                *c = Complex64::default();
                break;
            }
        }
    }
    SpectralField::from_coeffs_unchecked(&grid, coeffs)
}

/// Product with the 2/3 rule applied to both inputs and the output, so the
/// retained band is alias-free for quadratic nonlinearities.
pub fn product_dealiased(a: &SpectralField, b: &SpectralField) -> SpectralField {
    dealias(&dealias(a).pointwise_mul(&dealias(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn roundtrip_is_tight() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| (x[0].sin() + 0.3 * (2.0 * x[1]).cos()).exp());
        assert!(f.roundtrip_defect() < 1e-12);
    }

    #[test]
    fn mode_has_unit_coefficient() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        let f = SpectralField::mode(&g, &[3], 2.0, 0.0);
        // 2 cos(3x) -> coefficient 1 at k = 3 and k = -3.
        assert!((f.coeffs()[3] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        assert!((f.coeffs()[13] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        let expect = SpectralField::from_fn(&g, |x| 2.0 * (3.0 * x[0]).cos());
        assert!(f.sub(&expect).linf_norm() < 1e-12);
    }

    #[test]
    fn parseval_l2() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| x[0].sin() + 0.5 * (5.0 * x[0]).cos());
        let spectral: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
            * g.period().powi(g.dims() as i32);
        assert!((f.l2_norm().powi(2) - spectral).abs() < 1e-12);
    }

    #[test]
    fn dealias_product_of_low_modes_is_exact() {
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let a = SpectralField::mode(&g, &[2], 1.0, 0.0);
        let b = SpectralField::mode(&g, &[3], 1.0, 0.0);
        let p = product_dealiased(&a, &b);
        // cos(2x)cos(3x) = (cos 5x + cos x)/2, all within the cutoff 10.
        let expect = SpectralField::from_fn(&g, |x| {
            0.5 * ((5.0 * x[0]).cos() + x[0].cos())
        });
        assert!(p.sub(&expect).linf_norm() < 1e-12);
    }

    #[test]
    fn non_hermitian_coeffs_rejected() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let mut coeffs = vec![Complex64::default(); 8];
        coeffs[1] = Complex64::new(0.0, 1.0);
        assert!(SpectralField::from_coeffs(&g, coeffs).is_err());
    }
}
