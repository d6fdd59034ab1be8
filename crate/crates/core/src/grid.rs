//! Periodic grid: sample points, frequency lattice and FFT plans.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};
use num_complex::Complex64;

/// Uniform periodic grid on `[0, L)^dims` with `n` samples per axis.
///
/// The frequency lattice is `xi_k = (2*pi/L) * k` with integer `k`,
/// `|k_i| <= n/2`. The Nyquist index `k_i = -n/2` is representable in the
/// coefficient layout but is zeroed by every multiplier application.
pub struct Grid {
    dims: usize,
    n: usize,
    period: f64,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dims", &self.dims)
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.n == other.n && self.period == other.period
    }
}

/// Construct a grid, validating the preconditions.
pub fn make_grid(dims: usize, points_per_dim: usize, period: f64) -> Result<Arc<Grid>> {
    Grid::new(dims, points_per_dim, period)
}

impl Grid {
    pub fn new(dims: usize, n: usize, period: f64) -> Result<Arc<Grid>> {
        if !(1..=3).contains(&dims) {
            return Err(CoreError::InvalidDimension(dims));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(CoreError::NonPowerOfTwo(n));
        }
        if !(period > 0.0) {
            return Err(CoreError::NonPositivePeriod(period));
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            dims,
            n,
            period,
            fft_fwd,
            fft_inv,
        }))
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of samples (`n^dims`).
    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `L / n`.
    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Quadrature weight of one sample, `(L/n)^dims`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dims as i32)
    }

    /// Smallest nonzero lattice frequency `2*pi/L`.
    pub fn box_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    /// Signed integer frequency index for axis position `i` in `0..n`.
    #[inline]
    pub fn signed_index(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// True if axis position `i` is the Nyquist index `n/2`.
    #[inline]
    pub fn is_nyquist_index(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Decompose a flat index into per-axis positions (x fastest).
    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rem = flat;
        for item in out.iter_mut().take(self.dims) {
            *item = rem % self.n;
            rem /= self.n;
        }
        out
    }

    /// Flat index from per-axis positions.
    #[inline]
    pub fn ravel(&self, idx: &[usize]) -> usize {
        let mut flat = 0usize;
        for ax in (0..self.dims).rev() {
            flat = flat * self.n + idx[ax];
        }
        flat
    }

    /// Wavevector `xi` of the coefficient at `flat`, zero-padded to 3 slots.
    #[inline]
    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let base = self.box_frequency();
        let pos = self.unravel(flat);
        let mut xi = [0.0f64; 3];
        for ax in 0..self.dims {
            xi[ax] = base * self.signed_index(pos[ax]) as f64;
        }
        xi
    }

    /// Euclidean norm of the wavevector at `flat`.
    #[inline]
    pub fn freq_norm(&self, flat: usize) -> f64 {
        let xi = self.wavevector(flat);
        (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()
    }

    /// True if any axis of `flat` sits on the Nyquist row/plane.
    #[inline]
    pub fn touches_nyquist(&self, flat: usize) -> bool {
        let pos = self.unravel(flat);
        (0..self.dims).any(|ax| self.is_nyquist_index(pos[ax]))
    }

    /// Largest usable (non-Nyquist) lattice frequency norm.
    pub fn max_resolved_freq(&self) -> f64 {
        let per_axis = (self.n / 2 - 1) as f64 * self.box_frequency();
        per_axis * (self.dims as f64).sqrt()
    }

    /// Physical coordinates of sample `flat`.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let pos = self.unravel(flat);
        let dx = self.dx();
        let mut x = [0.0f64; 3];
        for ax in 0..self.dims {
            x[ax] = pos[ax] as f64 * dx;
        }
        x
    }

    /// In-place unnormalized forward DFT along every axis.
    pub(crate) fn fft_forward(&self, data: &mut [Complex64]) {
        self.fft_all_axes(data, true);
    }

    /// In-place unnormalized inverse DFT along every axis.
    pub(crate) fn fft_inverse(&self, data: &mut [Complex64]) {
        self.fft_all_axes(data, false);
    }

    fn fft_all_axes(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.len());
        let n = self.n;
        let plan = if forward { &self.fft_fwd } else { &self.fft_inv };
        let mut line = vec![Complex64::default(); n];
        for ax in 0..self.dims {
            let stride = n.pow(ax as u32);
            let lines = self.len() / n;
            for li in 0..lines {
                // Base offset of the li-th line along this axis.
                let block = li / stride;
                let offset = block * stride * n + (li % stride);
                if stride == 1 {
                    plan.process(&mut data[offset..offset + n]);
                } else {
                    for (j, item) in line.iter_mut().enumerate() {
                        *item = data[offset + j * stride];
                    }
                    plan.process(&mut line);
                    for (j, item) in line.iter().enumerate() {
                        data[offset + j * stride] = *item;
                    }
                }
            }
        }
    }
}
