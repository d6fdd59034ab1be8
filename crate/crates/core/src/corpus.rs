//! Seeded random band-limited fields. Coefficients are drawn per lattice
//! vector from a hash of `(seed, k)`, so the same seed produces the same
//! continuum field on every grid resolution that resolves the band.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;

/// Corpus parameters: band `|xi|` in `[band_lo, band_hi]`, amplitude envelope
/// `|xi|^{-gamma}` (the per-block `2^{-gamma l}` profile), overall scale.
#[derive(Clone, Copy, Debug)]
pub struct CorpusSpec {
    pub seed: u64,
    pub gamma: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub amplitude: f64,
}

impl CorpusSpec {
    pub fn new(seed: u64) -> Self {
        CorpusSpec {
            seed,
            gamma: 2.0,
            band_lo: 1.0,
            band_hi: 10.0,
            amplitude: 1.0,
        }
    }

    pub fn with_band(mut self, lo: f64, hi: f64) -> Self {
        self.band_lo = lo;
        self.band_hi = hi;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn mode_rng(seed: u64, component: u64, k: &[i64; 3]) -> ChaCha8Rng {
    let mut h = splitmix64(seed ^ 0x5157_4245_534f_5621);
    h = splitmix64(h ^ component);
    for ki in k {
        h = splitmix64(h ^ (*ki as u64).wrapping_add(0x8000_0000_0000_0000));
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Standard complex Gaussian by Box-Muller on two uniform draws.
fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * theta.cos(), r * theta.sin()) / std::f64::consts::SQRT_2
}

/// Random real scalar field with the given spectrum envelope. Mean-free and
/// Nyquist-free by construction.
pub fn random_field(grid: &Arc<Grid>, spec: &CorpusSpec) -> SpectralField {
    random_component(grid, spec, 0)
}

/// Random vector field: independent components sharing the envelope.
pub fn random_vector(grid: &Arc<Grid>, spec: &CorpusSpec) -> VectorField {
    VectorField::new(
        (0..grid.dims())
            .map(|ax| random_component(grid, spec, 1 + ax as u64))
            .collect(),
    )
}

/// Random divergence-free vector field (2D/3D): a random field projected
/// onto the solenoidal part.
pub fn random_divergence_free(grid: &Arc<Grid>, spec: &CorpusSpec) -> VectorField {
    let raw = random_vector(grid, spec);
    let split = crate::multiplier::hodge_split(&raw).expect("hodge");
    let zero_d = SpectralField::zero(grid);
    crate::multiplier::hodge_reconstruct(&zero_d, &split.omega, &split.mean).expect("reconstruct")
}

fn random_component(grid: &Arc<Grid>, spec: &CorpusSpec, component: u64) -> SpectralField {
    let n = grid.points_per_dim() as i64;
    let dims = grid.dims();
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for flat in 1..grid.len() {
        if grid.touches_nyquist(flat) {
            continue;
        }
        let pos = grid.unravel(flat);
        let mut k = [0i64; 3];
        for ax in 0..dims {
            k[ax] = grid.signed_index(pos[ax]);
        }
        // Visit each conjugate pair once, from its canonical member.
        if !is_canonical(&k, dims) {
            continue;
        }
        let r = grid.freq_norm(flat);
        if r < spec.band_lo || r > spec.band_hi {
            continue;
        }
        let mut rng = mode_rng(spec.seed, component, &k);
        let c = complex_gaussian(&mut rng) * spec.amplitude * r.powf(-spec.gamma);
        coeffs[flat] = c;
        let mut neg = [0usize; 3];
        for ax in 0..dims {
            neg[ax] = (-k[ax]).rem_euclid(n) as usize;
        }
        coeffs[grid.ravel(&neg[..dims])] = c.conj();
    }
    SpectralField::from_coeffs_unchecked(grid, coeffs)
}

/// Canonical member of the conjugate pair `{k, -k}`: positive first nonzero
/// component.
fn is_canonical(k: &[i64; 3], dims: usize) -> bool {
    for ax in (0..dims).rev() {
        if k[ax] != 0 {
            return k[ax] > 0;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn fields_are_real_mean_free_and_seed_stable() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let spec = CorpusSpec::new(7).with_band(1.0, 8.0);
        let a = random_field(&g, &spec);
        let b = random_field(&g, &spec);
        assert_eq!(a.values(), b.values(), "same seed must reproduce bytes");
        assert!(a.mean().abs() < 1e-15);
        assert!(a.linf_norm() > 0.0);
        let c = random_field(&g, &CorpusSpec::new(8).with_band(1.0, 8.0));
        assert!(a.sub(&c).linf_norm() > 0.0, "different seeds must differ");
    }

    #[test]
    fn coefficients_are_resolution_consistent() {
        let coarse = make_grid(1, 64, 2.0 * PI).unwrap();
        let fine = make_grid(1, 256, 2.0 * PI).unwrap();
        let spec = CorpusSpec::new(3).with_band(1.0, 12.0);
        let a = random_field(&coarse, &spec);
        let b = random_field(&fine, &spec);
        for k in 1..=12i64 {
            let ca = a.coeffs()[k as usize];
            let cb = b.coeffs()[k as usize];
            assert!(
                (ca - cb).norm() < 1e-15,
                "mode {k}: {ca} vs {cb} must agree across resolutions"
            );
        }
    }

    #[test]
    fn divergence_free_projection_works() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let spec = CorpusSpec::new(11).with_band(1.0, 8.0);
        let u = random_divergence_free(&g, &spec);
        let div = crate::multiplier::divergence(&u).unwrap();
        assert!(div.l2_norm() < 1e-12 * u.l2_norm().max(1e-300));
    }

    #[test]
    fn band_limits_are_respected() {
        let g = make_grid(1, 128, 2.0 * PI).unwrap();
        let spec = CorpusSpec::new(5).with_band(2.0, 9.0);
        let f = random_field(&g, &spec);
        for (flat, c) in f.coeffs().iter().enumerate() {
            if c.norm() > 0.0 {
                let r = g.freq_norm(flat);
                assert!((2.0..=9.0).contains(&r), "mode at |xi| = {r} out of band");
            }
        }
    }
}
