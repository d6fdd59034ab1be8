//! Fourier multipliers, spectral differential operators and the Hodge split.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;

/// Tolerance below which a mean is treated as zero when a symbol is
/// undefined at the origin.
const MEAN_TOL: f64 = 1e-13;

/// Scalar Fourier multiplier symbol `m(xi)`.
///
/// `at_zero` pins the value at `xi = 0`; `None` makes application to a field
/// with nonzero mean an error (homogeneous symbols of negative degree).
pub struct MultiplierSymbol {
    pub label: String,
    pub homogeneity_degree: Option<f64>,
    pub at_zero: Option<Complex64>,
    eval: Box<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
}

impl MultiplierSymbol {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
        at_zero: Option<Complex64>,
        homogeneity_degree: Option<f64>,
    ) -> Self {
        MultiplierSymbol {
            label: label.into(),
            homogeneity_degree,
            at_zero,
            eval: Box::new(eval),
        }
    }

    pub fn identity() -> Self {
        Self::new(
            "1",
            |_| Complex64::new(1.0, 0.0),
            Some(Complex64::new(1.0, 0.0)),
            Some(0.0),
        )
    }

    /// `Lambda^s = |xi|^s`; for `s > 0` the value at zero is 0, for `s <= 0`
    /// it is undefined.
    pub fn lambda(s: f64) -> Self {
        let at_zero = if s > 0.0 {
            Some(Complex64::default())
        } else {
            None
        };
        Self::new(
            format!("|xi|^{s}"),
            move |xi: &[f64]| {
                let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                Complex64::new(r.powf(s), 0.0)
            },
            at_zero,
            Some(s),
        )
    }

    /// Laplacian symbol `-|xi|^2`.
    pub fn laplacian() -> Self {
        Self::new(
            "-|xi|^2",
            |xi: &[f64]| Complex64::new(-xi.iter().map(|x| x * x).sum::<f64>(), 0.0),
            Some(Complex64::default()),
            Some(2.0),
        )
    }

    /// Partial derivative `i xi_ax`.
    pub fn derivative(ax: usize) -> Self {
        Self::new(
            format!("i xi_{ax}"),
            move |xi: &[f64]| Complex64::new(0.0, xi[ax]),
            Some(Complex64::default()),
            Some(1.0),
        )
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        (self.eval)(xi)
    }
}

/// Apply a scalar symbol to a field. Nyquist rows/planes are zeroed.
pub fn fourier_multiplier(f: &SpectralField, m: &MultiplierSymbol) -> Result<SpectralField> {
    let grid = f.grid().clone();
    if m.at_zero.is_none() && f.mean().abs() > MEAN_TOL {
        return Err(CoreError::UndefinedAtZero(m.label.clone(), f.mean()));
    }
    let coeffs = apply_symbol(&grid, f.coeffs(), |xi| m.eval(xi), m.at_zero);
    Ok(SpectralField::from_coeffs_unchecked(&grid, coeffs))
}

/// Core multiplier loop: `out[k] = m(xi_k) * in[k]`, with the origin handled
/// by `at_zero` and every Nyquist-touching coefficient zeroed.
pub(crate) fn apply_symbol(
    grid: &Arc<Grid>,
    coeffs: &[Complex64],
    m: impl Fn(&[f64]) -> Complex64,
    at_zero: Option<Complex64>,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); coeffs.len()];
    for (flat, out_c) in out.iter_mut().enumerate() {
        if flat == 0 {
            *out_c = at_zero.unwrap_or_default() * coeffs[0];
            continue;
        }
        if grid.touches_nyquist(flat) {
            continue;
        }
        let xi = grid.wavevector(flat);
        *out_c = m(&xi[..grid.dims()]) * coeffs[flat];
    }
    out
}

/// Gradient of a scalar field.
pub fn gradient(f: &SpectralField) -> Result<VectorField> {
    let dims = f.grid().dims();
    let comps = (0..dims)
        .map(|ax| fourier_multiplier(f, &MultiplierSymbol::derivative(ax)))
        .collect::<Result<Vec<_>>>()?;
    Ok(VectorField::new(comps))
}

/// Divergence of a vector field.
pub fn divergence(u: &VectorField) -> Result<SpectralField> {
    let mut acc = SpectralField::zero(u.grid());
    for ax in 0..u.dims() {
        let d = fourier_multiplier(u.comp(ax), &MultiplierSymbol::derivative(ax))?;
        acc = acc.add(&d);
    }
    Ok(acc)
}

/// Scalar Laplacian.
pub fn laplacian(f: &SpectralField) -> Result<SpectralField> {
    fourier_multiplier(f, &MultiplierSymbol::laplacian())
}

/// Antisymmetric curl matrix stored as the components `i < j` in
/// lexicographic order: `(0,1)` in 2D, `(0,1), (0,2), (1,2)` in 3D.
/// In 1D it is empty.
#[derive(Clone, Debug)]
pub struct AntisymmetricField {
    grid: Arc<Grid>,
    comps: Vec<SpectralField>,
}

/// Index pairs `(i, j)` with `i < j` for an antisymmetric matrix in `dims`.
pub fn antisymmetric_pairs(dims: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..dims {
        for j in (i + 1)..dims {
            pairs.push((i, j));
        }
    }
    pairs
}

impl AntisymmetricField {
    pub fn new(grid: Arc<Grid>, comps: Vec<SpectralField>) -> Self {
        assert_eq!(comps.len(), antisymmetric_pairs(grid.dims()).len());
        AntisymmetricField { grid, comps }
    }

    pub fn zero(grid: &Arc<Grid>) -> Self {
        let comps = antisymmetric_pairs(grid.dims())
            .iter()
            .map(|_| SpectralField::zero(grid))
            .collect();
        AntisymmetricField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn comps(&self) -> &[SpectralField] {
        &self.comps
    }

    pub fn l2_norm(&self) -> f64 {
        (self.comps.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>()).sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        AntisymmetricField {
            grid: self.grid.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    /// Entry `(i, j)` with sign; `i == j` gives zero.
    fn entry_coeffs(&self, i: usize, j: usize) -> Option<(usize, f64)> {
        let pairs = antisymmetric_pairs(self.grid.dims());
        if i == j {
            return None;
        }
        let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let k = pairs.iter().position(|&(p, q)| p == a && q == b)?;
        Some((k, sign))
    }
}

/// `Lambda^{-1} curl w` of a vector field `w`, with
/// `(curl w)_{ij} = d_i w_j - d_j w_i`.
pub fn lambda_inv_curl(w: &VectorField) -> Result<AntisymmetricField> {
    let grid = w.grid().clone();
    let pairs = antisymmetric_pairs(grid.dims());
    let mut comps = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let coeffs = combine2(
            &grid,
            w.comp(i).coeffs(),
            w.comp(j).coeffs(),
            |xi, wi, wj| {
                let r = norm(xi);
                if r == 0.0 {
                    return Complex64::default();
                }
                // (i xi_i w_j - i xi_j w_i) / |xi|
                (Complex64::i() * (xi[i] * wj - xi[j] * wi)) / r
            },
        );
        comps.push(SpectralField::from_coeffs_unchecked(&grid, coeffs));
    }
    Ok(AntisymmetricField::new(grid, comps))
}

/// `Lambda^{-1} div Omega` for an antisymmetric matrix field:
/// `(div Omega)_k = sum_j d_j Omega_{jk}`.
pub fn lambda_inv_div_antisym(omega: &AntisymmetricField) -> Result<VectorField> {
    let grid = omega.grid().clone();
    let dims = grid.dims();
    let mut comps = Vec::with_capacity(dims);
    for k in 0..dims {
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for j in 0..dims {
            let Some((slot, sign)) = omega.entry_coeffs(j, k) else {
                continue;
            };
            let source = omega.comps[slot].coeffs();
            for (flat, c) in coeffs.iter_mut().enumerate() {
                if flat == 0 || grid.touches_nyquist(flat) {
                    continue;
                }
                let xi = grid.wavevector(flat);
                let r = norm(&xi[..dims]);
                *c += Complex64::i() * (sign * xi[j] / r) * source[flat];
            }
        }
        comps.push(SpectralField::from_coeffs_unchecked(&grid, coeffs));
    }
    Ok(VectorField::new(comps))
}

/// Compressible/incompressible split `d = Lambda^{-1} div u`,
/// `Omega = Lambda^{-1} curl u`.
///
/// The per-component means of `u` are not representable in `(d, Omega)`;
/// they are returned separately and the reconstruction is
/// `u = -Lambda^{-1} grad d - Lambda^{-1} div Omega + mean`.
pub struct HodgeSplit {
    pub d: SpectralField,
    pub omega: AntisymmetricField,
    pub mean: Vec<f64>,
}

pub fn hodge_split(u: &VectorField) -> Result<HodgeSplit> {
    let mean: Vec<f64> = (0..u.dims()).map(|ax| u.comp(ax).mean()).collect();
    let d = lambda_inv_div(u)?;
    let omega = lambda_inv_curl(u)?;
    Ok(HodgeSplit { d, omega, mean })
}

/// `Lambda^{-1} div w` of a vector field.
pub fn lambda_inv_div(u: &VectorField) -> Result<SpectralField> {
    let grid = u.grid().clone();
    let dims = grid.dims();
    let mut d_coeffs = vec![Complex64::default(); grid.len()];
    for (flat, c) in d_coeffs.iter_mut().enumerate() {
        if flat == 0 || grid.touches_nyquist(flat) {
            continue;
        }
        let xi = grid.wavevector(flat);
        let r = norm(&xi[..dims]);
        let mut acc = Complex64::default();
        for ax in 0..dims {
            acc += Complex64::i() * xi[ax] * u.comp(ax).coeffs()[flat];
        }
        *c = acc / r;
    }
    Ok(SpectralField::from_coeffs_unchecked(&grid, d_coeffs))
}

/// Rebuild `u` from its Hodge data.
pub fn hodge_reconstruct(
    d: &SpectralField,
    omega: &AntisymmetricField,
    mean: &[f64],
) -> Result<VectorField> {
    let grid = d.grid().clone();
    let dims = grid.dims();
    // -Lambda^{-1} grad d
    let mut comps = Vec::with_capacity(dims);
    for ax in 0..dims {
        let coeffs = combine1(&grid, d.coeffs(), |xi, dc| {
            let r = norm(xi);
            if r == 0.0 {
                return Complex64::default();
            }
            -(Complex64::i() * xi[ax] / r) * dc
        });
        comps.push(SpectralField::from_coeffs_unchecked(&grid, coeffs));
    }
    let grad_part = VectorField::new(comps);
    let div_part = lambda_inv_div_antisym(omega)?;
    let mut u = grad_part.sub(&div_part);
    if mean.iter().any(|m| m.abs() > 0.0) {
        let shift = VectorField::new(
            mean.iter()
                .map(|&m| SpectralField::constant(&grid, m))
                .collect(),
        );
        u = u.add(&shift);
    }
    Ok(u)
}

#[inline]
fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn combine1(
    grid: &Arc<Grid>,
    a: &[Complex64],
    f: impl Fn(&[f64], Complex64) -> Complex64,
) -> Vec<Complex64> {
    let dims = grid.dims();
    let mut out = vec![Complex64::default(); a.len()];
    for (flat, c) in out.iter_mut().enumerate() {
        if flat == 0 || grid.touches_nyquist(flat) {
            continue;
        }
        let xi = grid.wavevector(flat);
        *c = f(&xi[..dims], a[flat]);
    }
    out
}

fn combine2(
    grid: &Arc<Grid>,
    a: &[Complex64],
    b: &[Complex64],
    f: impl Fn(&[f64], Complex64, Complex64) -> Complex64,
) -> Vec<Complex64> {
    let dims = grid.dims();
    let mut out = vec![Complex64::default(); a.len()];
    for (flat, c) in out.iter_mut().enumerate() {
        if flat == 0 || grid.touches_nyquist(flat) {
            continue;
        }
        let xi = grid.wavevector(flat);
        *c = f(&xi[..dims], a[flat], b[flat]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn identity_leaves_field_unchanged() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| x[0].sin() * (2.0 * x[1]).cos() + 0.7);
        let out = fourier_multiplier(&f, &MultiplierSymbol::identity()).unwrap();
        assert!(out.sub(&f).linf_norm() < 1e-13);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| x[0].sin());
        let out = fourier_multiplier(&f, &MultiplierSymbol::laplacian()).unwrap();
        assert!(out.add(&f).linf_norm() < 1e-12);
    }

    #[test]
    fn negative_degree_requires_zero_mean() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| 1.0 + x[0].sin());
        let err = fourier_multiplier(&f, &MultiplierSymbol::lambda(-1.0));
        assert!(matches!(err, Err(CoreError::UndefinedAtZero(_, _))));
        let ok = fourier_multiplier(&f.without_mean(), &MultiplierSymbol::lambda(-1.0));
        assert!(ok.is_ok());
    }

    #[test]
    fn gradient_field_is_curl_free() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin());
        let u = gradient(&f).unwrap();
        let split = hodge_split(&u).unwrap();
        assert!(split.omega.l2_norm() < 1e-10 * u.l2_norm().max(1.0));
        let back = hodge_reconstruct(&split.d, &split.omega, &split.mean).unwrap();
        let err = back.sub(&u).l2_norm() / u.l2_norm();
        assert!(err < 1e-10, "reconstruction error {err:.3e}");
    }

    #[test]
    fn divergence_free_field_has_zero_d() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        // u = (sin y, 0) is divergence free.
        let u = VectorField::new(vec![
            SpectralField::from_fn(&g, |x| x[1].sin()),
            SpectralField::zero(&g),
        ]);
        let split = hodge_split(&u).unwrap();
        assert!(split.d.l2_norm() < 1e-12);
        let back = hodge_reconstruct(&split.d, &split.omega, &split.mean).unwrap();
        assert!(back.sub(&u).l2_norm() < 1e-10);
    }
}
