//! Exact/spectral evolution of the linearized acoustic system
//!
//! ```text
//! dq/dt + v.grad q + Lambda d                                        = F
//! dd/dt + v.grad d - nu Lap d - delta Lambda q + kappa Lambda(phi*q) = G
//! ```
//!
//! Each Fourier mode of the free system evolves by the exact exponential of
//! the 2x2 symbol; advection and forcing are handled by a Lawson
//! (integrating-factor) midpoint step.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{product_dealiased, SpectralField, VectorField};
use crate::grid::Grid;
use crate::kernel::CapillaryKernel;
use crate::multiplier::{fourier_multiplier, MultiplierSymbol};

/// Linearized coefficients of the acoustic system.
///
/// `nu = 2 mu + lambda` must be positive and the effective sound-speed
/// coefficient `delta - kappa * sup |phi_hat|` must stay above `gap_floor`.
#[derive(Clone)]
pub struct LinearParams {
    pub mu_bar: f64,
    pub lambda_bar: f64,
    pub delta_bar: f64,
    pub kappa_bar: f64,
    pub kernel: CapillaryKernel,
    /// Third-order capillary regularization coefficient (the `1/n` term of
    /// the pressure-less Korteweg approximation); 0 disables it.
    pub kappa_reg: f64,
    /// Required lower bound `c` in `delta - kappa ||phi_hat||_inf >= c > 0`.
    pub gap_floor: f64,
}

impl LinearParams {
    pub fn new(
        mu_bar: f64,
        lambda_bar: f64,
        delta_bar: f64,
        kappa_bar: f64,
        kernel: CapillaryKernel,
    ) -> Result<Self> {
        let p = LinearParams {
            mu_bar,
            lambda_bar,
            delta_bar,
            kappa_bar,
            kernel,
            kappa_reg: 0.0,
            gap_floor: 1e-8,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kappa_reg(mut self, kappa_reg: f64) -> Self {
        self.kappa_reg = kappa_reg;
        self
    }

    pub fn nu_bar(&self) -> f64 {
        2.0 * self.mu_bar + self.lambda_bar
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu_bar() > 0.0) {
            return Err(CoreError::InvalidParams(format!(
                "nu = 2 mu + lambda = {:.6} violates `nu > 0`",
                self.nu_bar()
            )));
        }
        let gap = self.delta_bar - self.kappa_bar * self.kernel.sup_hat();
        if !(gap >= self.gap_floor) {
            return Err(CoreError::InvalidParams(format!(
                "delta - kappa ||phi_hat||_Linf = {gap:.6} violates `delta - kappa ||phi_hat||_Linf >= c > 0` (c = {})",
                self.gap_floor
            )));
        }
        // Re phi_hat(xi) <= sup_hat must hold on the whole lattice.
        let grid = self.kernel.grid();
        for flat in 0..grid.len() {
            if self.kernel.hat(flat) > self.kernel.sup_hat() + 1e-14 {
                return Err(CoreError::InvalidParams(
                    "kernel sup_hat is not an upper bound of phi_hat".into(),
                ));
            }
        }
        if self.kappa_reg < 0.0 {
            return Err(CoreError::InvalidParams(
                "kappa_reg must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Effective stiffness coefficient `delta - kappa phi_hat(xi)` at a mode.
    #[inline]
    pub fn delta_eff(&self, flat: usize) -> f64 {
        self.delta_bar - self.kappa_bar * self.kernel.hat(flat)
    }

    /// The 2x2 symbol `M(xi)` acting on `(q_hat, d_hat)`:
    /// `q' = -sigma d`, `d' = (delta_eff sigma + kappa_reg sigma^3) q - nu sigma^2 d`.
    #[inline]
    pub fn symbol(&self, sigma: f64, delta_eff: f64) -> [[f64; 2]; 2] {
        [
            [0.0, -sigma],
            [
                delta_eff * sigma + self.kappa_reg * sigma.powi(3),
                -self.nu_bar() * sigma * sigma,
            ],
        ]
    }
}

/// Eigenvalues of a real 2x2 matrix.
pub fn eigenvalues_2x2(m: [[f64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let h = 0.5 * tr;
    let disc = Complex64::new(h * h - det, 0.0).sqrt();
    (Complex64::new(h, 0.0) + disc, Complex64::new(h, 0.0) - disc)
}

/// Exact matrix exponential `exp(t M)` of a real 2x2 matrix.
///
/// `exp(tM) = e^{th} (cosh(tD) I + sinh(tD)/D (M - h I))` with `h = tr/2`
/// and `D = sqrt(h^2 - det)`, evaluated in complex arithmetic so the
/// oscillatory case needs no branching.
pub fn expm_2x2(m: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let h = 0.5 * tr;
    let d = Complex64::new(h * h - det, 0.0).sqrt();
    let td = d * t;
    let (cosh, sinh_over_d) = if td.norm() < 1e-6 {
        // cosh(x) ~ 1 + x^2/2, sinh(x)/x ~ 1 + x^2/6 for small x.
        let x2 = td * td;
        (
            Complex64::new(1.0, 0.0) + 0.5 * x2 + x2 * x2 / 24.0,
            t * (Complex64::new(1.0, 0.0) + x2 / 6.0 + x2 * x2 / 120.0),
        )
    } else {
        (td.cosh(), td.sinh() / d)
    };
    let scale = (t * h).exp();
    let mut out = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 } else { 0.0 };
            let v = cosh * id + sinh_over_d * (m[i][j] - h * id);
            out[i][j] = scale * v.re;
        }
    }
    out
}

/// State of the acoustic subsystem. `omega` carries the incompressible part
/// when the caller tracks it (it decouples into a heat equation).
#[derive(Clone)]
pub struct AcousticState {
    pub q: SpectralField,
    pub d: SpectralField,
    pub omega: Option<crate::multiplier::AntisymmetricField>,
}

impl AcousticState {
    pub fn new(q: SpectralField, d: SpectralField) -> Self {
        assert!(q.same_grid(&d));
        AcousticState { q, d, omega: None }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.q.grid()
    }

    pub fn zero(grid: &Arc<Grid>) -> Self {
        AcousticState::new(SpectralField::zero(grid), SpectralField::zero(grid))
    }
}

/// Time-sampled acoustic states.
pub struct AcousticTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<AcousticState>,
    /// Forcing norms `(||F||_{B~^{s-1,s}}, ||G||_{B^{s-1}})` are only known
    /// to the driver; kept None for free runs.
    pub forcing_samples: Option<Vec<(SpectralField, SpectralField)>>,
}

impl AcousticTrajectory {
    pub fn q_series(&self) -> crate::chemin::TrajectorySeries {
        crate::chemin::TrajectorySeries::new(
            self.times.clone(),
            self.states.iter().map(|s| s.q.clone()).collect(),
        )
        .expect("nonempty")
    }

    pub fn d_series(&self) -> crate::chemin::TrajectorySeries {
        crate::chemin::TrajectorySeries::new(
            self.times.clone(),
            self.states.iter().map(|s| s.d.clone()).collect(),
        )
        .expect("nonempty")
    }

    pub fn end_state(&self) -> &AcousticState {
        self.states.last().expect("nonempty")
    }
}

/// Per-mode propagators of the free system for a fixed step.
pub struct AcousticPropagator {
    grid: Arc<Grid>,
    /// Row-major 2x2 per mode; identity on Nyquist/origin rows.
    mats: Vec<[[f64; 2]; 2]>,
}

impl AcousticPropagator {
    pub fn build(grid: &Arc<Grid>, params: &LinearParams, dt: f64) -> Self {
        let mats: Vec<[[f64; 2]; 2]> = (0..grid.len())
            .map(|flat| {
                if flat == 0 || grid.touches_nyquist(flat) {
                    [[1.0, 0.0], [0.0, 1.0]]
                } else {
                    let sigma = grid.freq_norm(flat);
                    expm_2x2(params.symbol(sigma, params.delta_eff(flat)), dt)
                }
            })
            .collect();
        AcousticPropagator {
            grid: grid.clone(),
            mats,
        }
    }

    /// Advance `(q_hat, d_hat)` coefficient vectors in place.
    pub fn apply(&self, q: &mut [Complex64], d: &mut [Complex64]) {
        for (flat, m) in self.mats.iter().enumerate() {
            let (qc, dc) = (q[flat], d[flat]);
            q[flat] = m[0][0] * qc + m[0][1] * dc;
            d[flat] = m[1][0] * qc + m[1][1] * dc;
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
}

/// Forcing hook for [`evolve_linear`]; returns `(F, G)` at a given time.
pub type LinearForcing<'a> = Option<&'a dyn Fn(f64) -> (SpectralField, SpectralField)>;

/// Evolve the linearized system. With `v = None` and no forcing each mode
/// follows the exact matrix exponential; otherwise a Lawson midpoint step
/// samples advection and forcing along the exact linear flow.
#[allow(clippy::too_many_arguments)]
pub fn evolve_linear(
    init: &AcousticState,
    forcing: LinearForcing,
    v: Option<&VectorField>,
    params: &LinearParams,
    t_end: f64,
    dt: f64,
    store_every: usize,
) -> Result<AcousticTrajectory> {
    params.validate()?;
    assert!(dt > 0.0 && t_end >= 0.0);
    let grid = init.grid().clone();
    if let Some(v) = v {
        let vmax = v.linf_norm();
        let bound = grid.dx() / vmax.max(f64::MIN_POSITIVE);
        if dt > bound {
            return Err(CoreError::CflViolation { dt, bound });
        }
    }

    let steps = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let full = AcousticPropagator::build(&grid, params, dt);
    let half = AcousticPropagator::build(&grid, params, 0.5 * dt);

    let mut qc = init.q.coeffs().to_vec();
    let mut dc = init.d.coeffs().to_vec();

    let store = store_every.max(1);
    let mut times = vec![0.0];
    let mut states = vec![init.clone()];
    let mut forcing_samples = forcing.map(|f| {
        let (f0, g0) = f(0.0);
        vec![(f0, g0)]
    });

    let nonlinear = |qc: &[Complex64], dc: &[Complex64], t: f64| -> (Vec<Complex64>, Vec<Complex64>) {
        let mut nq = vec![Complex64::default(); grid.len()];
        let mut nd = vec![Complex64::default(); grid.len()];
        if let Some(v) = v {
            let qf = SpectralField::from_coeffs_unchecked(&grid, qc.to_vec());
            let df = SpectralField::from_coeffs_unchecked(&grid, dc.to_vec());
            let adv_q = advect(v, &qf).expect("advection");
            let adv_d = advect(v, &df).expect("advection");
            for flat in 0..grid.len() {
                nq[flat] -= adv_q.coeffs()[flat];
                nd[flat] -= adv_d.coeffs()[flat];
            }
        }
        if let Some(f) = forcing {
            let (ff, gf) = f(t);
            for flat in 0..grid.len() {
                nq[flat] += ff.coeffs()[flat];
                nd[flat] += gf.coeffs()[flat];
            }
        }
        (nq, nd)
    };

    let free_run = v.is_none() && forcing.is_none();
    for step in 0..steps {
        let t = step as f64 * dt;
        if free_run {
            full.apply(&mut qc, &mut dc);
        } else {
            // Lawson midpoint:
            //   y_half  = P_half (y_n + dt/2 N(y_n, t))
            //   y_{n+1} = P_full y_n + dt P_half N(y_half, t + dt/2)
            let (nq1, nd1) = nonlinear(&qc, &dc, t);
            let mut qh: Vec<Complex64> = qc
                .iter()
                .zip(&nq1)
                .map(|(y, n)| y + 0.5 * dt * n)
                .collect();
            let mut dh: Vec<Complex64> = dc
                .iter()
                .zip(&nd1)
                .map(|(y, n)| y + 0.5 * dt * n)
                .collect();
            half.apply(&mut qh, &mut dh);
            let (mut nq2, mut nd2) = nonlinear(&qh, &dh, t + 0.5 * dt);
            half.apply(&mut nq2, &mut nd2);
            full.apply(&mut qc, &mut dc);
            for flat in 0..grid.len() {
                qc[flat] += dt * nq2[flat];
                dc[flat] += dt * nd2[flat];
            }
        }
        if (step + 1) % store == 0 || step + 1 == steps {
            let tn = (step + 1) as f64 * dt;
            times.push(tn);
            states.push(AcousticState::new(
                SpectralField::from_coeffs_unchecked(&grid, qc.clone()),
                SpectralField::from_coeffs_unchecked(&grid, dc.clone()),
            ));
            if let (Some(samples), Some(f)) = (forcing_samples.as_mut(), forcing) {
                samples.push(f(tn));
            }
        }
    }

    Ok(AcousticTrajectory {
        times,
        states,
        forcing_samples,
    })
}

/// Dealiased advection `v . grad f`.
pub fn advect(v: &VectorField, f: &SpectralField) -> Result<SpectralField> {
    let mut acc = SpectralField::zero(f.grid());
    for ax in 0..v.dims() {
        let df = fourier_multiplier(f, &MultiplierSymbol::derivative(ax))?;
        acc = acc.add(&product_dealiased(v.comp(ax), &df));
    }
    Ok(acc)
}

/// Optional post-hoc reweighting `q~ = e^{-K V(t)} q` of a trajectory, with
/// `V` the accumulated advection norm supplied by the caller.
pub fn reweight_trajectory(
    traj: &AcousticTrajectory,
    k: f64,
    v_of_t: &dyn Fn(f64) -> f64,
) -> AcousticTrajectory {
    let states = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let w = (-k * v_of_t(t)).exp();
            AcousticState {
                q: s.q.scale(w),
                d: s.d.scale(w),
                omega: s.omega.clone(),
            }
        })
        .collect();
    AcousticTrajectory {
        times: traj.times.clone(),
        states,
        forcing_samples: traj.forcing_samples.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn default_params(grid: &Arc<Grid>, kappa: f64) -> LinearParams {
        let kernel = CapillaryKernel::gaussian(grid, grid.period() / 16.0).unwrap();
        LinearParams::new(0.5, 0.0, 1.0, kappa, kernel).unwrap()
    }

    #[test]
    fn expm_matches_scalar_exponential() {
        let m = [[-2.0, 0.0], [0.0, -3.0]];
        let e = expm_2x2(m, 0.7);
        assert!((e[0][0] - (-1.4f64).exp()).abs() < 1e-14);
        assert!((e[1][1] - (-2.1f64).exp()).abs() < 1e-14);
        assert!(e[0][1].abs() < 1e-15 && e[1][0].abs() < 1e-15);
    }

    #[test]
    fn expm_rotation_block() {
        // M = [[0, -1], [1, 0]] generates a rotation.
        let m = [[0.0, -1.0], [1.0, 0.0]];
        let t = 0.3;
        let e = expm_2x2(m, t);
        assert!((e[0][0] - t.cos()).abs() < 1e-14);
        assert!((e[0][1] + t.sin()).abs() < 1e-14);
        assert!((e[1][0] - t.sin()).abs() < 1e-14);
        assert!((e[1][1] - t.cos()).abs() < 1e-14);
    }

    #[test]
    fn expm_is_a_semigroup_near_degenerate_roots() {
        // Critically damped: h^2 = det.
        let m = [[0.0, -1.0], [1.0, -2.0]];
        let a = expm_2x2(m, 0.5);
        let b = expm_2x2(m, 0.25);
        let mut bb = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    bb[i][j] += b[i][k] * b[k][j];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - bb[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let params = default_params(&g, 0.0);
        let traj =
            evolve_linear(&AcousticState::zero(&g), None, None, &params, 1.0, 0.05, 4).unwrap();
        for s in &traj.states {
            assert_eq!(s.q.linf_norm(), 0.0);
            assert_eq!(s.d.linf_norm(), 0.0);
        }
    }

    #[test]
    fn single_mode_matches_eigen_oracle() {
        // |xi| = 1, kappa = 0: symbol [[0, -1], [delta, -nu]].
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let params = default_params(&g, 0.0);
        let q0 = SpectralField::mode(&g, &[1], 1.0, 0.0);
        let d0 = SpectralField::zero(&g);
        let t_end = 2.0;
        let traj = evolve_linear(
            &AcousticState::new(q0, d0),
            None,
            None,
            &params,
            t_end,
            0.01,
            1000,
        )
        .unwrap();
        // Oracle: diagonalize M, evolve the initial coefficient (1/2, 0)
        // (cos x splits evenly between k = 1 and k = -1).
        let m = params.symbol(1.0, params.delta_bar);
        let e = expm_2x2(m, t_end);
        let qf = traj.end_state().q.coeffs()[1];
        let df = traj.end_state().d.coeffs()[1];
        assert!(
            (qf.re - 0.5 * e[0][0]).abs() < 1e-10,
            "{} vs {}",
            qf.re,
            0.5 * e[0][0]
        );
        assert!((df.re - 0.5 * e[1][0]).abs() < 1e-10);
        // Decay rate equals the max real part of the eigenvalues.
        let (l1, l2) = eigenvalues_2x2(m);
        assert!(l1.re.max(l2.re) < 0.0);
    }

    #[test]
    fn capillarity_shifts_the_decay_rate() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let params = default_params(&g, 0.3);
        // Mode |xi| = 2: effective delta is delta - kappa phi_hat(2).
        let flat = 2usize;
        let sigma = g.freq_norm(flat);
        let m = params.symbol(sigma, params.delta_eff(flat));
        let (l1, l2) = eigenvalues_2x2(m);
        let m0 = params.symbol(sigma, params.delta_bar);
        let (m1, m2) = eigenvalues_2x2(m0);
        // Rates differ because phi_hat(2) > 0.
        assert!((l1.re.max(l2.re) - m1.re.max(m2.re)).abs() > 1e-6);
    }

    #[test]
    fn forced_run_richardson_order_two() {
        // Constant forcing with advection; halving dt must reduce the error
        // by about 4 (order >= 1.9).
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let params = default_params(&g, 0.0);
        let q0 = SpectralField::mode(&g, &[1], 0.3, 0.1);
        let d0 = SpectralField::mode(&g, &[2], 0.2, 0.7);
        let v = VectorField::new(vec![SpectralField::mode(&g, &[1], 0.1, 0.0)]);
        let forcing = |t: f64| {
            let g = make_grid(1, 32, 2.0 * PI).unwrap();
            (
                SpectralField::mode(&g, &[3], (0.5 * t).cos(), 0.0),
                SpectralField::mode(&g, &[1], 0.1, 0.2),
            )
        };
        let run = |dt: f64| {
            evolve_linear(
                &AcousticState::new(q0.clone(), d0.clone()),
                Some(&forcing),
                Some(&v),
                &params,
                1.0,
                dt,
                10_000,
            )
            .unwrap()
        };
        let fine = run(0.0025);
        let mid = run(0.005);
        let coarse = run(0.01);
        let err = |a: &AcousticTrajectory, b: &AcousticTrajectory| {
            a.end_state().q.sub(&b.end_state().q).linf_norm()
                + a.end_state().d.sub(&b.end_state().d).linf_norm()
        };
        let e1 = err(&coarse, &fine);
        let e2 = err(&mid, &fine);
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "measured order {order:.3}");
    }

    #[test]
    fn cfl_violation_detected() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let params = default_params(&g, 0.0);
        let v = VectorField::new(vec![SpectralField::constant(&g, 50.0)]);
        let err = evolve_linear(
            &AcousticState::zero(&g),
            None,
            Some(&v),
            &params,
            1.0,
            0.1,
            1,
        );
        assert!(matches!(err, Err(CoreError::CflViolation { .. })));
    }

    #[test]
    fn invalid_gap_rejected() {
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let kernel = CapillaryKernel::gaussian(&g, g.period() / 16.0).unwrap();
        // delta - kappa * 1 = -0.5 < 0.
        assert!(LinearParams::new(0.5, 0.0, 1.0, 1.5, kernel).is_err());
    }
}
