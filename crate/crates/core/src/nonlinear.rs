//! Friedrichs-projected pseudo-spectral evolution of the full nonlinear
//! system in the `(q, d, Omega)` variables.
//!
//! The linear acoustic/heat part is advanced exactly per mode; the
//! nonlinearity (advection, variable-coefficient viscosity, pressure and
//! capillarity remainders) is evaluated pseudo-spectrally with 2/3-rule
//! dealiasing, projected by `J_n`, and integrated with a Lawson midpoint.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{dealias, SpectralField, VectorField};
use crate::friedrichs::FriedrichsLevel;
use crate::grid::Grid;
use crate::laws::PhysicalLaws;
use crate::linear::{AcousticPropagator, LinearParams};
use crate::multiplier::{
    antisymmetric_pairs, gradient, hodge_reconstruct, lambda_inv_curl, lambda_inv_div,
    AntisymmetricField, HodgeSplit,
};

/// Instantaneous solver state in the primitive `(q, u)` variables.
#[derive(Clone)]
pub struct SolutionState {
    pub t: f64,
    pub q: SpectralField,
    pub u: VectorField,
}

impl SolutionState {
    pub fn grid(&self) -> &Arc<Grid> {
        self.q.grid()
    }

    /// Compressible/incompressible split of the velocity.
    pub fn hodge(&self) -> Result<HodgeSplit> {
        crate::multiplier::hodge_split(&self.u)
    }

    /// Minimum of `1 + q` over the grid.
    pub fn min_density_ratio(&self) -> f64 {
        1.0 + self.q.values().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Why a run stopped early.
#[derive(Clone, Copy, Debug)]
pub enum HaltReason {
    Vacuum { t: f64, min_ratio: f64 },
    Cfl { t: f64, dt: f64, bound: f64 },
}

/// Per-sample scalar diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct StepDiagnostics {
    pub t: f64,
    pub mean_q: f64,
    pub min_density_ratio: f64,
    pub max_velocity: f64,
}

/// Result of a nonlinear run. `halted` flags a vacuum/CFL stop with the
/// partial trajectory retained.
pub struct SwTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<SolutionState>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub halted: Option<HaltReason>,
    /// `|mean q(t) - mean q(0)|` maximized over the run, relative to the
    /// initial `L^2` mass of `q` (machine-zero by construction).
    pub mass_drift: f64,
}

impl SwTrajectory {
    pub fn end_state(&self) -> &SolutionState {
        self.states.last().expect("nonempty")
    }

    pub fn q_series(&self) -> crate::chemin::TrajectorySeries {
        crate::chemin::TrajectorySeries::new(
            self.times.clone(),
            self.states.iter().map(|s| s.q.clone()).collect(),
        )
        .expect("nonempty")
    }

    pub fn u_series(&self) -> crate::chemin::VectorTrajectory {
        crate::chemin::VectorTrajectory::new(
            self.times.clone(),
            self.states.iter().map(|s| s.u.clone()).collect(),
        )
        .expect("nonempty")
    }
}

/// Nonlinear right-hand sides of the `(q, d, Omega)` formulation:
///
/// ```text
/// F1 = -q div u - u . grad q
/// G1 = Lambda^{-1} div W,   H1 = Lambda^{-1} curl W,
/// W  = -u . grad u + A(rho, u) - K(rho) grad q
/// ```
///
/// where `A` is the deviation of the true viscous acceleration from its
/// linearization at `rho_bar` and `K` the pressure remainder. All products
/// are dealiased and all outputs projected by `J_n`.
pub fn nonlinear_rhs(
    state: &SolutionState,
    laws: &PhysicalLaws,
    level: &FriedrichsLevel,
) -> Result<(SpectralField, SpectralField, AntisymmetricField)> {
    let (f1, w) = nonlinear_terms(&state.q, &state.u, laws)?;
    let f1 = level.project(&dealias(&f1));
    let w = VectorField::new(
        w.comps()
            .iter()
            .map(|c| level.project(&dealias(c)))
            .collect(),
    );
    let g1 = lambda_inv_div(&w)?;
    let h1 = lambda_inv_curl(&w)?;
    Ok((f1, g1, h1))
}

/// `F1` and the momentum remainder `W` before truncation/projection.
fn nonlinear_terms(
    q: &SpectralField,
    u: &VectorField,
    laws: &PhysicalLaws,
) -> Result<(SpectralField, VectorField)> {
    let grid = q.grid().clone();
    let dims = grid.dims();
    let npts = grid.len();

    let min_ratio = 1.0 + q.values().iter().cloned().fold(f64::INFINITY, f64::min);
    if min_ratio < laws.vacuum.hard_ratio {
        return Err(CoreError::VacuumBreach {
            t: f64::NAN,
            min_ratio,
            guard: laws.vacuum.hard_ratio,
        });
    }

    // Spectral derivatives of the (band-limited) state.
    let grad_q = gradient(q)?;
    let mut grad_u: Vec<VectorField> = Vec::with_capacity(dims); // grad_u[j] = grad of u_j
    for j in 0..dims {
        grad_u.push(gradient(u.comp(j))?);
    }
    let mut div_u = grad_u[0].comp(0).clone();
    for (j, g) in grad_u.iter().enumerate().skip(1) {
        div_u = div_u.add(g.comp(j));
    }

    // F1 = -q div u - u . grad q, assembled pointwise.
    let mut f1_vals = vec![0.0f64; npts];
    for (i, v) in f1_vals.iter_mut().enumerate() {
        let mut adv = 0.0;
        for ax in 0..dims {
            adv += u.comp(ax).values()[i] * grad_q.comp(ax).values()[i];
        }
        *v = -q.values()[i] * div_u.values()[i] - adv;
    }
    let f1 = SpectralField::from_values(&grid, f1_vals);

    // Composition fields on rho = rho_bar (1 + q).
    let mut rho = vec![0.0f64; npts];
    let mut mu_v = vec![0.0f64; npts];
    let mut lam_v = vec![0.0f64; npts];
    let mut inv_rho = vec![0.0f64; npts];
    let mut k_v = vec![0.0f64; npts];
    for i in 0..npts {
        let r = laws.rho_bar * (1.0 + q.values()[i]);
        rho[i] = r;
        mu_v[i] = laws.mu(r);
        lam_v[i] = laws.lambda(r);
        inv_rho[i] = 1.0 / r;
        k_v[i] = laws.k_of_rho(r);
    }

    // Viscous stress: S_ij = mu(rho) (d_i u_j + d_j u_i), T = lambda(rho) div u.
    // (div S)_i + d_i T, then divided by rho.
    let mut s_hat: Vec<Vec<Complex64>> = Vec::with_capacity(dims * dims);
    for i in 0..dims {
        for j in 0..dims {
            if j < i {
                // Symmetric: reuse the (j, i) slot.
                s_hat.push(s_hat[j * dims + i].clone());
                continue;
            }
            let vals: Vec<f64> = (0..npts)
                .map(|p| {
                    mu_v[p] * (grad_u[j].comp(i).values()[p] + grad_u[i].comp(j).values()[p])
                })
                .collect();
            s_hat.push(SpectralField::from_values(&grid, vals).coeffs().to_vec());
        }
    }
    let t_vals: Vec<f64> = (0..npts).map(|p| lam_v[p] * div_u.values()[p]).collect();
    let t_hat = SpectralField::from_values(&grid, t_vals).coeffs().to_vec();

    let mut visc: Vec<SpectralField> = Vec::with_capacity(dims);
    for i in 0..dims {
        let mut coeffs = vec![Complex64::default(); npts];
        for (flat, c) in coeffs.iter_mut().enumerate() {
            if flat == 0 || grid.touches_nyquist(flat) {
                continue;
            }
            let xi = grid.wavevector(flat);
            let mut acc = Complex64::default();
            for j in 0..dims {
                acc += Complex64::i() * xi[j] * s_hat[i * dims + j][flat];
            }
            acc += Complex64::i() * xi[i] * t_hat[flat];
            *c = acc;
        }
        visc.push(SpectralField::from_coeffs_unchecked(&grid, coeffs));
    }

    // Linearized viscous operator mu_bar Lap u + (mu_bar + lambda_bar) grad div u.
    let mu_bar = laws.mu_bar();
    let lam_bar = laws.lambda_bar();
    let grad_div = gradient(&div_u)?;
    let mut w_comps = Vec::with_capacity(dims);
    for i in 0..dims {
        let lap_ui = crate::multiplier::laplacian(u.comp(i))?;
        let mut vals = vec![0.0f64; npts];
        for (p, v) in vals.iter_mut().enumerate() {
            let mut conv = 0.0;
            for j in 0..dims {
                conv += u.comp(j).values()[p] * grad_u[i].comp(j).values()[p];
            }
            let lin_visc =
                mu_bar * lap_ui.values()[p] + (mu_bar + lam_bar) * grad_div.comp(i).values()[p];
            let a_term = visc[i].values()[p] * inv_rho[p] - lin_visc;
            let k_term = k_v[p] * grad_q.comp(i).values()[p];
            *v = -conv + a_term - k_term;
        }
        w_comps.push(SpectralField::from_values(&grid, vals));
    }

    Ok((f1, VectorField::new(w_comps)))
}

/// Direct physical-space evaluation of the primitive-variable system: the
/// oracle route for cross-validating the `(q, d, Omega)` reformulation.
///
/// ```text
/// dq/dt = -div u - div(q u)
/// du/dt = -u.grad u + [div(2 mu(rho) D(u)) + grad(lambda(rho) div u)]/rho
///         - P'(rho) rho_bar grad q / rho + kappa rho_bar grad(phi*q - q)
/// ```
pub fn primitive_rhs(
    state: &SolutionState,
    laws: &PhysicalLaws,
    kernel: &crate::kernel::CapillaryKernel,
) -> Result<(SpectralField, VectorField)> {
    let grid = state.grid().clone();
    let dims = grid.dims();
    let npts = grid.len();
    let q = &state.q;
    let u = &state.u;

    let grad_q = gradient(q)?;
    let mut grad_u: Vec<VectorField> = Vec::with_capacity(dims);
    for j in 0..dims {
        grad_u.push(gradient(u.comp(j))?);
    }
    let mut div_u = grad_u[0].comp(0).clone();
    for (j, g) in grad_u.iter().enumerate().skip(1) {
        div_u = div_u.add(g.comp(j));
    }

    // dq = -div u - u.grad q - q div u.
    let mut dq_vals = vec![0.0f64; npts];
    for (p, v) in dq_vals.iter_mut().enumerate() {
        let mut adv = 0.0;
        for ax in 0..dims {
            adv += u.comp(ax).values()[p] * grad_q.comp(ax).values()[p];
        }
        *v = -div_u.values()[p] - adv - q.values()[p] * div_u.values()[p];
    }
    let dq = dealias(&SpectralField::from_values(&grid, dq_vals));

    // Capillarity: kappa rho_bar grad(phi*q - q).
    let conv_q = crate::kernel::convolve_kernel(q, kernel)?;
    let cap_scalar = conv_q.sub(q);
    let grad_cap = gradient(&cap_scalar)?;

    let mut rho = vec![0.0f64; npts];
    for (p, r) in rho.iter_mut().enumerate() {
        *r = laws.rho_bar * (1.0 + q.values()[p]);
    }

    // Same stress assembly as the primary path (there is only one (SW)
    // viscous term); the oracle differs in never forming A or K.
    let mut s_fields: Vec<Vec<SpectralField>> = Vec::new();
    for i in 0..dims {
        let mut row = Vec::new();
        for j in 0..dims {
            let vals: Vec<f64> = (0..npts)
                .map(|p| {
                    laws.mu(rho[p])
                        * (grad_u[j].comp(i).values()[p] + grad_u[i].comp(j).values()[p])
                })
                .collect();
            row.push(SpectralField::from_values(&grid, vals));
        }
        s_fields.push(row);
    }
    let t_field = SpectralField::from_values(
        &grid,
        (0..npts)
            .map(|p| laws.lambda(rho[p]) * div_u.values()[p])
            .collect(),
    );
    let grad_t = gradient(&t_field)?;

    let mut du_comps = Vec::with_capacity(dims);
    for i in 0..dims {
        let mut visc_i = SpectralField::zero(&grid);
        for j in 0..dims {
            let d =
                crate::multiplier::fourier_multiplier(&s_fields[i][j], &derivative_symbol(j))?;
            visc_i = visc_i.add(&d);
        }
        visc_i = visc_i.add(grad_t.comp(i));
        let mut vals = vec![0.0f64; npts];
        for (p, v) in vals.iter_mut().enumerate() {
            let mut conv = 0.0;
            for j in 0..dims {
                conv += u.comp(j).values()[p] * grad_u[i].comp(j).values()[p];
            }
            let pressure = laws.pressure_prime(rho[p]) * laws.rho_bar
                * grad_q.comp(i).values()[p]
                / rho[p];
            *v = -conv + visc_i.values()[p] / rho[p] - pressure
                + laws.kappa * laws.rho_bar * grad_cap.comp(i).values()[p];
        }
        du_comps.push(dealias(&SpectralField::from_values(&grid, vals)));
    }
    Ok((dq, VectorField::new(du_comps)))
}

fn derivative_symbol(ax: usize) -> crate::multiplier::MultiplierSymbol {
    crate::multiplier::MultiplierSymbol::derivative(ax)
}

/// Options of a nonlinear run.
#[derive(Clone, Copy, Debug)]
pub struct SwOptions {
    pub t_end: f64,
    pub dt: f64,
    pub store_every: usize,
    /// Advective CFL safety factor: the run requires `dt <= cfl * dx / |u|_inf`.
    pub cfl_safety: f64,
}

impl SwOptions {
    pub fn new(t_end: f64, dt: f64, store_every: usize) -> Self {
        SwOptions {
            t_end,
            dt,
            store_every,
            cfl_safety: 0.9,
        }
    }
}

/// Evolve the Friedrichs-projected nonlinear system from `(q0, u0)`.
pub fn evolve_sw(
    q0: &SpectralField,
    u0: &VectorField,
    laws: &PhysicalLaws,
    level: &FriedrichsLevel,
    opts: &SwOptions,
) -> Result<SwTrajectory> {
    let grid = q0.grid().clone();
    let dims = grid.dims();
    laws.validate(dims)?;
    let lin: LinearParams = laws.derive_linear(&grid)?;

    // Initial data: dealiased and J_n-projected.
    let q_init = level.project(&dealias(q0));
    let u_init = level.project_vector(&VectorField::new(
        u0.comps().iter().map(dealias).collect(),
    ));
    let min0 = 1.0
        + q_init
            .values()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
    if min0 < laws.vacuum.halt_ratio {
        return Err(CoreError::VacuumBreach {
            t: 0.0,
            min_ratio: min0,
            guard: laws.vacuum.halt_ratio,
        });
    }

    let steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let dt = opts.t_end / steps as f64;
    let store = opts.store_every.max(1);

    let acoustic_full = AcousticPropagator::build(&grid, &lin, dt);
    let acoustic_half = AcousticPropagator::build(&grid, &lin, 0.5 * dt);
    let mu_bar = lin.mu_bar;
    let heat_factor = |step_dt: f64| -> Vec<f64> {
        (0..grid.len())
            .map(|flat| (-mu_bar * grid.freq_norm(flat).powi(2) * step_dt).exp())
            .collect()
    };
    let heat_full = heat_factor(dt);
    let heat_half = heat_factor(0.5 * dt);

    let split = crate::multiplier::hodge_split(&u_init)?;
    let mut qc = q_init.coeffs().to_vec();
    let mut dc = split.d.coeffs().to_vec();
    let n_slots = antisymmetric_pairs(dims).len();
    let mut oc: Vec<Vec<Complex64>> = (0..n_slots)
        .map(|s| split.omega.comps()[s].coeffs().to_vec())
        .collect();

    let mean_q0 = qc[0].re;
    let q_mass0 = q_init.l2_norm().max(f64::MIN_POSITIVE);

    let make_state = |t: f64,
                      qc: &[Complex64],
                      dc: &[Complex64],
                      oc: &[Vec<Complex64>]|
     -> Result<SolutionState> {
        let q = SpectralField::from_coeffs_unchecked(&grid, qc.to_vec());
        let d = SpectralField::from_coeffs_unchecked(&grid, dc.to_vec());
        let omega = AntisymmetricField::new(
            grid.clone(),
            oc.iter()
                .map(|c| SpectralField::from_coeffs_unchecked(&grid, c.clone()))
                .collect(),
        );
        let u = hodge_reconstruct(&d, &omega, &vec![0.0; dims])?;
        Ok(SolutionState { t, q, u })
    };

    let mut times = vec![0.0];
    let mut states = vec![make_state(0.0, &qc, &dc, &oc)?];
    let mut diagnostics = vec![StepDiagnostics {
        t: 0.0,
        mean_q: mean_q0,
        min_density_ratio: min0,
        max_velocity: u_init.linf_norm(),
    }];
    let mut halted = None;
    let mut mass_drift = 0.0f64;

    'time_loop: for step in 0..steps {
        let t = step as f64 * dt;
        let state = make_state(t, &qc, &dc, &oc)?;
        let min_ratio = state.min_density_ratio();
        if min_ratio < laws.vacuum.halt_ratio {
            halted = Some(HaltReason::Vacuum { t, min_ratio });
            break 'time_loop;
        }
        let umax = state.u.linf_norm();
        let bound = opts.cfl_safety * grid.dx() / umax.max(f64::MIN_POSITIVE);
        if dt > bound {
            if step == 0 {
                return Err(CoreError::CflViolation { dt, bound });
            }
            halted = Some(HaltReason::Cfl { t, dt, bound });
            break 'time_loop;
        }

        // Lawson midpoint around the exact (q, d) / Omega propagators.
        let rhs1 = match nonlinear_rhs(&state, laws, level) {
            Ok(r) => r,
            Err(CoreError::VacuumBreach { min_ratio, guard, .. }) => {
                halted = Some(HaltReason::Vacuum { t, min_ratio });
                let _ = guard;
                break 'time_loop;
            }
            Err(e) => return Err(e),
        };
        let mut qh: Vec<Complex64> = qc
            .iter()
            .zip(rhs1.0.coeffs())
            .map(|(y, n)| y + 0.5 * dt * n)
            .collect();
        let mut dh: Vec<Complex64> = dc
            .iter()
            .zip(rhs1.1.coeffs())
            .map(|(y, n)| y + 0.5 * dt * n)
            .collect();
        let mut oh: Vec<Vec<Complex64>> = oc
            .iter()
            .enumerate()
            .map(|(s, c)| {
                c.iter()
                    .zip(rhs1.2.comps()[s].coeffs())
                    .map(|(y, n)| y + 0.5 * dt * n)
                    .collect()
            })
            .collect();
        acoustic_half.apply(&mut qh, &mut dh);
        for slot in oh.iter_mut() {
            for (flat, c) in slot.iter_mut().enumerate() {
                *c *= heat_half[flat];
            }
        }
        let half_state = make_state(t + 0.5 * dt, &qh, &dh, &oh)?;
        let rhs2 = match nonlinear_rhs(&half_state, laws, level) {
            Ok(r) => r,
            Err(CoreError::VacuumBreach { min_ratio, .. }) => {
                halted = Some(HaltReason::Vacuum { t, min_ratio });
                break 'time_loop;
            }
            Err(e) => return Err(e),
        };
        let mut nq = rhs2.0.coeffs().to_vec();
        let mut nd = rhs2.1.coeffs().to_vec();
        acoustic_half.apply(&mut nq, &mut nd);
        acoustic_full.apply(&mut qc, &mut dc);
        for flat in 0..grid.len() {
            qc[flat] += dt * nq[flat];
            dc[flat] += dt * nd[flat];
        }
        for (s, slot) in oc.iter_mut().enumerate() {
            let n_o = rhs2.2.comps()[s].coeffs();
            for (flat, c) in slot.iter_mut().enumerate() {
                *c = heat_full[flat] * *c + dt * heat_half[flat] * n_o[flat];
            }
        }

        mass_drift = mass_drift.max((qc[0].re - mean_q0).abs() / q_mass0);
        if (step + 1) % store == 0 || step + 1 == steps {
            let tn = (step + 1) as f64 * dt;
            let s = make_state(tn, &qc, &dc, &oc)?;
            diagnostics.push(StepDiagnostics {
                t: tn,
                mean_q: qc[0].re,
                min_density_ratio: s.min_density_ratio(),
                max_velocity: s.u.linf_norm(),
            });
            times.push(tn);
            states.push(s);
        }
    }

    Ok(SwTrajectory {
        times,
        states,
        diagnostics,
        halted,
        mass_drift,
    })
}
