//! Experiments that shadow the well-posedness results: small-data global
//! energy bound, local-time lower bound, stability/uniqueness perturbation
//! runs, linearization-order and truncation-convergence measurements, and
//! the critical-scaling check.

use crate::besov::{besov_norm_vector, hybrid_norm, BesovSpec};
use crate::chemin::trapezoid_weights;
use crate::error::{CoreError, Result};
use crate::field::{SpectralField, VectorField};
use crate::friedrichs::FriedrichsLevel;
use crate::laws::PhysicalLaws;
use crate::linear::{evolve_linear, AcousticState};
use crate::nonlinear::{evolve_sw, SwOptions, SwTrajectory};
use crate::partition::{build_partition, DyadicPartition};

/// Which space measures `u0` in `E(0)`: the theorem statement uses
/// `B^{N/2-1}`, the proof's display uses `B^{N/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialVelocityNorm {
    Critical,     // B^{N/2-1}
    ProofVariant, // B^{N/2}
}

/// Running components of the energy functional
/// `E(t) = ||q||_{Loo_t(B~^{N/2-1,N/2})} + ||q||_{L1_t(B~^{N/2+1,N/2})}
///        + ||u||_{Loo_t(B^{N/2-1})} + ||u||_{L1_t(B^{N/2+1})}`.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub e0: f64,
    pub times: Vec<f64>,
    pub sup_q: Vec<f64>,
    pub int_q: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub int_u: Vec<f64>,
    pub total: Vec<f64>,
}

impl EnergyReport {
    pub fn final_total(&self) -> f64 {
        *self.total.last().unwrap()
    }

    pub fn sup_ratio(&self) -> f64 {
        if self.e0 == 0.0 {
            return 0.0;
        }
        self.total.iter().cloned().fold(0.0, f64::max) / self.e0
    }
}

/// Initial energy `E(0)` of data `(q0, u0)`.
pub fn initial_energy(
    q0: &SpectralField,
    u0: &VectorField,
    part: &DyadicPartition,
    u_norm: InitialVelocityNorm,
) -> Result<f64> {
    let grid = q0.grid();
    let half_n = grid.dims() as f64 / 2.0;
    let q_part = hybrid_norm(q0, &BesovSpec::hybrid(half_n - 1.0, half_n), part)?;
    let exp = match u_norm {
        InitialVelocityNorm::Critical => half_n - 1.0,
        InitialVelocityNorm::ProofVariant => half_n,
    };
    let u_part = besov_norm_vector(u0, &BesovSpec::b(exp), part)?;
    Ok(q_part + u_part)
}

/// Evaluate the energy functional along a nonlinear trajectory.
pub fn energy_functional(
    traj: &SwTrajectory,
    part: &DyadicPartition,
    u_norm: InitialVelocityNorm,
) -> Result<EnergyReport> {
    if traj.states.is_empty() {
        return Err(CoreError::EmptyTrajectory);
    }
    let grid = traj.states[0].grid();
    let half_n = grid.dims() as f64 / 2.0;
    let spec_sup_q = BesovSpec::hybrid(half_n - 1.0, half_n);
    let spec_int_q = BesovSpec::hybrid(half_n + 1.0, half_n);
    let spec_sup_u = BesovSpec::b(half_n - 1.0);
    let spec_int_u = BesovSpec::b(half_n + 1.0);

    let weights = trapezoid_weights(&traj.times);
    let mut sup_q = Vec::with_capacity(traj.times.len());
    let mut int_q = Vec::with_capacity(traj.times.len());
    let mut sup_u = Vec::with_capacity(traj.times.len());
    let mut int_u = Vec::with_capacity(traj.times.len());
    let mut total = Vec::with_capacity(traj.times.len());

    let mut running_sup_q = 0.0f64;
    let mut running_sup_u = 0.0f64;
    let mut running_int_q = 0.0f64;
    let mut running_int_u = 0.0f64;
    for (i, state) in traj.states.iter().enumerate() {
        running_sup_q = running_sup_q.max(hybrid_norm(&state.q, &spec_sup_q, part)?);
        running_sup_u = running_sup_u.max(besov_norm_vector(&state.u, &spec_sup_u, part)?);
        // Running trapezoid integrals; the boundary weight of sample i in
        // the integral over [0, t_i] is half the interior weight.
        running_int_q += weights[i] * hybrid_norm(&state.q, &spec_int_q, part)?;
        running_int_u += weights[i] * besov_norm_vector(&state.u, &spec_int_u, part)?;
        sup_q.push(running_sup_q);
        int_q.push(running_int_q);
        sup_u.push(running_sup_u);
        int_u.push(running_int_u);
        total.push(running_sup_q + running_int_q + running_sup_u + running_int_u);
    }

    let e0 = initial_energy(&traj.states[0].q, &traj.states[0].u, part, u_norm)?;
    Ok(EnergyReport {
        e0,
        times: traj.times.clone(),
        sup_q,
        int_q,
        sup_u,
        int_u,
        total,
    })
}

/// Small-data global-bound experiment: run, track `E(t)/E(0)`, compare with
/// the margin `M`.
pub struct BoundReport {
    pub e0: f64,
    pub sup_ratio: f64,
    pub first_violation: Option<f64>,
    pub halted: bool,
    pub mass_drift: f64,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn global_bound_experiment(
    q0: &SpectralField,
    u0: &VectorField,
    laws: &PhysicalLaws,
    level: &FriedrichsLevel,
    opts: &SwOptions,
    margin: f64,
    part: &DyadicPartition,
    u_norm: InitialVelocityNorm,
) -> Result<(BoundReport, SwTrajectory)> {
    let traj = evolve_sw(q0, u0, laws, level, opts)?;
    let energy = energy_functional(&traj, part, u_norm)?;
    let zero_data = energy.e0 == 0.0;
    let sup_ratio = energy.sup_ratio();
    let mut first_violation = None;
    if !zero_data {
        for (i, &t) in energy.times.iter().enumerate() {
            if energy.total[i] / energy.e0 > margin {
                first_violation = Some(t);
                break;
            }
        }
    }
    let pass = traj.halted.is_none() && first_violation.is_none();
    Ok((
        BoundReport {
            e0: energy.e0,
            sup_ratio,
            first_violation,
            halted: traj.halted.is_some(),
            mass_drift: traj.mass_drift,
            pass,
        },
        traj,
    ))
}

/// How the block exponent inside the local-time bound is read: the
/// dimensionally consistent `2^{2q}` (heat decay) or the literal `e^{2q}`
/// of the displayed theorem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockExponentReading {
    Dyadic,  // 2^{2q}
    Literal, // e^{2q}
}

/// Parameters of the local-time lower bound.
#[derive(Clone, Copy, Debug)]
pub struct LocalTimeParams {
    pub epsilon: f64,
    pub c: f64,
    pub eta: f64,
    pub p: f64,
    pub reading: BlockExponentReading,
}

impl Default for LocalTimeParams {
    fn default() -> Self {
        LocalTimeParams {
            epsilon: 0.1,
            c: 1.0,
            eta: 1.0,
            p: 2.0,
            reading: BlockExponentReading::Dyadic,
        }
    }
}

/// Monotone left side of the time bound at time `t`:
/// `sum_l 2^{l(N/p-1)} ||Delta_l u0||_{L^p} (1 - e^{-c nu t m_l}) / (c nu)`
/// with `m_l = 2^{2l}` or `e^{2l}` by reading.
fn local_bound_lhs(
    block_masses: &[(i32, f64)],
    t: f64,
    c: f64,
    nu: f64,
    weight_exp: f64,
    reading: BlockExponentReading,
) -> f64 {
    block_masses
        .iter()
        .map(|&(l, mass)| {
            let m_l = match reading {
                BlockExponentReading::Dyadic => 2.0f64.powi(2 * l),
                BlockExponentReading::Literal => (2.0 * l as f64).exp(),
            };
            let w = 2.0f64.powi(l).powf(weight_exp);
            w * mass * (1.0 - (-c * nu * t * m_l).exp()) / (c * nu)
        })
        .sum()
}

/// Lower bound on the existence time from the initial velocity: bisection
/// of the monotone block sum against the threshold
/// `epsilon nu^2 / (nu + U0)`, capped at `eta`.
pub fn local_time_bound(
    u0: &VectorField,
    laws: &PhysicalLaws,
    params: &LocalTimeParams,
    part: &DyadicPartition,
) -> Result<f64> {
    let dims = u0.grid().dims() as f64;
    let np = dims / params.p;
    let nu = laws.mu(laws.rho_bar).min(laws.lambda(laws.rho_bar) + 2.0 * laws.mu(laws.rho_bar));
    if !(nu > 0.0) {
        return Err(CoreError::InvalidParams(format!(
            "nu~ = min(mu, lambda + 2 mu) = {nu} must be positive"
        )));
    }
    let u_zero = BesovSpec::plain(np, params.p, 1.0);
    let u0_norm = besov_norm_vector(u0, &u_zero, part)?;
    let threshold = params.epsilon * nu * nu / (nu + u0_norm);

    let blocks = crate::besov::block_norms_vector(u0, params.p, part)?;
    let masses: Vec<(i32, f64)> = part.blocks().zip(blocks).collect();
    let lhs =
        |t: f64| local_bound_lhs(&masses, t, params.c, nu, np - 1.0, params.reading);

    if lhs(params.eta) <= threshold {
        return Ok(params.eta);
    }
    // lhs(0) = 0 <= threshold, lhs(eta) > threshold: bisect the crossing.
    let mut lo = 0.0f64;
    let mut hi = params.eta;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) <= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * params.eta.max(1.0) {
            break;
        }
    }
    Ok(lo)
}

/// Closed-form oracle for single-block data: with all the mass `w` in block
/// `l`, solve `w_factor (1 - e^{-c nu t m_l}) / (c nu) = threshold` for `t`.
pub fn local_time_bound_single_block_oracle(
    l: i32,
    mass: f64,
    u0_norm: f64,
    laws: &PhysicalLaws,
    params: &LocalTimeParams,
    dims: usize,
) -> f64 {
    let np = dims as f64 / params.p;
    let nu = laws.mu(laws.rho_bar).min(laws.lambda(laws.rho_bar) + 2.0 * laws.mu(laws.rho_bar));
    let threshold = params.epsilon * nu * nu / (nu + u0_norm);
    let m_l = match params.reading {
        BlockExponentReading::Dyadic => 2.0f64.powi(2 * l),
        BlockExponentReading::Literal => (2.0 * l as f64).exp(),
    };
    let w = 2.0f64.powi(l).powf(np - 1.0) * mass;
    let arg = 1.0 - threshold * params.c * nu / w;
    if arg <= 0.0 {
        return params.eta;
    }
    (-arg.ln() / (params.c * nu * m_l)).min(params.eta)
}

/// Uniqueness-shadow perturbation experiment.
pub struct StabilityReport {
    /// `||q_base||_{L~oo_T(B^1_{N,1})}` and whether it meets the gate.
    pub gate_norm: f64,
    pub gate_threshold: f64,
    pub gate_pass: bool,
    /// Initial separation `X(0+) = ||delta u0||_{B^{-1}_{N,1}}`.
    pub x_initial: f64,
    /// `X(T) = ||delta u||_{Loo_T(B^{-1})} + ||delta u||_{L1_T(B^1)}`.
    pub x_final: f64,
    pub amplification: f64,
    /// `||delta q||_{Loo_T(B^0_{N,inf})}`.
    pub dq_sup: f64,
    pub pass: bool,
}

/// Run the base and a `u0`-perturbed trajectory, measuring the separation
/// growth `X(T)/X(0+)` against `amplification_bound`.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    q0: &SpectralField,
    u0: &VectorField,
    perturbation: &VectorField,
    laws: &PhysicalLaws,
    level: &FriedrichsLevel,
    opts: &SwOptions,
    part: &DyadicPartition,
    gate_threshold: f64,
    amplification_bound: f64,
) -> Result<StabilityReport> {
    let dims = q0.grid().dims() as f64;
    let base = evolve_sw(q0, u0, laws, level, opts)?;
    let perturbed_u0 = u0.add(perturbation);
    let pert = evolve_sw(q0, &perturbed_u0, laws, level, opts)?;
    assert_eq!(base.times.len(), pert.times.len(), "matched sampling");

    // Smallness gate on the base run: sup-per-block norm of q in B^1_{N,1}.
    let gate_spec = BesovSpec::plain(1.0, dims, 1.0);
    let gate_norm =
        crate::chemin::chemin_lerner_norm(&base.q_series(), f64::INFINITY, &gate_spec, part)?;
    let gate_pass = gate_norm <= gate_threshold;

    let bm1 = BesovSpec::plain(-1.0, dims, 1.0);
    let bp1 = BesovSpec::plain(1.0, dims, 1.0);
    let b0_inf = BesovSpec::plain(0.0, dims, f64::INFINITY);

    let weights = trapezoid_weights(&base.times);
    let mut sup_m1 = 0.0f64;
    let mut int_p1 = 0.0f64;
    let mut dq_sup = 0.0f64;
    for i in 0..base.times.len() {
        let du = pert.states[i].u.sub(&base.states[i].u);
        let dq = pert.states[i].q.sub(&base.states[i].q);
        sup_m1 = sup_m1.max(besov_norm_vector(&du, &bm1, part)?);
        int_p1 += weights[i] * besov_norm_vector(&du, &bp1, part)?;
        dq_sup = dq_sup.max(crate::besov::besov_norm(&dq, &b0_inf, part)?);
    }
    let x_final = sup_m1 + int_p1;
    // Initial separation: the projected perturbation actually applied.
    let du0 = pert.states[0].u.sub(&base.states[0].u);
    let x_initial = besov_norm_vector(&du0, &bm1, part)?;
    let amplification = if x_initial > 0.0 {
        x_final / x_initial
    } else if x_final == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let pass = amplification <= amplification_bound;
    Ok(StabilityReport {
        gate_norm,
        gate_threshold,
        gate_pass,
        x_initial,
        x_final,
        amplification,
        dq_sup,
        pass,
    })
}

/// Max-over-time deviation between the nonlinear run and the exact linear
/// acoustic flow on the same `(q, d)` data, in the plain `L^2` norms.
pub fn linearization_deviation(
    q0: &SpectralField,
    u0: &VectorField,
    laws: &PhysicalLaws,
    level: &FriedrichsLevel,
    opts: &SwOptions,
) -> Result<f64> {
    let grid = q0.grid().clone();
    let traj = evolve_sw(q0, u0, laws, level, opts)?;
    if traj.halted.is_some() {
        return Err(CoreError::InvalidParams(
            "linearization run halted; reduce the amplitude".into(),
        ));
    }
    let lin_params = laws.derive_linear(&grid)?;
    // Matched initial data: the same projection evolve_sw applies.
    let q_init = level.project(&crate::field::dealias(q0));
    let u_init = level.project_vector(&VectorField::new(
        u0.comps().iter().map(crate::field::dealias).collect(),
    ));
    let split = crate::multiplier::hodge_split(&u_init)?;
    let init = AcousticState::new(q_init, split.d.clone());

    let mut worst = 0.0f64;
    for (i, &t) in traj.times.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let lin = evolve_linear(&init, None, None, &lin_params, t, opts.dt, usize::MAX)?;
        let lin_end = lin.end_state();
        let nl = &traj.states[i];
        let nl_split = nl.hodge()?;
        let dq = nl.q.sub(&lin_end.q).l2_norm();
        let dd = nl_split.d.sub(&lin_end.d).l2_norm();
        worst = worst.max(dq + dd);
    }
    Ok(worst)
}

/// Fitted order of a quantity that halves with the step: `log2(e_i/e_{i+1})`
/// per consecutive pair.
pub fn fitted_orders(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

/// Sup-over-time distance between two matched-sampling trajectories in the
/// energy-space norms `B~^{N/2-1,N/2}` (q) and `B^{N/2-1}` (u).
pub fn trajectory_distance(
    a: &SwTrajectory,
    b: &SwTrajectory,
    part: &DyadicPartition,
) -> Result<f64> {
    assert_eq!(a.times.len(), b.times.len(), "matched sampling required");
    let half_n = a.states[0].grid().dims() as f64 / 2.0;
    let q_spec = BesovSpec::hybrid(half_n - 1.0, half_n);
    let u_spec = BesovSpec::b(half_n - 1.0);
    let mut worst = 0.0f64;
    for i in 0..a.times.len() {
        let dq = a.states[i].q.sub(&b.states[i].q);
        let du = a.states[i].u.sub(&b.states[i].u);
        worst = worst
            .max(hybrid_norm(&dq, &q_spec, part)? + besov_norm_vector(&du, &u_spec, part)?);
    }
    Ok(worst)
}

/// Restrict a field to a coarser grid sharing the same period: coefficients
/// at common lattice indices are copied, the rest dropped.
pub fn restrict_to_grid(
    f: &SpectralField,
    coarse: &std::sync::Arc<crate::grid::Grid>,
) -> SpectralField {
    let fine = f.grid();
    assert_eq!(fine.dims(), coarse.dims());
    assert!(fine.points_per_dim() >= coarse.points_per_dim());
    let nc = coarse.points_per_dim() as i64;
    let mut coeffs = vec![num_complex::Complex64::default(); coarse.len()];
    for (flat, c) in coeffs.iter_mut().enumerate() {
        if coarse.touches_nyquist(flat) && flat != 0 {
            continue;
        }
        let pos = coarse.unravel(flat);
        let mut fine_idx = [0usize; 3];
        for ax in 0..coarse.dims() {
            let k = if pos[ax] as i64 <= nc / 2 {
                pos[ax] as i64
            } else {
                pos[ax] as i64 - nc
            };
            fine_idx[ax] = k.rem_euclid(fine.points_per_dim() as i64) as usize;
        }
        *c = f.coeffs()[fine.ravel(&fine_idx[..fine.dims()])];
    }
    SpectralField::from_coeffs_unchecked(coarse, coeffs)
}

/// Transfer data to a `lambda = 2` rescaled torus (half the period, same
/// sample count): `q~(x) = q(2x)` keeps the same coefficient array because
/// the lattice frequencies double with the box frequency.
pub fn rescale_field_half_period(f: &SpectralField) -> Result<SpectralField> {
    let grid = f.grid();
    let half = crate::grid::make_grid(grid.dims(), grid.points_per_dim(), grid.period() / 2.0)?;
    Ok(SpectralField::from_coeffs_unchecked(
        &half,
        f.coeffs().to_vec(),
    ))
}

/// Scaling-shadow outcome: per-sample critical norms of the rescaled run
/// against the base run at matched times `t <-> lambda^2 t`.
pub struct ScalingReport {
    pub times: Vec<f64>,
    pub q_rel_dev: Vec<f64>,
    pub u_rel_dev: Vec<f64>,
    pub max_rel_dev: f64,
}

/// Run the base system and its `lambda = 2` rescaling (`x -> 2x`,
/// `t -> 4t`, `u -> 2u`, `P -> 4P`, `kappa -> 4 kappa`) and compare the
/// scale-invariant critical norms `B^{N/2}` (q) and `B^{N/2-1}` (u).
#[allow(clippy::too_many_arguments)]
pub fn scaling_experiment(
    q0: &SpectralField,
    u0: &VectorField,
    laws: &PhysicalLaws,
    level_n: u32,
    t_end: f64,
    dt: f64,
    store_every: usize,
) -> Result<ScalingReport> {
    let grid = q0.grid().clone();
    let part = build_partition(&grid);
    let level = FriedrichsLevel::new(&grid, level_n);
    let opts = SwOptions::new(t_end, dt, store_every);
    let base = evolve_sw(q0, u0, laws, &level, &opts)?;
    if base.halted.is_some() {
        return Err(CoreError::InvalidParams("base scaling run halted".into()));
    }

    let lambda = 2.0;
    let q0_s = rescale_field_half_period(q0)?;
    let grid_s = q0_s.grid().clone();
    let u0_s = VectorField::new(
        u0.comps()
            .iter()
            .map(|c| Ok(rescale_field_half_period(c)?.scale(lambda)))
            .collect::<Result<Vec<_>>>()?,
    );
    let laws_s = laws.rescaled(lambda);
    let part_s = build_partition(&grid_s);
    // Frequencies double, so the annulus level doubles with them.
    let level_s = FriedrichsLevel::new(&grid_s, 2 * level_n);
    let opts_s = SwOptions::new(t_end / (lambda * lambda), dt / (lambda * lambda), store_every);
    let scaled = evolve_sw(&q0_s, &u0_s, &laws_s, &level_s, &opts_s)?;
    if scaled.halted.is_some() {
        return Err(CoreError::InvalidParams("rescaled scaling run halted".into()));
    }
    assert_eq!(base.times.len(), scaled.times.len());

    let half_n = grid.dims() as f64 / 2.0;
    let q_spec = BesovSpec::b(half_n);
    let u_spec = BesovSpec::b(half_n - 1.0);
    let mut q_rel = Vec::new();
    let mut u_rel = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..base.times.len() {
        let nq_base = crate::besov::besov_norm(&base.states[i].q, &q_spec, &part)?;
        let nq_scaled = crate::besov::besov_norm(&scaled.states[i].q, &q_spec, &part_s)?;
        let nu_base = besov_norm_vector(&base.states[i].u, &u_spec, &part)?;
        let nu_scaled = besov_norm_vector(&scaled.states[i].u, &u_spec, &part_s)?;
        let qd = rel_dev(nq_scaled, nq_base);
        let ud = rel_dev(nu_scaled, nu_base);
        worst = worst.max(qd).max(ud);
        q_rel.push(qd);
        u_rel.push(ud);
    }
    Ok(ScalingReport {
        times: base.times.clone(),
        q_rel_dev: q_rel,
        u_rel_dev: u_rel,
        max_rel_dev: worst,
    })
}

fn rel_dev(a: f64, b: f64) -> f64 {
    let denom = b.abs().max(1e-300);
    (a - b).abs() / denom
}
