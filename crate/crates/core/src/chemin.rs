//! Time-sampled field trajectories and Chemin-Lerner time-space norms.

use crate::besov::{block_norms, hybrid_from_blocks, plain_from_blocks, BesovSpec};
use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::partition::DyadicPartition;

/// Scalar-field trajectory with trapezoid quadrature weights.
#[derive(Clone)]
pub struct TrajectorySeries {
    times: Vec<f64>,
    fields: Vec<SpectralField>,
}

impl TrajectorySeries {
    pub fn new(times: Vec<f64>, fields: Vec<SpectralField>) -> Result<Self> {
        if times.is_empty() || fields.is_empty() {
            return Err(CoreError::EmptyTrajectory);
        }
        assert_eq!(times.len(), fields.len());
        assert!(
            times.windows(2).all(|w| w[1] > w[0]),
            "times must be strictly increasing"
        );
        assert!(fields.iter().all(|f| f.same_grid(&fields[0])));
        Ok(TrajectorySeries { times, fields })
    }

    pub fn constant(times: Vec<f64>, f: SpectralField) -> Result<Self> {
        let fields = vec![f; times.len()];
        Self::new(times, fields)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Trapezoid weights for integrals over `[t_0, t_M]`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.times)
    }
}

pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let m = times.len();
    let mut w = vec![0.0f64; m];
    if m < 2 {
        return w;
    }
    for i in 0..m - 1 {
        let h = 0.5 * (times[i + 1] - times[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Vector-field trajectory.
#[derive(Clone)]
pub struct VectorTrajectory {
    times: Vec<f64>,
    fields: Vec<crate::field::VectorField>,
}

impl VectorTrajectory {
    pub fn new(times: Vec<f64>, fields: Vec<crate::field::VectorField>) -> Result<Self> {
        if times.is_empty() || fields.is_empty() {
            return Err(CoreError::EmptyTrajectory);
        }
        assert_eq!(times.len(), fields.len());
        Ok(VectorTrajectory { times, fields })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[crate::field::VectorField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Component trajectory as a scalar series.
    pub fn component(&self, i: usize) -> TrajectorySeries {
        TrajectorySeries::new(
            self.times.clone(),
            self.fields.iter().map(|u| u.comp(i).clone()).collect(),
        )
        .expect("nonempty")
    }

    /// Per-block, per-sample vector `L^p` norms.
    pub fn block_norm_series(
        &self,
        p: f64,
        part: &DyadicPartition,
    ) -> Result<Vec<Vec<f64>>> {
        let nblocks = part.blocks().count();
        let mut out = vec![vec![0.0f64; self.len()]; nblocks];
        for (i, f) in self.fields.iter().enumerate() {
            let per_block = crate::besov::block_norms_vector(f, p, part)?;
            for (b, v) in per_block.into_iter().enumerate() {
                out[b][i] = v;
            }
        }
        Ok(out)
    }

    /// Chemin-Lerner norm of the vector trajectory.
    pub fn chemin_lerner_norm(
        &self,
        rho: f64,
        spec: &BesovSpec,
        part: &DyadicPartition,
    ) -> Result<f64> {
        let series = self.block_norm_series(spec.p, part)?;
        let per_block: Vec<f64> = series
            .iter()
            .map(|s| time_lr_norm(&self.times, s, rho))
            .collect();
        Ok(if spec.is_plain() {
            plain_from_blocks(&per_block, spec, part)
        } else {
            hybrid_from_blocks(&per_block, spec, part)
        })
    }

    /// `L^rho`-in-time of the per-sample space norm.
    pub fn iterated_norm(
        &self,
        rho: f64,
        spec: &BesovSpec,
        part: &DyadicPartition,
    ) -> Result<f64> {
        let series = self.block_norm_series(spec.p, part)?;
        let per_sample: Vec<f64> = (0..self.len())
            .map(|i| {
                let blocks: Vec<f64> = series.iter().map(|s| s[i]).collect();
                if spec.is_plain() {
                    plain_from_blocks(&blocks, spec, part)
                } else {
                    hybrid_from_blocks(&blocks, spec, part)
                }
            })
            .collect();
        Ok(time_lr_norm(&self.times, &per_sample, rho))
    }
}

/// `L^rho` norm in time of a sampled function, trapezoid quadrature;
/// `rho = infinity` is the sup over samples.
pub fn time_lr_norm(times: &[f64], samples: &[f64], rho: f64) -> f64 {
    if rho.is_infinite() {
        return samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let w = trapezoid_weights(times);
    let acc: f64 = samples
        .iter()
        .zip(&w)
        .map(|(v, wi)| v.abs().powf(rho) * wi)
        .sum();
    acc.powf(1.0 / rho)
}

/// Per-block, per-sample `L^p` norms: `out[b][i] = ||Delta_{l_b} u(t_i)||_{L^p}`.
pub fn block_norm_series(
    traj: &TrajectorySeries,
    p: f64,
    part: &DyadicPartition,
) -> Result<Vec<Vec<f64>>> {
    let nblocks = part.blocks().count();
    let mut out = vec![vec![0.0f64; traj.len()]; nblocks];
    for (i, f) in traj.fields().iter().enumerate() {
        let per_block = block_norms(f, p, part)?;
        for (b, v) in per_block.into_iter().enumerate() {
            out[b][i] = v;
        }
    }
    Ok(out)
}

/// Chemin-Lerner norm `||u||_{L~^rho_T(B~^{s,t}_{p,r})}`: the `L^rho`-in-time
/// norm of each block is taken before the weighted block sum.
///
/// Plain specs (`t = s`) use the single `r`-sum over all blocks; hybrid specs
/// use the two-piece low/high sum. With the single sum, Minkowski gives
/// `CL >= iterated` for `rho >= r` and `CL <= iterated` for `rho <= r`; the
/// two-piece form only keeps the `rho >= r` direction.
pub fn chemin_lerner_norm(
    traj: &TrajectorySeries,
    rho: f64,
    spec: &BesovSpec,
    part: &DyadicPartition,
) -> Result<f64> {
    if traj.is_empty() {
        return Err(CoreError::EmptyTrajectory);
    }
    let series = block_norm_series(traj, spec.p, part)?;
    let per_block: Vec<f64> = series
        .iter()
        .map(|s| time_lr_norm(traj.times(), s, rho))
        .collect();
    Ok(if spec.is_plain() {
        plain_from_blocks(&per_block, spec, part)
    } else {
        hybrid_from_blocks(&per_block, spec, part)
    })
}

/// Iterated norm `||u||_{L^rho_T(B~^{s,t}_{p,r})}`: the space norm is
/// evaluated per sample, then the `L^rho` time norm is taken.
pub fn iterated_time_space_norm(
    traj: &TrajectorySeries,
    rho: f64,
    spec: &BesovSpec,
    part: &DyadicPartition,
) -> Result<f64> {
    if traj.is_empty() {
        return Err(CoreError::EmptyTrajectory);
    }
    let series = block_norm_series(traj, spec.p, part)?;
    let per_sample: Vec<f64> = (0..traj.len())
        .map(|i| {
            let blocks: Vec<f64> = series.iter().map(|s| s[i]).collect();
            if spec.is_plain() {
                plain_from_blocks(&blocks, spec, part)
            } else {
                hybrid_from_blocks(&blocks, spec, part)
            }
        })
        .collect();
    Ok(time_lr_norm(traj.times(), &per_sample, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpectralField;
    use crate::grid::make_grid;
    use crate::partition::build_partition;
    use std::f64::consts::PI;

    fn sample_traj() -> (TrajectorySeries, DyadicPartition) {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let part = build_partition(&g);
        let times: Vec<f64> = (0..21).map(|i| i as f64 * 0.05).collect();
        let fields = times
            .iter()
            .map(|&t| {
                SpectralField::from_fn(&g, move |x| {
                    (1.0 + t) * x[0].sin() + (5.0 * x[0]).cos() * (-t).exp()
                })
            })
            .collect();
        (TrajectorySeries::new(times, fields).unwrap(), part)
    }

    #[test]
    fn constant_trajectory_sup_equals_hybrid_norm() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let part = build_partition(&g);
        let f = SpectralField::from_fn(&g, |x| x[0].sin() + 0.1 * (9.0 * x[0]).cos());
        let times: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let traj = TrajectorySeries::constant(times, f.clone()).unwrap();
        let spec = BesovSpec::hybrid(0.5, 1.5);
        let cl = chemin_lerner_norm(&traj, f64::INFINITY, &spec, &part).unwrap();
        let direct = crate::besov::hybrid_norm(&f, &spec, &part).unwrap();
        assert!((cl - direct).abs() < 1e-12);
    }

    #[test]
    fn fubini_for_rho_equals_r_one() {
        let (traj, part) = sample_traj();
        let spec = BesovSpec::plain(0.7, 2.0, 1.0);
        let cl = chemin_lerner_norm(&traj, 1.0, &spec, &part).unwrap();
        let it = iterated_time_space_norm(&traj, 1.0, &spec, &part).unwrap();
        assert!(
            (cl - it).abs() / it < 1e-12,
            "rho = r = 1 must coincide: {cl} vs {it}"
        );
    }

    #[test]
    fn minkowski_ordering() {
        // Taking the smaller exponent innermost gives the smaller mixed norm:
        // CL (time norm innermost) <= iterated for rho <= r, >= for rho >= r.
        let (traj, part) = sample_traj();
        for &(rho, r) in &[(1.0, 2.0), (1.0, f64::INFINITY), (2.0, f64::INFINITY)] {
            let spec = BesovSpec::plain(0.3, 2.0, r);
            let cl = chemin_lerner_norm(&traj, rho, &spec, &part).unwrap();
            let it = iterated_time_space_norm(&traj, rho, &spec, &part).unwrap();
            assert!(
                cl <= it * (1.0 + 1e-10),
                "rho <= r: CL {cl} must be <= iterated {it}"
            );
        }
        for &(rho, r) in &[(2.0, 1.0), (f64::INFINITY, 1.0), (f64::INFINITY, 2.0)] {
            let spec = BesovSpec::plain(0.3, 2.0, r);
            let cl = chemin_lerner_norm(&traj, rho, &spec, &part).unwrap();
            let it = iterated_time_space_norm(&traj, rho, &spec, &part).unwrap();
            assert!(
                it <= cl * (1.0 + 1e-10),
                "rho >= r: iterated {it} must be <= CL {cl}"
            );
        }
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        assert!(matches!(
            TrajectorySeries::new(vec![], vec![]),
            Err(CoreError::EmptyTrajectory)
        ));
    }
}
