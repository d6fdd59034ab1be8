//! Pseudo-spectral toolkit for a capillary shallow-water system on periodic
//! grids: Littlewood-Paley decomposition, Besov/hybrid/Chemin-Lerner norms,
//! exact and IMEX evolution of the linearized system, a Friedrichs-projected
//! nonlinear solver, and numerical verification of the damping, smoothing,
//! product and energy estimates the schemes rely on.

pub mod besov;
pub mod chemin;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod heat;
pub mod friedrichs;
pub mod kernel;
pub mod laws;
pub mod multiplier;
pub mod linear;
pub mod lyapunov;
pub mod nonlinear;
pub mod partition;
pub mod smoothing;
pub mod transport;

pub use besov::{besov_norm, besov_norm_vector, hybrid_norm, hybrid_norm_vector, BesovSpec};
pub use chemin::{chemin_lerner_norm, iterated_time_space_norm, TrajectorySeries};
pub use error::{CoreError, Result};
pub use field::{dealias, product_dealiased, SpectralField, VectorField};
pub use grid::{make_grid, Grid};
pub use kernel::{convolve_kernel, CapillaryKernel};
pub use multiplier::{
    divergence, fourier_multiplier, gradient, hodge_reconstruct, hodge_split, laplacian,
    AntisymmetricField, HodgeSplit, MultiplierSymbol,
};
pub use partition::{build_partition, DyadicPartition};
