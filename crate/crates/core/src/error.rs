//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid dimension {0}: must be 1, 2 or 3")]
    InvalidDimension(usize),
    #[error("points per dimension {0} is not a power of two >= 8")]
    NonPowerOfTwo(usize),
    #[error("period {0} is not positive")]
    NonPositivePeriod(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("multiplier `{0}` is undefined at xi = 0 but the field has nonzero mean {1:.3e}")]
    UndefinedAtZero(String, f64),
    #[error("operation requires a mean-free field (mean = {0:.3e})")]
    NonzeroMean(f64),
    #[error("block index {l} outside resolved range [{l_min}, {l_max}]")]
    BlockOutOfRange { l: i32, l_min: i32, l_max: i32 },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("advective CFL violated: dt = {dt:.3e} exceeds stable bound {bound:.3e}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("parameter validation failed: {0}")]
    InvalidParams(String),
    #[error("vacuum guard tripped at t = {t:.6}: min density ratio 1+q = {min_ratio:.4} < {guard:.4}")]
    VacuumBreach { t: f64, min_ratio: f64, guard: f64 },
    #[error("diffusion coefficient leaves the admissible band: min = {min:.4e}, max = {max:.4e}")]
    CoefficientBounds { min: f64, max: f64 },
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
