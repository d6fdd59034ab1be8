//! Physical laws of the capillary system: pressure, density-dependent
//! viscosities, capillarity strength, and the derived linearized constants.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::Grid;
use crate::kernel::CapillaryKernel;
use crate::linear::LinearParams;

/// Scalar constitutive law `rho -> value`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarLaw {
    Constant { value: f64 },
    PowerLaw { coeff: f64, exponent: f64 },
}

impl ScalarLaw {
    pub fn constant(value: f64) -> Self {
        ScalarLaw::Constant { value }
    }

    /// `coeff * rho^exponent`.
    pub fn power(coeff: f64, exponent: f64) -> Self {
        ScalarLaw::PowerLaw { coeff, exponent }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        match *self {
            ScalarLaw::Constant { value } => value,
            ScalarLaw::PowerLaw { coeff, exponent } => coeff * rho.powf(exponent),
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match *self {
            ScalarLaw::Constant { .. } => 0.0,
            ScalarLaw::PowerLaw { coeff, exponent } => {
                coeff * exponent * rho.powf(exponent - 1.0)
            }
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        match *self {
            ScalarLaw::Constant { value } => ScalarLaw::Constant {
                value: factor * value,
            },
            ScalarLaw::PowerLaw { coeff, exponent } => ScalarLaw::PowerLaw {
                coeff: factor * coeff,
                exponent,
            },
        }
    }
}

/// Runtime density guard: the solver halts when `1 + q` leaves
/// `[halt_ratio, inf)`; the right-hand-side evaluation errors below
/// `hard_ratio` (the band where the composition laws apply).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VacuumGuard {
    pub halt_ratio: f64,
    pub hard_ratio: f64,
}

impl Default for VacuumGuard {
    fn default() -> Self {
        VacuumGuard {
            halt_ratio: 0.5,
            hard_ratio: 0.25,
        }
    }
}

/// Full constitutive description of the system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhysicalLaws {
    pub rho_bar: f64,
    pub kappa: f64,
    pub pressure: ScalarLaw,
    pub visc_mu: ScalarLaw,
    pub visc_lambda: ScalarLaw,
    /// Gaussian kernel width as a fraction of the torus period.
    pub kernel_width_frac: f64,
    pub vacuum: VacuumGuard,
    /// Density band `(rho_lo, rho_hi)` on which `2 mu + N lambda >= 0` is
    /// validated.
    pub density_range: (f64, f64),
    /// Third-order capillary regularization coefficient (default 0).
    pub kappa_reg: f64,
}

impl PhysicalLaws {
    /// 2D shallow-water defaults: `P = rho^2`, `mu = rho`, `lambda = 0`,
    /// `rho_bar = 1`.
    pub fn shallow_water(kappa: f64) -> Self {
        PhysicalLaws {
            rho_bar: 1.0,
            kappa,
            pressure: ScalarLaw::power(1.0, 2.0),
            visc_mu: ScalarLaw::power(1.0, 1.0),
            visc_lambda: ScalarLaw::constant(0.0),
            kernel_width_frac: 1.0 / 16.0,
            vacuum: VacuumGuard::default(),
            density_range: (0.25, 4.0),
            kappa_reg: 0.0,
        }
    }

    pub fn mu(&self, rho: f64) -> f64 {
        self.visc_mu.eval(rho)
    }

    pub fn lambda(&self, rho: f64) -> f64 {
        self.visc_lambda.eval(rho)
    }

    pub fn pressure_prime(&self, rho: f64) -> f64 {
        self.pressure.derivative(rho)
    }

    /// `K(rho) = rho_bar P'(rho)/rho - P'(rho_bar)`: the nonlinear pressure
    /// remainder (identically 0 for `P = rho^2`, `rho_bar = 1`).
    pub fn k_of_rho(&self, rho: f64) -> f64 {
        self.rho_bar * self.pressure_prime(rho) / rho - self.pressure_prime(self.rho_bar)
    }

    pub fn mu_bar(&self) -> f64 {
        self.mu(self.rho_bar) / self.rho_bar
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda(self.rho_bar) / self.rho_bar
    }

    pub fn nu_bar(&self) -> f64 {
        2.0 * self.mu_bar() + self.lambda_bar()
    }

    pub fn delta_bar(&self) -> f64 {
        self.kappa * self.rho_bar + self.pressure_prime(self.rho_bar)
    }

    pub fn kappa_bar(&self) -> f64 {
        self.kappa * self.rho_bar
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        if !(self.rho_bar > 0.0) {
            return Err(CoreError::InvalidParams(format!(
                "rho_bar = {} violates `rho_bar > 0`",
                self.rho_bar
            )));
        }
        if self.kappa < 0.0 {
            return Err(CoreError::InvalidParams("kappa must be >= 0".into()));
        }
        if !(self.pressure_prime(self.rho_bar) > 0.0) {
            return Err(CoreError::InvalidParams(
                "stability requires `P'(rho_bar) > 0`".into(),
            ));
        }
        if !(self.mu(self.rho_bar) > 0.0) {
            return Err(CoreError::InvalidParams(
                "stability requires `mu(rho_bar) > 0`".into(),
            ));
        }
        if !(2.0 * self.mu(self.rho_bar) + self.lambda(self.rho_bar) > 0.0) {
            return Err(CoreError::InvalidParams(
                "stability requires `2 mu(rho_bar) + lambda(rho_bar) > 0`".into(),
            ));
        }
        // Pointwise Lame condition 2 mu + N lambda >= 0 on the working band.
        let (lo, hi) = self.density_range;
        let samples = 64;
        for i in 0..=samples {
            let rho = lo + (hi - lo) * i as f64 / samples as f64;
            let val = 2.0 * self.mu(rho) + dims as f64 * self.lambda(rho);
            if val < -1e-12 {
                return Err(CoreError::InvalidParams(format!(
                    "`mu > 0, 2 mu + N lambda >= 0` fails at rho = {rho}: {val}"
                )));
            }
        }
        Ok(())
    }

    /// Linearized coefficients with the capillary kernel built on `grid`.
    pub fn derive_linear(&self, grid: &Arc<Grid>) -> Result<LinearParams> {
        self.validate(grid.dims())?;
        let kernel = CapillaryKernel::gaussian(grid, self.kernel_width_frac * grid.period())?;
        Ok(LinearParams::new(
            self.mu_bar(),
            self.lambda_bar(),
            self.delta_bar(),
            self.kappa_bar(),
            kernel,
        )?
        .with_kappa_reg(self.kappa_reg))
    }

    /// The laws under the parabolic rescaling `x -> lambda x`,
    /// `t -> lambda^2 t`, `u -> lambda u`: pressure and capillarity pick up
    /// `lambda^2`; the kernel width follows the period automatically because
    /// it is stored as a fraction.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.pressure = self.pressure.scaled(lambda * lambda);
        out.kappa = self.kappa * lambda * lambda;
        out
    }
}
