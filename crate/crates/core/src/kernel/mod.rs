//! Locally adaptive kernel regression with optimized steering matrices.
//!
//! Values live in the boosted, gamma-compressed code domain. Each local
//! sample carries a radiometric weight ν = φ·ω; the steering matrix
//! H = RᵀR is found by minimizing the regression error plus a saturation
//! cost that pulls ill-exposed samples toward a target code.

mod ridge;
pub mod selftest;
mod steering;

pub use ridge::{design_matrix, solve_ridge};
pub use selftest::{gradient_selftest, random_instance, GradientReport};
pub use steering::{
    estimate_pixel, eval_kernel, omega_weight, params_to_r, r_to_params, steering_cost, steering_gradient,
    EstimateOutcome, PixelEstimate, SteeringProblem,
};

use crate::imaging::ExposureKind;

/// One sample of the spatio-temporal block around the pixel being estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSample {
    /// (Δx, Δy, Δt) relative to the center, in pixels and frames.
    pub offset: [f64; 3],
    pub value: f64,
    pub phi: f64,
    pub well_exposed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionConfig {
    /// Block side is 2·radius + 1.
    pub block_radius: usize,
    /// Ridge weight on the local coefficients.
    pub tikhonov: f64,
    /// Weight of ‖R‖²_F.
    pub steering_reg: f64,
    pub kappa: f64,
    pub bfgs_iters: usize,
    pub grad_tol: f64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            block_radius: 3,
            tikhonov: 0.1,
            steering_reg: 0.01,
            kappa: 10.0,
            bfgs_iters: 10,
            grad_tol: 1e-8,
        }
    }
}

impl RegressionConfig {
    pub fn block_size(&self) -> usize {
        2 * self.block_radius + 1
    }
}

/// Code toward which ill-exposed samples are pulled, expressed in the
/// normalized gamma domain.
pub fn saturation_target(reference: ExposureKind, z_th: f64, z_max: f64, gamma: f64) -> f64 {
    let code = match reference {
        ExposureKind::Long => z_max - z_th,
        ExposureKind::Short => z_th,
    };
    (code / z_max).powf(1.0 / gamma)
}
