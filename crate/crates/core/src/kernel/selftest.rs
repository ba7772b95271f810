//! Randomized check of the analytic steering gradient against central
//! finite differences.

use super::{params_to_r, r_to_params, LocalSample, RegressionConfig, SteeringProblem};
use crate::imaging::ExposureKind;
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const STEP: f64 = 1e-5;
/// Entries whose finite difference is below this are compared absolutely.
const TINY: f64 = 1e-8;

/// A random three-frame block with random codes, exposedness and steering.
pub fn random_instance(rng: &mut impl Rng, config: &RegressionConfig) -> (SteeringProblem, Matrix3<f64>) {
    let r = config.block_radius as i32;
    let mut samples = Vec::new();
    for dt in -1..=1 {
        for dy in -r..=r {
            for dx in -r..=r {
                let phi = rng.random_range(0.0..1.0);
                samples.push(LocalSample {
                    offset: [dx as f64, dy as f64, dt as f64],
                    value: rng.random_range(0.0..1.2),
                    phi,
                    well_exposed: phi > 0.0,
                });
            }
        }
    }
    let y_c = samples[samples.len() / 2].value;
    let kind = if rng.random_bool(0.5) {
        ExposureKind::Long
    } else {
        ExposureKind::Short
    };
    let problem = SteeringProblem::new(&samples, y_c, rng.random_range(0.0..1.0), kind, rng.random_range(0.0..1.0), config);
    let params: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    (problem, params_to_r(&params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientReport {
    pub instances: usize,
    /// Largest elementwise |analytic − fd| / |fd| over all instances.
    pub max_relative_error: f64,
    /// Largest absolute error among entries with |fd| below 1e-8.
    pub max_absolute_error_tiny: f64,
}

impl GradientReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative_error < tol && self.max_absolute_error_tiny < tol * 1e-3
    }
}

pub fn gradient_selftest(instances: usize, seed: u64, config: &RegressionConfig) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientReport {
        instances,
        max_relative_error: 0.0,
        max_absolute_error_tiny: 0.0,
    };
    for _ in 0..instances {
        let (p, r) = random_instance(&mut rng, config);
        let params = r_to_params(&r);
        let g = r_to_params(&p.gradient(&r));
        for k in 0..6 {
            let (mut a, mut b) = (params, params);
            a[k] += STEP;
            b[k] -= STEP;
            let fd = (p.cost(&params_to_r(&a)) - p.cost(&params_to_r(&b))) / (2.0 * STEP);
            let diff = (g[k] - fd).abs();
            if fd.abs() < TINY {
                report.max_absolute_error_tiny = report.max_absolute_error_tiny.max(diff);
            } else {
                report.max_relative_error = report.max_relative_error.max(diff / fd.abs());
            }
        }
    }
    report
}
