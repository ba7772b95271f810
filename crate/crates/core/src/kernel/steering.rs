use super::{LocalSample, RegressionConfig};
use crate::imaging::ExposureKind;
use crate::optimizer::{minimize, BfgsParams};
use log::debug;
use nalgebra::{DVector, Matrix3, Matrix4, Vector3, Vector4};

/// Unnormalized Gaussian exp(−½‖Ru‖²).
#[inline]
pub fn eval_kernel(r: &Matrix3<f64>, u: &Vector3<f64>) -> f64 {
    (-0.5 * (r * u).norm_squared()).exp()
}

/// One-sided intensity-consistency weight of a sample relative to the center.
#[inline]
pub fn omega_weight(y_i: f64, y_c: f64, phi_c: f64, kappa: f64, reference: ExposureKind) -> f64 {
    let sigma = kappa * (1.0 - phi_c);
    let diff = match reference {
        ExposureKind::Long => y_i - y_c,
        ExposureKind::Short => y_c - y_i,
    };
    let d = diff.max(0.0);
    (-sigma * d * d).exp()
}

/// Upper-triangular R from [r00, r01, r02, r11, r12, r22].
pub fn params_to_r(p: &[f64]) -> Matrix3<f64> {
    Matrix3::new(p[0], p[1], p[2], 0.0, p[3], p[4], 0.0, 0.0, p[5])
}

pub fn r_to_params(r: &Matrix3<f64>) -> [f64; 6] {
    [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 1)], r[(1, 2)], r[(2, 2)]]
}

/// Steering objective for one pixel, with the radiometric weights fixed.
#[derive(Debug, Clone)]
pub struct SteeringProblem {
    offsets: Vec<Vector3<f64>>,
    y: Vec<f64>,
    nu: Vec<f64>,
    target: f64,
    tikhonov: f64,
    steering_reg: f64,
}

struct Fit {
    beta: Vector4<f64>,
    kernel: Vec<f64>,
}

impl SteeringProblem {
    /// `y_c` and `phi_c` describe the center pixel of the reference frame.
    pub fn new(
        samples: &[LocalSample],
        y_c: f64,
        phi_c: f64,
        reference: ExposureKind,
        target: f64,
        config: &RegressionConfig,
    ) -> Self {
        let nu = samples
            .iter()
            .map(|s| s.phi * omega_weight(s.value, y_c, phi_c, config.kappa, reference))
            .collect();
        Self::with_weights(samples, nu, target, config)
    }

    /// Builds the problem from explicit radiometric weights ν.
    pub fn with_weights(samples: &[LocalSample], nu: Vec<f64>, target: f64, config: &RegressionConfig) -> Self {
        assert_eq!(samples.len(), nu.len());
        SteeringProblem {
            offsets: samples.iter().map(|s| Vector3::from(s.offset)).collect(),
            y: samples.iter().map(|s| s.value).collect(),
            nu,
            target,
            tikhonov: config.tikhonov,
            steering_reg: config.steering_reg,
        }
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// True when no sample carries regression weight.
    pub fn is_degenerate(&self) -> bool {
        self.nu.iter().sum::<f64>() < 1e-9
    }

    fn kernel(&self, r: &Matrix3<f64>) -> Vec<f64> {
        self.offsets.iter().map(|u| eval_kernel(r, u)).collect()
    }

    fn solve(&self, kernel: &[f64], values: &[f64]) -> Option<Vector4<f64>> {
        let mut a = Matrix4::<f64>::zeros();
        let mut rhs = Vector4::<f64>::zeros();
        for ((u, &k), (&nu, &y)) in self.offsets.iter().zip(kernel).zip(self.nu.iter().zip(values)) {
            let w = k * nu;
            if w == 0.0 {
                continue;
            }
            let x = Vector4::new(1.0, u[0], u[1], u[2]);
            a += x * x.transpose() * w;
            rhs += x * (w * y);
        }
        for d in 0..4 {
            a[(d, d)] += self.tikhonov;
        }
        a.cholesky().map(|c| c.solve(&rhs)).or_else(|| a.lu().solve(&rhs))
    }

    fn fit(&self, r: &Matrix3<f64>) -> Option<Fit> {
        let kernel = self.kernel(r);
        let beta = self.solve(&kernel, &self.y)?;
        Some(Fit { beta, kernel })
    }

    /// Per-sample factor k_i·[ν_i z_i² + (1 − ν_i)(y_i − t)²] and the total cost.
    fn terms(&self, r: &Matrix3<f64>, fit: &Fit) -> (Vec<f64>, f64) {
        let mut per = Vec::with_capacity(self.y.len());
        let mut cost = 0.0;
        for i in 0..self.y.len() {
            let u = &self.offsets[i];
            let x = Vector4::new(1.0, u[0], u[1], u[2]);
            let z = self.y[i] - x.dot(&fit.beta);
            let zt = self.y[i] - self.target;
            let c = fit.kernel[i] * (self.nu[i] * z * z + (1.0 - self.nu[i]) * zt * zt);
            per.push(c);
            cost += c;
        }
        cost += self.tikhonov * fit.beta.norm_squared() + self.steering_reg * r.norm_squared();
        (per, cost)
    }

    pub fn cost(&self, r: &Matrix3<f64>) -> f64 {
        match self.fit(r) {
            Some(fit) => self.terms(r, &fit).1,
            None => f64::INFINITY,
        }
    }

    /// ∂C/∂R restricted to the upper triangle. The sensitivity of β̂ drops
    /// out because β̂ satisfies the ridge normal equations, leaving only the
    /// kernel derivative ∂k_i/∂R = −k_i·R·u_i·u_iᵀ and the ‖R‖² term.
    pub fn gradient(&self, r: &Matrix3<f64>) -> Matrix3<f64> {
        self.cost_and_gradient(r).1
    }

    pub fn cost_and_gradient(&self, r: &Matrix3<f64>) -> (f64, Matrix3<f64>) {
        let Some(fit) = self.fit(r) else {
            return (f64::INFINITY, Matrix3::zeros());
        };
        let (per, cost) = self.terms(r, &fit);
        let mut m = Matrix3::<f64>::zeros();
        for (u, c) in self.offsets.iter().zip(&per) {
            m += u * u.transpose() * *c;
        }
        let g = -(r * m) + r * (2.0 * self.steering_reg);
        (cost, g.upper_triangle())
    }

    /// Local coefficients at R for arbitrary per-sample values, using the
    /// weights of this problem.
    pub fn coefficients(&self, r: &Matrix3<f64>, values: &[f64]) -> Option<Vector4<f64>> {
        assert_eq!(values.len(), self.y.len());
        self.solve(&self.kernel(r), values)
    }

    pub fn estimate_at(&self, r: &Matrix3<f64>) -> Option<f64> {
        self.fit(r).map(|f| f.beta[0])
    }
}

pub fn steering_cost(r: &Matrix3<f64>, problem: &SteeringProblem) -> f64 {
    problem.cost(r)
}

pub fn steering_gradient(r: &Matrix3<f64>, problem: &SteeringProblem) -> Matrix3<f64> {
    problem.gradient(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateOutcome {
    Optimized,
    /// No sample had weight; the saturation target was returned.
    Degenerate,
    /// The optimizer failed and the initial steering matrix was kept.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelEstimate {
    /// Center value in the boosted gamma domain.
    pub value: f64,
    pub r: Matrix3<f64>,
    pub iterations: usize,
    pub outcome: EstimateOutcome,
}

/// Optimizes R (at most `config.bfgs_iters` BFGS steps) and returns the
/// fitted center value.
pub fn estimate_pixel(problem: &SteeringProblem, r_init: &Matrix3<f64>, config: &RegressionConfig) -> PixelEstimate {
    if problem.is_degenerate() {
        return PixelEstimate {
            value: problem.target(),
            r: *r_init,
            iterations: 0,
            outcome: EstimateOutcome::Degenerate,
        };
    }
    let fallback = |iterations| PixelEstimate {
        value: problem.estimate_at(r_init).unwrap_or(problem.target()),
        r: *r_init,
        iterations,
        outcome: EstimateOutcome::Fallback,
    };
    let x0 = DVector::from_row_slice(&r_to_params(r_init));
    let params = BfgsParams {
        max_iters: config.bfgs_iters,
        grad_tol: config.grad_tol,
        ..Default::default()
    };
    let result = minimize(
        |x: &DVector<f64>| {
            let r = params_to_r(x.as_slice());
            let (c, g) = problem.cost_and_gradient(&r);
            (c, DVector::from_row_slice(&r_to_params(&g)))
        },
        x0,
        &params,
    );
    match result {
        Ok(res) => {
            let r = params_to_r(res.x_opt.as_slice());
            match problem.estimate_at(&r) {
                Some(v) if v.is_finite() => PixelEstimate {
                    value: v,
                    r,
                    iterations: res.iterations,
                    outcome: EstimateOutcome::Optimized,
                },
                _ => fallback(res.iterations),
            }
        }
        Err(e) => {
            debug!("steering optimization failed: {}", e);
            fallback(0)
        }
    }
}
