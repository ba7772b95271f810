//! Dense BFGS with an Armijo backtracking line search.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTol,
    MaxIters,
    LineSearchFail,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub x_opt: DVector<f64>,
    pub f_opt: f64,
    pub iterations: usize,
    pub converged: bool,
    pub reason: StopReason,
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsParams {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsParams {
    fn default() -> Self {
        BfgsParams {
            max_iters: 100,
            grad_tol: 1e-8,
            c1: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which returns the cost and its gradient at a point.
pub fn minimize<F>(mut f: F, x0: DVector<f64>, params: &BfgsParams) -> Result<OptimizeResult>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let (mut fx, mut g) = f(&x0);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("cost or gradient not finite at the start point (f = {})", fx)));
    }
    let mut x = x0;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;

    loop {
        if inf_norm(&g) < params.grad_tol {
            return Ok(OptimizeResult {
                x_opt: x,
                f_opt: fx,
                iterations,
                converged: true,
                reason: StopReason::GradientTol,
            });
        }
        if iterations >= params.max_iters {
            return Ok(OptimizeResult {
                x_opt: x,
                f_opt: fx,
                iterations,
                converged: false,
                reason: StopReason::MaxIters,
            });
        }

        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            // Not a descent direction; restart from steepest descent.
            h.fill_with_identity();
            p = -g.clone();
            slope = g.dot(&p);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..params.max_backtracks {
            let xn = &x + &p * step;
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + params.c1 * step * slope && fn_ < fx {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= params.shrink;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return Ok(OptimizeResult {
                x_opt: x,
                f_opt: fx,
                iterations,
                converged: false,
                reason: StopReason::LineSearchFail,
            });
        };
        iterations += 1;

        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H' = H − ρ(s·(Hy)ᵀ + (Hy)·sᵀ) + (ρ²·yᵀHy + ρ)·s·sᵀ
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(c: DVector<f64>) -> impl FnMut(&DVector<f64>) -> (f64, DVector<f64>) {
        move |x| {
            let d = x - &c;
            (d.norm_squared(), d * 2.0)
        }
    }

    fn rosenbrock(x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = DVector::from_vec(vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]);
        (f, g)
    }

    #[test]
    fn quadratic_in_few_iterations() {
        let c = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let r = minimize(quadratic(c.clone()), DVector::zeros(3), &BfgsParams::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 3, "{} iterations", r.iterations);
        assert!((r.x_opt - c).amax() < 1e-8);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let x0 = DVector::from_vec(vec![-1.2, 1.0]);
        let r = minimize(rosenbrock, x0, &BfgsParams::default()).unwrap();
        assert!(r.f_opt < 1e-8, "f = {}", r.f_opt);
        assert!(r.iterations <= 100);
        assert!((r.x_opt[0] - 1.0).abs() < 1e-3 && (r.x_opt[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_iterations_returns_start() {
        let x0 = DVector::from_vec(vec![-1.2, 1.0]);
        let params = BfgsParams {
            max_iters: 0,
            ..Default::default()
        };
        let r = minimize(rosenbrock, x0.clone(), &params).unwrap();
        assert_eq!(r.x_opt, x0);
        assert!(!r.converged);
        assert_eq!(r.reason, StopReason::MaxIters);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = minimize(|_x: &DVector<f64>| (f64::NAN, DVector::zeros(1)), DVector::zeros(1), &BfgsParams::default());
        assert!(r.is_err());
    }

    #[test]
    fn accepted_iterates_decrease() {
        let x0 = DVector::from_vec(vec![-1.2, 1.0]);
        let mut f0 = f64::INFINITY;
        for iters in 0..40 {
            let params = BfgsParams {
                max_iters: iters,
                ..Default::default()
            };
            let r = minimize(rosenbrock, x0.clone(), &params).unwrap();
            assert!(r.f_opt <= f0);
            f0 = r.f_opt;
        }
    }
}
