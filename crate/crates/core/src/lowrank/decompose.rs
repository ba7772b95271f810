//! Alternating background completion and support estimation over a frame window.

use super::completion::{complete_background, residual_sigma, CompletionParams};
use super::mrf::{support_energy, update_support, Grid, MrfWeights, SupportPrior};
use crate::error::{Error, Result};
use log::debug;
use nalgebra::DMatrix;

/// How β and γ are chosen at each outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightRule {
    /// β = beta_per_var·max(σ̂, sigma_floor)², γ = gamma_per_beta·β.
    Scaled {
        beta_per_var: f64,
        gamma_per_beta: f64,
        sigma_floor: f64,
    },
    Fixed { beta: f64, gamma: f64 },
}

impl WeightRule {
    pub fn standard() -> Self {
        WeightRule::Scaled {
            beta_per_var: 0.5,
            gamma_per_beta: 1.0,
            sigma_floor: 0.0,
        }
    }

    /// Foreground only where the residual clears about three standard
    /// deviations, with weak smoothing. Under the pairwise prior the
    /// standard profile prices a pixel at its mean noise energy, so labeling
    /// everything foreground costs no more than labeling nothing.
    pub fn conservative() -> Self {
        WeightRule::Scaled {
            beta_per_var: 4.5,
            gamma_per_beta: 0.05,
            sigma_floor: 0.0,
        }
    }

    /// Profile for scenes with small intensity variations.
    pub fn low_contrast() -> Self {
        WeightRule::Scaled {
            beta_per_var: 0.01,
            gamma_per_beta: 0.005,
            sigma_floor: 0.0,
        }
    }

    pub fn beta_gamma(&self, sigma: f64) -> (f64, f64) {
        match *self {
            WeightRule::Scaled {
                beta_per_var,
                gamma_per_beta,
                sigma_floor,
            } => {
                let s = sigma.max(sigma_floor);
                let beta = beta_per_var * s * s;
                (beta, gamma_per_beta * beta)
            }
            WeightRule::Fixed { beta, gamma } => (beta, gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeParams {
    pub completion: CompletionParams,
    pub w_s: f64,
    pub w_t: f64,
    pub rule: WeightRule,
    pub outer_iters: usize,
    pub prior: SupportPrior,
    /// Refit the background without thresholding (same rank cap) before
    /// each support update and at the end, removing the shrinkage bias of
    /// the nuclear-norm term.
    pub debias: bool,
}

impl Default for DecomposeParams {
    fn default() -> Self {
        DecomposeParams {
            completion: CompletionParams::default(),
            w_s: 20.0,
            w_t: 20.0,
            rule: WeightRule::standard(),
            outer_iters: 10,
            prior: SupportPrior::Pairwise,
            debias: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub b: DMatrix<f64>,
    pub s: DMatrix<bool>,
    pub omega: DMatrix<bool>,
    pub outer_iterations: usize,
    pub completion_iterations: usize,
    /// Objective after each outer iteration.
    pub objective: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn observed(m: &DMatrix<bool>, s: &DMatrix<bool>) -> DMatrix<bool> {
    m.zip_map(s, |m, s| m && !s)
}

pub fn nuclear_norm(b: &DMatrix<f64>) -> f64 {
    b.singular_values().sum()
}

/// Data fit on Ω + α‖B‖_* + β‖S‖₁ + smoothness, with Ω = M ∧ ¬S.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    d: &DMatrix<f64>,
    b: &DMatrix<f64>,
    s: &DMatrix<bool>,
    m: &DMatrix<bool>,
    grid: Grid,
    alpha: f64,
    weights: &MrfWeights,
    prior: SupportPrior,
) -> f64 {
    // support_energy already holds ½‖P_Ω(D − B)‖² + β‖S‖₁ + smoothness.
    support_energy(d, b, m, s, grid, weights, prior) + alpha * nuclear_norm(b)
}

/// Splits the window D into a low-rank background and a sparse support.
/// The first completion trusts every well-exposed entry.
pub fn decompose(d: &DMatrix<f64>, m: &DMatrix<bool>, grid: Grid, params: &DecomposeParams) -> Result<Decomposition> {
    if d.shape() != m.shape() {
        return Err(Error::DimensionMismatch("D and M must share a shape".into()));
    }
    if params.outer_iters == 0 {
        return Err(Error::InvalidInput("at least one outer iteration is required".into()));
    }
    let (k, n) = d.shape();
    let mut s = DMatrix::from_element(k, n, false);
    let mut b = DMatrix::zeros(k, n);
    let mut previous: Option<DMatrix<bool>> = None;
    let mut objective_trace = Vec::new();
    let mut sigma_trace = Vec::new();
    let mut completion_iterations = 0;
    let mut outer = 0;

    let refit = CompletionParams {
        alpha: 0.0,
        ..params.completion
    };
    while outer < params.outer_iters {
        let omega = observed(m, &s);
        let completion = match complete_background(d, &omega, &params.completion) {
            Ok(c) => c,
            Err(Error::EmptyObservation { column }) if outer > 0 => {
                debug!("column {} lost all observations, keeping the previous support", column);
                s = previous.take().expect("set after the first iteration");
                break;
            }
            Err(e) => return Err(e),
        };
        completion_iterations += completion.iterations;
        let shrunk = completion.b;
        b = shrunk.clone();
        if params.debias {
            // the support step sees the unshrunk fit; the shrinkage bias is
            // proportional to the data and would read as structured residual
            let c = complete_background(d, &omega, &refit)?;
            completion_iterations += c.iterations;
            b = c.b;
        }
        let sigma = residual_sigma(d, &b, &omega).unwrap_or(0.0);
        let (beta, gamma) = params.rule.beta_gamma(sigma);
        let weights = MrfWeights {
            w_s: params.w_s,
            w_t: params.w_t,
            beta,
            gamma,
        };
        let next = update_support(d, &b, m, grid, &weights, params.prior)?;
        outer += 1;
        objective_trace.push(objective(
            d,
            &shrunk,
            &next,
            m,
            grid,
            params.completion.alpha,
            &weights,
            params.prior,
        ));
        sigma_trace.push(sigma);
        debug!(
            "outer {}: sigma {:.4e} beta {:.4e} support {}",
            outer,
            sigma,
            beta,
            next.iter().filter(|&&v| v).count()
        );
        let unchanged = next == s;
        previous = Some(std::mem::replace(&mut s, next));
        if unchanged {
            break;
        }
    }

    let omega = observed(m, &s);
    if params.debias && (0..n).all(|j| omega.column(j).iter().any(|&o| o)) {
        let c = complete_background(d, &omega, &refit)?;
        completion_iterations += c.iterations;
        b = c.b;
    }
    Ok(Decomposition {
        b,
        s,
        omega,
        outer_iterations: outer,
        completion_iterations,
        objective: objective_trace,
        sigma: sigma_trace,
    })
}
