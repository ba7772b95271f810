//! Matrix completion of the K×N background by singular value thresholding.
//!
//! N is tiny (three frames), so the thin SVD of the K×N iterate is taken
//! from the eigen-decomposition of its N×N Gram matrix.

use crate::error::{Error, Result};
use crate::optimizer::{minimize, BfgsParams};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionParams {
    /// Singular value threshold.
    pub alpha: f64,
    pub max_iters: usize,
    /// Relative Frobenius change at which the iteration stops.
    pub tol: f64,
    /// Singular values beyond this count are discarded; `N` gives plain soft-impute.
    pub max_rank: usize,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            alpha: 0.5,
            max_iters: 500,
            tol: 1e-7,
            max_rank: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub b: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative change of the last iteration.
    pub last_change: f64,
}

/// Soft-thresholds the singular values of `x` by `alpha`, keeping at most
/// `max_rank` of them.
pub fn svt(x: &DMatrix<f64>, alpha: f64, max_rank: usize) -> DMatrix<f64> {
    let n = x.ncols();
    let gram = x.transpose() * x;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0).sqrt();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for &k in order.iter().take(max_rank) {
        let sigma = eig.eigenvalues[k].max(0.0).sqrt();
        if sigma <= top * 1e-12 || sigma <= alpha {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        g += (v * v.transpose()) * ((sigma - alpha) / sigma);
    }
    x * g
}

fn check(d: &DMatrix<f64>, omega: &DMatrix<bool>) -> Result<()> {
    if d.shape() != omega.shape() {
        return Err(Error::DimensionMismatch(format!(
            "data is {:?}, observation mask is {:?}",
            d.shape(),
            omega.shape()
        )));
    }
    for j in 0..omega.ncols() {
        if !omega.column(j).iter().any(|&o| o) {
            return Err(Error::EmptyObservation { column: j });
        }
    }
    Ok(())
}

fn column_mean_fill(d: &DMatrix<f64>, omega: &DMatrix<bool>) -> DMatrix<f64> {
    let (k, n) = d.shape();
    let mut x = DMatrix::<f64>::zeros(k, n);
    for j in 0..n {
        let (mut sum, mut cnt) = (0.0, 0usize);
        for i in 0..k {
            if omega[(i, j)] {
                sum += d[(i, j)];
                cnt += 1;
            }
        }
        let mean = sum / cnt as f64;
        for i in 0..k {
            x[(i, j)] = if omega[(i, j)] { d[(i, j)] } else { mean };
        }
    }
    x
}

/// Solves (A + ridge·I)·x = rhs for a small SPD system, nudging the ridge
/// when A is singular.
fn small_solve(mut a: DMatrix<f64>, rhs: DVector<f64>, ridge: f64) -> DVector<f64> {
    let r = a.nrows();
    let scale = (a.trace() / r as f64).abs().max(1e-300);
    let mut extra = ridge;
    for _ in 0..4 {
        let mut m = a.clone();
        for t in 0..r {
            m[(t, t)] += extra;
        }
        if let Some(ch) = m.cholesky() {
            return ch.solve(&rhs);
        }
        extra = extra.max(scale * 1e-12) * 1e3;
    }
    for t in 0..r {
        a[(t, t)] += extra;
    }
    a.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(r))
}

/// Row factors of B = U·Vᵀ for fixed V, each a ridge solve over the row's
/// observed entries, with the value and V-gradient of
/// ½‖P_Ω(D − UVᵀ)‖² + α/2·(‖U‖² + ‖V‖²) at those optimal rows.
fn project_rows(d: &DMatrix<f64>, omega: &DMatrix<bool>, v: &DMatrix<f64>, alpha: f64) -> (DMatrix<f64>, f64, DMatrix<f64>) {
    let (k, n) = d.shape();
    let r = v.ncols();
    let mut u = DMatrix::<f64>::zeros(k, r);
    let mut grad = v * alpha;
    let mut cost = 0.5 * alpha * v.norm_squared();
    for i in 0..k {
        let mut a = DMatrix::<f64>::zeros(r, r);
        let mut rhs = DVector::<f64>::zeros(r);
        let mut any = false;
        for j in 0..n {
            if omega[(i, j)] {
                let vj = v.row(j).transpose();
                a += &vj * vj.transpose();
                rhs += vj * d[(i, j)];
                any = true;
            }
        }
        if !any {
            continue;
        }
        let ui = small_solve(a, rhs, alpha);
        cost += 0.5 * alpha * ui.norm_squared();
        for j in 0..n {
            if omega[(i, j)] {
                let res = d[(i, j)] - v.row(j).dot(&ui.transpose());
                cost += 0.5 * res * res;
                for c in 0..r {
                    grad[(j, c)] -= res * ui[c];
                }
            }
        }
        u.set_row(i, &ui.transpose());
    }
    (u, cost, grad)
}

/// Minimizes ½‖P_Ω(D − UVᵀ)‖² + α/2·(‖U‖² + ‖V‖²) over V with U
/// eliminated row by row (variable projection), by BFGS. Balanced
/// minimizers of this form are those of the nuclear-norm objective under
/// the rank cap. Starts from the rank-r projection of `start`.
fn factorized_fit(
    d: &DMatrix<f64>,
    omega: &DMatrix<bool>,
    start: &DMatrix<f64>,
    params: &CompletionParams,
    budget: usize,
) -> (DMatrix<f64>, usize) {
    let n = d.ncols();
    let r = params.max_rank.min(n);
    let gram = start.transpose() * start;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    // V = V_r·Σ^½, so that UVᵀ is the rank-r projection of X at U = X·V_r·Σ^-½.
    let mut v0 = DMatrix::<f64>::zeros(n, r);
    for (c, &e) in order.iter().take(r).enumerate() {
        let sigma = eig.eigenvalues[e].max(0.0).sqrt().max(1e-300);
        v0.set_column(c, &(eig.eigenvectors.column(e) * sigma.sqrt()));
    }
    let scale = omega.zip_map(d, |o, x| if o { x * x } else { 0.0 }).sum().max(1e-300);
    let bfgs = BfgsParams {
        max_iters: budget,
        grad_tol: 1e-3 * params.tol * scale,
        ..Default::default()
    };
    let cost = |x: &DVector<f64>| {
        let v = DMatrix::from_column_slice(n, r, x.as_slice());
        let (_, f, g) = project_rows(d, omega, &v, params.alpha);
        (f, DVector::from_column_slice(g.as_slice()))
    };
    let x0 = DVector::from_column_slice(v0.as_slice());
    let (v, iterations) = match minimize(cost, x0, &bfgs) {
        Ok(res) => (DMatrix::from_column_slice(n, r, res.x_opt.as_slice()), res.iterations.max(1)),
        Err(_) => (v0, 1),
    };
    let (u, _, _) = project_rows(d, omega, &v, params.alpha);
    (&u * v.transpose(), iterations)
}

/// Completes D from its entries on Ω. A factorized warm start is followed
/// by SVT iterations B ← SVT_α(P_Ω(D) + P_Ω^c(B)) until the relative change
/// drops below `tol`; both phases count toward `max_iters`.
pub fn complete_background(d: &DMatrix<f64>, omega: &DMatrix<bool>, params: &CompletionParams) -> Result<Completion> {
    check(d, omega)?;
    if !(params.alpha >= 0.0) || params.max_rank == 0 {
        return Err(Error::InvalidInput("alpha must be nonnegative and max_rank positive".into()));
    }
    let (k, n) = d.shape();
    let mut x = column_mean_fill(d, omega);
    let warm_budget = params.max_iters.saturating_sub(1) / 2;
    let (mut b, mut iterations) = if params.max_rank < n && warm_budget > 0 {
        factorized_fit(d, omega, &x, params, warm_budget)
    } else {
        (svt(&x, params.alpha, params.max_rank), 1)
    };
    let mut last_change = f64::INFINITY;
    while iterations < params.max_iters {
        for j in 0..n {
            for i in 0..k {
                x[(i, j)] = if omega[(i, j)] { d[(i, j)] } else { b[(i, j)] };
            }
        }
        let next = svt(&x, params.alpha, params.max_rank);
        let norm = next.norm();
        let change = (&next - &b).norm();
        last_change = if norm > 0.0 { change / norm } else { change };
        b = next;
        iterations += 1;
        if last_change < params.tol {
            return Ok(Completion {
                b,
                iterations,
                converged: true,
                last_change,
            });
        }
    }
    Ok(Completion {
        b,
        iterations,
        converged: false,
        last_change,
    })
}

/// Sample standard deviation of D − B over the observed entries.
pub fn residual_sigma(d: &DMatrix<f64>, b: &DMatrix<f64>, omega: &DMatrix<bool>) -> Result<f64> {
    if d.shape() != b.shape() || d.shape() != omega.shape() {
        return Err(Error::DimensionMismatch("D, B and Omega must share a shape".into()));
    }
    let r: Vec<f64> = d
        .iter()
        .zip(b.iter())
        .zip(omega.iter())
        .filter(|(_, &o)| o)
        .map(|((d, b), _)| d - b)
        .collect();
    if r.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "residual spread needs at least 2 observed entries, got {}",
            r.len()
        )));
    }
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let ss: f64 = r.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((ss / (r.len() - 1) as f64).sqrt())
}
