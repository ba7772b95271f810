use super::LocalSample;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Rows [1, Δx, Δy, Δt] of the local linear model.
pub fn design_matrix(samples: &[LocalSample]) -> DMatrix<f64> {
    DMatrix::from_fn(samples.len(), 4, |i, j| if j == 0 { 1.0 } else { samples[i].offset[j - 1] })
}

/// β̂ = (XᵀΛX + εI)⁻¹ XᵀΛy with Λ = diag(weights).
pub fn solve_ridge(x: &DMatrix<f64>, weights: &[f64], y: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
    let (p, m) = x.shape();
    if weights.len() != p || y.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{} rows, {} weights, {} targets",
            p,
            weights.len(),
            y.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || !(eps >= 0.0) {
        return Err(Error::InvalidInput("weights and ridge must be nonnegative".into()));
    }
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for i in 0..p {
        let row = x.row(i);
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        a += row.transpose() * row * w;
        rhs += row.transpose() * (w * y[i]);
    }
    for d in 0..m {
        a[(d, d)] += eps;
    }
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(&rhs));
    }
    if eps == 0.0 {
        return Err(Error::Numerical("singular normal matrix".into()));
    }
    // Positive ridge keeps the system definite; Cholesky can still trip on round-off.
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular normal matrix".into()))
}
