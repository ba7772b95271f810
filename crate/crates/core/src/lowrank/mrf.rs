//! Binary foreground support under an Ising smoothness prior, solved
//! exactly by s–t min-cut.

use super::maxflow::FlowGraph;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrfWeights {
    /// Weight of 4-connected links inside a frame.
    pub w_s: f64,
    /// Weight of links between the same pixel in consecutive frames.
    pub w_t: f64,
    /// Cost of labeling one pixel foreground.
    pub beta: f64,
    /// Smoothness strength.
    pub gamma: f64,
}

impl MrfWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.w_s, self.w_t, self.beta, self.gamma];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("MRF weights must be finite and nonnegative: {:?}", self)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportPrior {
    /// γ·Σ W_pq |s_p − s_q| over neighbor pairs.
    #[default]
    Pairwise,
    /// γ·‖W vec(S)‖₁, which is linear in S and decouples per pixel.
    Linear,
}

/// Frame geometry of the K rows of a window matrix (K = width·height).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        Grid { width, height }
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Visits every neighbor pair once as (row_p, col_p, row_q, col_q, weight).
fn for_each_edge(grid: Grid, n: usize, w: &MrfWeights, mut f: impl FnMut(usize, usize, usize, usize, f64)) {
    for j in 0..n {
        for y in 0..grid.height {
            for x in 0..grid.width {
                let p = y * grid.width + x;
                if x + 1 < grid.width {
                    f(p, j, p + 1, j, w.w_s);
                }
                if y + 1 < grid.height {
                    f(p, j, p + grid.width, j, w.w_s);
                }
                if j + 1 < n {
                    f(p, j, p, j + 1, w.w_t);
                }
            }
        }
    }
}

fn unary(d: &DMatrix<f64>, b: &DMatrix<f64>, m: &DMatrix<bool>, i: usize, j: usize) -> f64 {
    if m[(i, j)] {
        0.5 * (d[(i, j)] - b[(i, j)]).powi(2)
    } else {
        0.0
    }
}

fn check(d: &DMatrix<f64>, b: &DMatrix<f64>, m: &DMatrix<bool>, grid: Grid) -> Result<()> {
    if d.shape() != b.shape() || d.shape() != m.shape() {
        return Err(Error::DimensionMismatch("D, B and M must share a shape".into()));
    }
    if d.nrows() != grid.pixels() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows do not match a {}x{} grid",
            d.nrows(),
            grid.width,
            grid.height
        )));
    }
    Ok(())
}

/// Energy of a labeling under the chosen prior.
pub fn support_energy(
    d: &DMatrix<f64>,
    b: &DMatrix<f64>,
    m: &DMatrix<bool>,
    s: &DMatrix<bool>,
    grid: Grid,
    weights: &MrfWeights,
    prior: SupportPrior,
) -> f64 {
    let (k, n) = d.shape();
    let mut e = 0.0;
    for j in 0..n {
        for i in 0..k {
            e += if s[(i, j)] { weights.beta } else { unary(d, b, m, i, j) };
        }
    }
    match prior {
        SupportPrior::Pairwise => for_each_edge(grid, n, weights, |p, jp, q, jq, w| {
            if s[(p, jp)] != s[(q, jq)] {
                e += weights.gamma * w;
            }
        }),
        SupportPrior::Linear => for_each_edge(grid, n, weights, |p, jp, q, jq, w| {
            // each pair contributes W_pq·s_q to row p and W_qp·s_p to row q
            e += weights.gamma * w * (s[(p, jp)] as u8 + s[(q, jq)] as u8) as f64;
        }),
    }
    e
}

/// Minimizes the support energy exactly.
pub fn update_support(
    d: &DMatrix<f64>,
    b: &DMatrix<f64>,
    m: &DMatrix<bool>,
    grid: Grid,
    weights: &MrfWeights,
    prior: SupportPrior,
) -> Result<DMatrix<bool>> {
    check(d, b, m, grid)?;
    weights.validate()?;
    let (k, n) = d.shape();
    match prior {
        SupportPrior::Linear => {
            let mut degree = DMatrix::<f64>::zeros(k, n);
            for_each_edge(grid, n, weights, |p, jp, q, jq, w| {
                degree[(p, jp)] += w;
                degree[(q, jq)] += w;
            });
            Ok(DMatrix::from_fn(k, n, |i, j| {
                unary(d, b, m, i, j) > weights.beta + weights.gamma * degree[(i, j)]
            }))
        }
        SupportPrior::Pairwise => {
            // Source side = foreground. Cutting s→p pays the background cost,
            // cutting p→t pays β.
            let nodes = k * n;
            let (src, sink) = (nodes, nodes + 1);
            let mut g = FlowGraph::new(nodes + 2);
            let mut scale: f64 = weights.beta;
            for j in 0..n {
                for i in 0..k {
                    let p = j * k + i;
                    let a = unary(d, b, m, i, j);
                    scale = scale.max(a);
                    // Only the difference matters; keep one terminal edge per node.
                    if a > weights.beta {
                        g.add_edge(src, p, a - weights.beta, 0.0);
                    } else if a < weights.beta {
                        g.add_edge(p, sink, weights.beta - a, 0.0);
                    }
                }
            }
            if weights.gamma > 0.0 {
                for_each_edge(grid, n, weights, |p, jp, q, jq, w| {
                    let c = weights.gamma * w;
                    if c > 0.0 {
                        g.add_edge(jp * k + p, jq * k + q, c, c);
                    }
                });
                scale = scale.max(weights.gamma * weights.w_s.max(weights.w_t));
            }
            g.set_epsilon(scale * 1e-13);
            g.max_flow(src, sink);
            let side = g.source_side(src);
            Ok(DMatrix::from_fn(k, n, |i, j| side[j * k + i]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(
        d: &DMatrix<f64>,
        b: &DMatrix<f64>,
        m: &DMatrix<bool>,
        grid: Grid,
        w: &MrfWeights,
        prior: SupportPrior,
    ) -> f64 {
        let (k, n) = d.shape();
        let total = k * n;
        let mut best = f64::INFINITY;
        for bits in 0u64..(1 << total) {
            let s = DMatrix::from_fn(k, n, |i, j| bits >> (j * k + i) & 1 == 1);
            best = best.min(support_energy(d, b, m, &s, grid, w, prior));
        }
        best
    }

    #[test]
    fn exact_background_gives_empty_support() {
        let d = DMatrix::from_element(9, 3, 2.0);
        let m = DMatrix::from_element(9, 3, true);
        let w = MrfWeights {
            w_s: 1.0,
            w_t: 1.0,
            beta: 0.1,
            gamma: 0.1,
        };
        let s = update_support(&d, &d, &m, Grid::new(3, 3), &w, SupportPrior::Pairwise).unwrap();
        assert!(s.iter().all(|&v| !v));
    }

    #[test]
    fn isolated_outlier_pixel_is_foreground() {
        let grid = Grid::new(3, 3);
        let b = DMatrix::from_element(9, 1, 0.0);
        let mut d = b.clone();
        d[(4, 0)] = 3.0;
        let m = DMatrix::from_element(9, 1, true);
        let w = MrfWeights {
            w_s: 1.0,
            w_t: 1.0,
            beta: 1.0,
            gamma: 0.5,
        };
        // ½·9 = 4.5 > β + γ·4 = 3
        let s = update_support(&d, &b, &m, grid, &w, SupportPrior::Pairwise).unwrap();
        let expect = DMatrix::from_fn(9, 1, |i, _| i == 4);
        assert_eq!(s, expect);
        let e = support_energy(&d, &b, &m, &s, grid, &w, SupportPrior::Pairwise);
        assert!((e - brute_force(&d, &b, &m, grid, &w, SupportPrior::Pairwise)).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let grid = Grid::new(3, 2);
        for _ in 0..40 {
            let d = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-2.0..2.0));
            let b = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-2.0..2.0));
            let m = DMatrix::from_fn(6, 2, |_, _| rng.random_bool(0.8));
            let w = MrfWeights {
                w_s: rng.random_range(0.0..2.0),
                w_t: rng.random_range(0.0..2.0),
                beta: rng.random_range(0.0..2.0),
                gamma: rng.random_range(0.0..1.0),
            };
            for prior in [SupportPrior::Pairwise, SupportPrior::Linear] {
                let s = update_support(&d, &b, &m, grid, &w, prior).unwrap();
                let e = support_energy(&d, &b, &m, &s, grid, &w, prior);
                let best = brute_force(&d, &b, &m, grid, &w, prior);
                assert!((e - best).abs() <= 1e-9 * (1.0 + best.abs()), "{:?}: {} vs {}", prior, e, best);
                let zero = DMatrix::from_element(6, 2, false);
                assert!(e <= support_energy(&d, &b, &m, &zero, grid, &w, prior) + 1e-12);
                assert!(e <= support_energy(&d, &b, &m, &m, grid, &w, prior) + 1e-12);
            }
        }
    }

    #[test]
    fn linear_prior_thresholds_per_pixel() {
        let grid = Grid::new(2, 1);
        let d = DMatrix::from_row_slice(2, 1, &[2.0, 1.0]);
        let b = DMatrix::zeros(2, 1);
        let m = DMatrix::from_element(2, 1, true);
        let w = MrfWeights {
            w_s: 1.0,
            w_t: 0.0,
            beta: 0.5,
            gamma: 0.5,
        };
        // unaries 2.0 and 0.5 against threshold 1.0
        let s = update_support(&d, &b, &m, grid, &w, SupportPrior::Linear).unwrap();
        assert_eq!(s.as_slice(), &[true, false]);
    }

    #[test]
    fn negative_weights_rejected() {
        let d = DMatrix::zeros(1, 1);
        let m = DMatrix::from_element(1, 1, true);
        let w = MrfWeights {
            w_s: -1.0,
            w_t: 0.0,
            beta: 0.0,
            gamma: 0.0,
        };
        assert!(update_support(&d, &d, &m, Grid::new(1, 1), &w, SupportPrior::Pairwise).is_err());
    }
}
