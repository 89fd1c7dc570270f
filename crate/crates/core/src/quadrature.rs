//! Gauss-Legendre quadrature with node-doubling refinement.
//!
//! Integrands here are smooth Gaussian densities times bounded oscillatory
//! factors, so composite Gauss-Legendre on a fixed interval converges rapidly;
//! refinement doubles the node count until the result stabilizes.

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Default initial node count for adaptive integration.
pub const DEFAULT_NODES: usize = 64;
/// Node-count ceiling before refinement is declared non-convergent.
pub const MAX_NODES: usize = 2048;

/// Gauss-Legendre rule on `[-1, 1]`.
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule via Newton iteration on Legendre roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "rule needs at least two nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess for the i-th root (descending order).
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        half * acc
    }

    /// Integrates a matrix-valued `f` over `[a, b]`.
    pub fn integrate_matrix(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> CMat) -> CMat {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = f(mid + half * self.nodes[0]).scale(self.weights[0]);
        for (x, w) in self.nodes.iter().zip(&self.weights).skip(1) {
            acc += f(mid + half * x).scale(*w);
        }
        acc.scale(half)
    }
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over `[a, b]`, doubling the node count until the relative
/// change drops below `tol`.
pub fn integrate_adaptive(
    a: f64,
    b: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> f64,
) -> Result<f64> {
    let mut n = DEFAULT_NODES;
    let mut prev = GaussLegendre::new(n).integrate(a, b, &mut f);
    loop {
        n *= 2;
        let next = GaussLegendre::new(n).integrate(a, b, &mut f);
        let change = (next - prev).abs() / next.abs().max(1e-300);
        if change < tol {
            return Ok(next);
        }
        if n >= MAX_NODES {
            return Err(Error::QuadratureNonConvergence { change, tol });
        }
        prev = next;
    }
}

/// Matrix-valued variant of [`integrate_adaptive`]; convergence is measured in
/// relative Frobenius norm.
pub fn integrate_matrix_adaptive(
    a: f64,
    b: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> CMat,
) -> Result<CMat> {
    let mut n = DEFAULT_NODES;
    let mut prev = GaussLegendre::new(n).integrate_matrix(a, b, &mut f);
    loop {
        n *= 2;
        let next = GaussLegendre::new(n).integrate_matrix(a, b, &mut f);
        let change = (&next - &prev).norm() / next.norm().max(1e-300);
        if change < tol {
            return Ok(next);
        }
        if n >= MAX_NODES {
            return Err(Error::QuadratureNonConvergence { change, tol });
        }
        prev = next;
    }
}
