//! Gauss-Legendre quadrature grids and weighted-sum integration.

use super::NumericsError;

/// Nodes and positive weights for integration over a finite interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Gauss-Legendre rule with `n` nodes mapped onto [a, b].
    ///
    /// Nodes are Newton-refined zeros of the Legendre polynomial P_n.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self, NumericsError> {
        if n == 0 {
            return Err(NumericsError::BadQuadrature("need at least one node".into()));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(NumericsError::BadQuadrature(format!(
                "need finite a < b, got a={a}, b={b}"
            )));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let (xm, xl) = (0.5 * (b + a), 0.5 * (b - a));
        for i in 0..m {
            // Tricomi initial guess for the i-th zero.
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence to get P_n(z) and P'_n(z).
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = xm - xl * z;
            nodes[n - 1 - i] = xm + xl * z;
            let w = 2.0 * xl / ((1.0 - z * z) * pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(Self { nodes, weights })
    }

    /// Builds a grid from explicit nodes/weights, enforcing the invariants.
    pub fn from_parts(
        nodes: Vec<f64>,
        weights: Vec<f64>,
        measure: f64,
    ) -> Result<Self, NumericsError> {
        if nodes.len() != weights.len() {
            return Err(NumericsError::BadQuadrature(
                "node and weight counts differ".into(),
            ));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(NumericsError::BadQuadrature("weights must be positive".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - measure).abs() > 1e-12 * measure.abs() {
            return Err(NumericsError::BadQuadrature(format!(
                "weights sum {sum} does not match domain measure {measure}"
            )));
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total measure of the integration domain (sum of weights).
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Weighted sum of `f` over the grid; non-finite samples are an error.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    grid: &QuadratureGrid,
) -> Result<f64, NumericsError> {
    let mut acc = 0.0;
    for (&x, &w) in grid.nodes.iter().zip(&grid.weights) {
        let v = f(x);
        if !v.is_finite() {
            return Err(NumericsError::NonFiniteIntegrand(x));
        }
        acc += w * v;
    }
    Ok(acc)
}
