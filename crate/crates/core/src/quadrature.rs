//! Gauss-Legendre rules and tensor grids over the frequency cube.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// found by Newton iteration on the Legendre polynomial from Chebyshev-like
/// initial guesses. Nodes are returned in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss-Legendre grid over `[-h, h]^d`. All nodes are strictly
/// interior to the cube.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub d: usize,
    pub per_axis: usize,
    pub half_width: f64,
    /// Flattened node coordinates, `d` entries per node.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(d: usize, per_axis: usize, half_width: f64) -> Result<Self> {
        if d == 0 {
            return invalid("spectral grid dimension must be positive");
        }
        if per_axis < 2 {
            return invalid("spectral grid needs at least two nodes per axis");
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return invalid("spectral grid half-width must be positive and finite");
        }
        let (x, w) = gauss_legendre(per_axis);
        let total = per_axis.pow(d as u32);
        let mut nodes = Vec::with_capacity(total * d);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut wt = 1.0;
            let start = nodes.len();
            nodes.resize(start + d, 0.0);
            for axis in (0..d).rev() {
                let k = rem % per_axis;
                rem /= per_axis;
                nodes[start + axis] = half_width * x[k];
                wt *= half_width * w[k];
            }
            weights.push(wt);
        }
        Ok(Self { d, per_axis, half_width, nodes, weights })
    }

    /// Default node count for the frequency cube of a model kernel.
    pub fn default_per_axis(d: usize) -> usize {
        if d <= 2 {
            64
        } else {
            32
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.d..(k + 1) * self.d]
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|k| self.weights[k] * f(self.node(k))).sum()
    }
}
