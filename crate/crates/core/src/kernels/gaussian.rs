use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{KernelSpec, SpectralSupport, TiKernel};
use crate::error::{invalid, Result};
use crate::geometry::MetricTensor;
use crate::linalg::DerivTensor;

/// Gaussian kernel `Θ_Ω(u) = exp(−½ uᵀ Ω⁻¹ u)`. Its metric is `Ω⁻¹` and its
/// spectral density is the `N(0, Ω⁻¹)` density.
#[derive(Clone, Debug)]
pub struct GaussianKernel {
    omega: DMatrix<f64>,
    precision: DMatrix<f64>,
    metric: MetricTensor,
    spectral_norm: f64,
}

impl GaussianKernel {
    pub fn new(omega: DMatrix<f64>) -> Result<Self> {
        let d = omega.nrows();
        if d == 0 || omega.ncols() != d {
            return invalid("gaussian kernel needs a square covariance");
        }
        let precision = omega
            .clone()
            .try_inverse()
            .ok_or_else(|| crate::Error::InvalidArgument("gaussian covariance is singular".into()))?;
        let metric = MetricTensor::new(precision.clone())?;
        let det = omega.determinant();
        if !(det > 0.0) {
            return invalid("gaussian covariance must be positive definite");
        }
        let spectral_norm = det.sqrt() / (2.0 * PI).powf(d as f64 / 2.0);
        let precision = metric.matrix().clone();
        Ok(Self { omega, precision, metric, spectral_norm })
    }

    pub fn isotropic(d: usize, scale: f64) -> Result<Self> {
        Self::new(DMatrix::identity(d, d) * (scale * scale))
    }

    fn quad(&self, h: &[f64]) -> f64 {
        let d = h.len();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += h[i] * self.precision[(i, j)] * h[j];
            }
        }
        acc
    }
}

/// Sum over perfect matchings of `idx` into singletons (weight `−y_i`) and
/// pairs (weight `−A_ij`): the derivative of `exp(q)` for a quadratic `q`.
fn gauss_poly(idx: &[usize], y: &[f64], a: &DMatrix<f64>) -> f64 {
    match idx.split_first() {
        None => 1.0,
        Some((&first, rest)) => {
            let mut total = -y[first] * gauss_poly(rest, y, a);
            for k in 0..rest.len() {
                let mut remaining: Vec<usize> = rest.to_vec();
                let partner = remaining.remove(k);
                total -= a[(first, partner)] * gauss_poly(&remaining, y, a);
            }
            total
        }
    }
}

impl TiKernel for GaussianKernel {
    fn dim(&self) -> usize {
        self.omega.nrows()
    }

    fn profile(&self, h: &[f64]) -> f64 {
        (-0.5 * self.quad(h)).exp()
    }

    fn derivative(&self, h: &[f64], order: usize) -> DerivTensor {
        assert!(order <= super::MAX_DERIVATIVE_ORDER);
        let d = self.dim();
        let y: Vec<f64> = (0..d).map(|i| (0..d).map(|j| self.precision[(i, j)] * h[j]).sum()).collect();
        let base = self.profile(h);
        DerivTensor::from_fn(d, order, |idx| base * gauss_poly(idx, &y, &self.precision))
    }

    fn metric(&self) -> &MetricTensor {
        &self.metric
    }

    fn spectral_density(&self, omega: &[f64]) -> f64 {
        let d = self.dim();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += omega[i] * self.omega[(i, j)] * omega[j];
            }
        }
        self.spectral_norm * (-0.5 * q).exp()
    }

    fn spectral_support(&self) -> SpectralSupport {
        SpectralSupport::Unbounded
    }

    fn is_normalized(&self) -> bool {
        true
    }

    /// In Fisher-Rao coordinates the profile is `exp(−|u|²/2)`; its k-th
    /// derivative along a unit direction is a Hermite polynomial in `|u|`
    /// times the Gaussian, bounded termwise by the matching counts. The
    /// bound is monotone in the radius once `r ≥ k + 1`.
    fn far_tail_bound(&self, fr_radius: f64, order: usize) -> Option<f64> {
        let k = order as i32;
        if fr_radius < (order as f64 + 1.0) {
            return None;
        }
        let mut poly = 0.0;
        let mut j = 0;
        while 2 * j <= k {
            let count = factorial(k) / (factorial(j) * factorial(k - 2 * j) * 2f64.powi(j));
            poly += count * fr_radius.powi(k - 2 * j);
            j += 1;
        }
        Some(poly * (-0.5 * fr_radius * fr_radius).exp())
    }

    fn spec(&self) -> KernelSpec {
        let d = self.dim();
        KernelSpec::Gaussian {
            tau: None,
            omega: Some((0..d).map(|i| (0..d).map(|j| self.omega[(i, j)]).collect()).collect()),
            d: Some(d),
        }
    }
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(|v| v as f64).product()
}
