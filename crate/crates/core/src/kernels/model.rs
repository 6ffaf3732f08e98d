use nalgebra::DMatrix;

use super::{smoothing_gate, KernelSpec, SpectralSupport, TemplateDistribution, TiKernel};
use crate::error::{invalid, Error, Result};
use crate::geometry::MetricTensor;
use crate::linalg::DerivTensor;
use crate::quadrature::SpectralGrid;

/// Mixture model kernel `λ_τ ⋆ φ ⋆ φ̌`, whose spectral density is
/// `2^{-d} 1_cube(ω) |F[φ](ω)|²` on the cube `[-1/τ, 1/τ]^d`.
///
/// Values and derivatives come from a tensor Gauss-Legendre inverse Fourier
/// transform. Since the density is even, `ρ(h) = ∫ ν(ω) cos(ωᵀh) dω`, and a
/// derivative of order `k` replaces the cosine by `cos(ωᵀh + kπ/2)` times
/// the matching frequency monomial.
#[derive(Clone, Debug)]
pub struct ModelKernel {
    d: usize,
    tau: f64,
    template: TemplateDistribution,
    grid: SpectralGrid,
    /// Quadrature weight times spectral density at each node.
    mass: Vec<f64>,
    metric: MetricTensor,
}

/// Model kernel of a template distribution at bandwidth `tau`. `nodes_per_axis`
/// defaults to 64 for `d ≤ 2` and 32 beyond.
pub fn model_kernel_from_template(
    template: &TemplateDistribution,
    tau: f64,
    d: usize,
    nodes_per_axis: Option<usize>,
) -> Result<ModelKernel> {
    if !(tau > 0.0 && tau.is_finite()) {
        return invalid("bandwidth tau must be positive and finite");
    }
    if d == 0 {
        return invalid("kernel dimension must be positive");
    }
    let per_axis = nodes_per_axis.unwrap_or_else(|| SpectralGrid::default_per_axis(d));
    if per_axis < 2 {
        return Err(Error::Configuration(format!("quadrature grid unset or too coarse ({per_axis} nodes per axis)")));
    }
    let grid = SpectralGrid::new(d, per_axis, 1.0 / tau)?;
    let mass: Vec<f64> = (0..grid.len())
        .map(|q| {
            let w = grid.node(q);
            grid.weights[q] * smoothing_gate(w, tau) * template.characteristic(w).norm_sqr()
        })
        .collect();
    let mut g = DMatrix::zeros(d, d);
    for (q, m) in mass.iter().enumerate() {
        let w = grid.node(q);
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] += m * w[i] * w[j];
            }
        }
    }
    let metric = MetricTensor::new(g)?;
    Ok(ModelKernel { d, tau, template: template.clone(), grid, mass, metric })
}

impl ModelKernel {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn template(&self) -> &TemplateDistribution {
        &self.template
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }
}

impl TiKernel for ModelKernel {
    fn dim(&self) -> usize {
        self.d
    }

    fn profile(&self, h: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (q, m) in self.mass.iter().enumerate() {
            let w = self.grid.node(q);
            let phase: f64 = w.iter().zip(h).map(|(a, b)| a * b).sum();
            acc += m * phase.cos();
        }
        acc
    }

    fn derivative(&self, h: &[f64], order: usize) -> DerivTensor {
        assert!(order <= super::MAX_DERIVATIVE_ORDER);
        let d = self.d;
        let mut out = DerivTensor::zeros(d, order);
        let len = out.data.len();
        let mut idx = vec![0usize; order];
        for (q, m) in self.mass.iter().enumerate() {
            let w = self.grid.node(q);
            let phase: f64 = w.iter().zip(h).map(|(a, b)| a * b).sum();
            let (s, c) = phase.sin_cos();
            let trig = match order % 4 {
                0 => c,
                1 => -s,
                2 => -c,
                _ => s,
            };
            let base = m * trig;
            for flat in 0..len {
                let mut rem = flat;
                for slot in (0..order).rev() {
                    idx[slot] = rem % d;
                    rem /= d;
                }
                out.data[flat] += base * idx.iter().map(|&i| w[i]).product::<f64>();
            }
        }
        out
    }

    fn metric(&self) -> &MetricTensor {
        &self.metric
    }

    fn spectral_density(&self, omega: &[f64]) -> f64 {
        smoothing_gate(omega, self.tau) * self.template.characteristic(omega).norm_sqr()
    }

    fn spectral_support(&self) -> SpectralSupport {
        SpectralSupport::Cube { half_width: 1.0 / self.tau }
    }

    fn is_normalized(&self) -> bool {
        false
    }

    fn spec(&self) -> KernelSpec {
        KernelSpec::Template {
            tau: self.tau,
            template: self.template.spec().clone(),
            d: Some(self.d),
            nodes_per_axis: Some(self.grid.per_axis),
        }
    }
}
