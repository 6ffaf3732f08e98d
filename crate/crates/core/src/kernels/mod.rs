//! Translation-invariant kernels `K(s, t) = ρ(s − t)`.
//!
//! Every kernel exposes its profile `ρ`, the full derivative tensors
//! `∇^k ρ` up to `k = 4`, its constant metric `g = −∇²ρ(0)` and its spectral
//! density `ν = F[ρ]/(2π)^d`. Covariant derivatives of a translation
//! invariant kernel reduce to signed Euclidean derivatives of the profile:
//! `K^{(i,j)}(s, t) = (−1)^j ∇^{i+j} ρ(s − t)`.

mod gaussian;
mod model;
mod sinc;
mod template;

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use gaussian::GaussianKernel;
pub use model::{model_kernel_from_template, ModelKernel};
pub use sinc::{smoothing_gate, SincKind, SincProductKernel};
pub use template::{TemplateDistribution, TemplateSpec};

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::MetricTensor;
use crate::linalg::DerivTensor;

/// Highest derivative order any kernel provides.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

/// Where the spectral density can be nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralSupport {
    /// The closed cube `[-half_width, half_width]^d`.
    Cube { half_width: f64 },
    Unbounded,
}

pub trait TiKernel: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// `ρ(h)`.
    fn profile(&self, h: &[f64]) -> f64;

    /// Full tensor `∇^order ρ(h)`; callers guarantee `order ≤ 4`.
    fn derivative(&self, h: &[f64], order: usize) -> DerivTensor;

    fn metric(&self) -> &MetricTensor;

    /// `ν(ω) = F[ρ](ω) / (2π)^d`.
    fn spectral_density(&self, omega: &[f64]) -> f64;

    fn spectral_support(&self) -> SpectralSupport;

    /// Whether `ρ(0) = 1`.
    fn is_normalized(&self) -> bool;

    /// Upper bound on the metric-normalised operator norm of `∇^order ρ(h)`
    /// valid for every offset with Fisher-Rao length at least `fr_radius`,
    /// when the kernel has a known decay law.
    fn far_tail_bound(&self, _fr_radius: f64, _order: usize) -> Option<f64> {
        None
    }

    /// Serialisable descriptor of the kernel.
    fn spec(&self) -> KernelSpec;
}

pub type KernelRef = Arc<dyn TiKernel>;

fn offset(s: &[f64], t: &[f64]) -> Vec<f64> {
    s.iter().zip(t).map(|(a, b)| a - b).collect()
}

fn check_pair(k: &dyn TiKernel, s: &[f64], t: &[f64]) -> Result<()> {
    check_dim(k.dim(), s.len(), "kernel first argument")?;
    check_dim(k.dim(), t.len(), "kernel second argument")
}

/// `K(s, t) = ρ(s − t)`.
pub fn eval(k: &dyn TiKernel, s: &[f64], t: &[f64]) -> Result<f64> {
    check_pair(k, s, t)?;
    Ok(k.profile(&offset(s, t)))
}

/// Tensor of `K^{(i,j)}(s, t) = (−1)^j ∇^{i+j} ρ(s − t)`, slots ordered with
/// the `i` first-argument directions before the `j` second-argument ones.
pub fn covariant_tensor(k: &dyn TiKernel, s: &[f64], t: &[f64], i: usize, j: usize) -> Result<DerivTensor> {
    check_pair(k, s, t)?;
    if i + j > MAX_DERIVATIVE_ORDER {
        return Err(Error::Unsupported(format!("derivative order {} exceeds {MAX_DERIVATIVE_ORDER}", i + j)));
    }
    let mut tensor = k.derivative(&offset(s, t), i + j);
    if j % 2 == 1 {
        tensor.data.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(tensor)
}

/// `K^{(i,j)}(s, t)[U_1, …, U_i, V_1, …, V_j]`.
pub fn covariant_derivative(
    k: &dyn TiKernel,
    s: &[f64],
    t: &[f64],
    i: usize,
    j: usize,
    us: &[Vec<f64>],
    vs: &[Vec<f64>],
) -> Result<f64> {
    if us.len() != i || vs.len() != j {
        return invalid(format!("expected {i} first-argument and {j} second-argument tangent vectors"));
    }
    for v in us.iter().chain(vs) {
        check_dim(k.dim(), v.len(), "tangent vector")?;
    }
    let tensor = covariant_tensor(k, s, t, i, j)?;
    let slots: Vec<&[f64]> = us.iter().chain(vs).map(|v| v.as_slice()).collect();
    Ok(tensor.contract(&slots))
}

/// Tensor `∇^order ρ(h)` with every slot precomposed by `g^{-1/2}`.
pub fn normalized_derivative(k: &dyn TiKernel, h: &[f64], order: usize) -> DerivTensor {
    k.derivative(h, order).precompose(k.metric().inv_sqrt())
}

/// Metric-normalised operator norm `‖K^{(i,j)}(s, t)‖`.
pub fn operator_norm(k: &dyn TiKernel, s: &[f64], t: &[f64], i: usize, j: usize) -> Result<f64> {
    check_pair(k, s, t)?;
    if i + j > 3 {
        return Err(Error::Unsupported("operator norms are provided up to total order 3".into()));
    }
    Ok(normalized_derivative(k, &offset(s, t), i + j).operator_norm())
}

pub fn spectral_density(k: &dyn TiKernel, omega: &[f64]) -> Result<f64> {
    check_dim(k.dim(), omega.len(), "frequency")?;
    Ok(k.spectral_density(omega))
}

/// Kernel configuration as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `Ψ_τ(u) = Π sinc⁴(u_j / (4τ))`.
    Sinc4 {
        tau: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
    },
    /// Smoothing kernel `λ_τ(u) = τ^{-d} Π sinc(u_j / τ)`.
    Sinc {
        tau: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
    },
    /// `exp(−½ uᵀ Ω⁻¹ u)`; `omega` defaults to `tau² Id`.
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
    },
    /// Mixture model kernel `λ_τ ⋆ φ ⋆ φ̌` of a template distribution.
    Template {
        tau: f64,
        template: TemplateSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes_per_axis: Option<usize>,
    },
}

impl KernelSpec {
    fn declared_dim(&self) -> Option<usize> {
        match self {
            KernelSpec::Sinc4 { d, .. } | KernelSpec::Sinc { d, .. } | KernelSpec::Template { d, .. } => *d,
            KernelSpec::Gaussian { d, omega, .. } => d.or_else(|| omega.as_ref().map(|o| o.len())),
        }
    }

    /// Bandwidth parameter, when the kernel has one.
    pub fn tau(&self) -> Option<f64> {
        match self {
            KernelSpec::Sinc4 { tau, .. } | KernelSpec::Sinc { tau, .. } | KernelSpec::Template { tau, .. } => Some(*tau),
            KernelSpec::Gaussian { tau, .. } => *tau,
        }
    }

    /// Build the kernel. `d_override` wins over the dimension in the spec;
    /// with neither, dimension 1 is used.
    pub fn build(&self, d_override: Option<usize>) -> Result<KernelRef> {
        let d = d_override.or(self.declared_dim()).unwrap_or(1);
        if let (Some(a), Some(b)) = (d_override, self.declared_dim()) {
            if a != b {
                return invalid(format!("kernel dimension {b} conflicts with requested dimension {a}"));
            }
        }
        Ok(match self {
            KernelSpec::Sinc4 { tau, .. } => Arc::new(SincProductKernel::sinc4(d, *tau)?),
            KernelSpec::Sinc { tau, .. } => Arc::new(SincProductKernel::smoothing(d, *tau)?),
            KernelSpec::Gaussian { tau, omega, .. } => {
                let m = match (omega, tau) {
                    (Some(rows), _) => {
                        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                            return invalid("gaussian omega must be a d×d matrix");
                        }
                        nalgebra::DMatrix::from_fn(d, d, |i, j| rows[i][j])
                    }
                    (None, Some(t)) => nalgebra::DMatrix::identity(d, d) * (t * t),
                    (None, None) => nalgebra::DMatrix::identity(d, d),
                };
                Arc::new(GaussianKernel::new(m)?)
            }
            KernelSpec::Template { tau, template, nodes_per_axis, .. } => {
                let tpl = TemplateDistribution::from_spec(template)?;
                Arc::new(model_kernel_from_template(&tpl, *tau, d, *nodes_per_axis)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip() {
        let s = r#"{"kind":"template","tau":1.0,"template":{"kind":"gaussian","sigma":0.5}}"#;
        let spec: KernelSpec = serde_json::from_str(s).unwrap();
        let k = spec.build(Some(1)).unwrap();
        assert_eq!(k.dim(), 1);
        let g: KernelSpec = serde_json::from_str(r#"{"kind":"gaussian","omega":[[2.0,0.0],[0.0,1.0]]}"#).unwrap();
        assert_eq!(g.build(None).unwrap().dim(), 2);
        assert!(g.build(Some(3)).is_err());
    }

    #[test]
    fn order_above_four_is_unsupported() {
        let k = SincProductKernel::sinc4(1, 1.0).unwrap();
        assert!(matches!(covariant_tensor(&k, &[0.0], &[0.1], 3, 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn hessian_sign_identities() {
        let k = SincProductKernel::sinc4(2, 1.0).unwrap();
        let (s, t) = ([0.3, -1.1], [0.9, 0.4]);
        let h20 = covariant_tensor(&k, &s, &t, 2, 0).unwrap();
        let h02 = covariant_tensor(&k, &s, &t, 0, 2).unwrap();
        let h11 = covariant_tensor(&k, &s, &t, 1, 1).unwrap();
        for q in 0..4 {
            assert_eq!(h20.data[q], h02.data[q]);
            assert_eq!(h20.data[q], -h11.data[q]);
        }
    }

    #[test]
    fn mixed_derivative_at_origin_is_metric() {
        let tau = 0.7;
        let k = SincProductKernel::sinc4(2, tau).unwrap();
        let e1 = vec![1.0, 0.0];
        let v = covariant_derivative(&k, &[0.2, 0.2], &[0.2, 0.2], 1, 1, &[e1.clone()], &[e1]).unwrap();
        assert!((v - 1.0 / (12.0 * tau * tau)).abs() < 1e-15);
        let g = operator_norm(&k, &[0.0, 0.0], &[0.0, 0.0], 1, 1).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }
}
