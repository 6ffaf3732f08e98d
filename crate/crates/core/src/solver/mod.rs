//! The BLASSO objective, regularization calibration, a sliding Frank-Wolfe
//! solver and error-bound verdicts.

mod bounds;
mod sliding;

pub use bounds::{
    bound_verdict, effective_radius, s2mix_proposition_bounds, supermix_proposition_bounds, BoundConstants, BoundMode, BoundReport,
    DetectionCheck, EffectiveRadius, PropositionBounds, RadiusSchedule,
};
pub use sliding::{solve, SolveConfig, SolveTrace};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{DiscreteMeasure, MetricTensor, ParameterBox};
use crate::kernels::KernelRef;
use crate::sketching::SketchOperator;

/// What the data term compares `F μ` against.
#[derive(Clone, Debug)]
pub enum Observation {
    /// `y = z ∈ ℂ^m` with the sketched forward operator.
    Sketched { op: SketchOperator, z: Vec<Complex64> },
    /// `y = F ξ` for a known discrete measure `ξ` (for instance `μ⁰` plus a
    /// noise measure), with `⟨F δ_s, F δ_t⟩ = K(s, t)`.
    Population { kernel: KernelRef, target: DiscreteMeasure },
    /// A population observation with no Gram closure; the data term cannot be
    /// evaluated.
    PopulationOpaque,
}

#[derive(Clone, Debug)]
pub struct BlassoProblem {
    pub observation: Observation,
    pub kappa: f64,
    pub domain: ParameterBox,
    /// Metric used for atom merging and region bookkeeping.
    pub metric: MetricTensor,
}

/// `y − F μ`, kept in whichever representation the observation allows.
#[derive(Clone, Debug)]
pub enum Residual {
    Sketched { op: SketchOperator, r: Vec<Complex64> },
    Population { kernel: KernelRef, measure: DiscreteMeasure },
}

impl Residual {
    /// `η(x) = Re ⟨y − F μ, F δ_x⟩`.
    pub fn correlation(&self, x: &[f64]) -> f64 {
        match self {
            Residual::Sketched { op, r } => r.iter().zip(op.atom_features(x)).map(|(a, f)| (a * f.conj()).re).sum(),
            Residual::Population { kernel, measure } => {
                measure.atoms.iter().map(|a| a.w * kernel.profile(&diff(&a.x, x))).sum()
            }
        }
    }

    /// `∇η(x)`.
    pub fn correlation_gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Residual::Sketched { op, r } => op
                .atom_feature_gradients(x)
                .iter()
                .map(|gl| r.iter().zip(gl).map(|(a, f)| (a * f.conj()).re).sum())
                .collect(),
            Residual::Population { kernel, measure } => {
                let d = x.len();
                let mut out = vec![0.0; d];
                for a in &measure.atoms {
                    let g = kernel.derivative(&diff(&a.x, x), 1);
                    for (o, v) in out.iter_mut().zip(&g.data) {
                        *o -= a.w * v;
                    }
                }
                out
            }
        }
    }

    /// `‖y − F μ‖²`.
    pub fn norm_sq(&self) -> f64 {
        match self {
            Residual::Sketched { r, .. } => r.iter().map(|v| v.norm_sqr()).sum(),
            Residual::Population { kernel, measure } => gram_quadratic(kernel, measure),
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn gram_quadratic(kernel: &KernelRef, m: &DiscreteMeasure) -> f64 {
    let mut acc = 0.0;
    for a in &m.atoms {
        for b in &m.atoms {
            acc += a.w * b.w * kernel.profile(&diff(&a.x, &b.x));
        }
    }
    acc.max(0.0)
}

impl BlassoProblem {
    pub fn new(observation: Observation, kappa: f64, domain: ParameterBox, metric: MetricTensor) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return invalid("kappa must be positive and finite");
        }
        let d = domain.dim();
        check_dim(d, metric.dim(), "metric")?;
        match &observation {
            Observation::Sketched { op, z } => {
                check_dim(d, op.d, "sketch operator")?;
                check_dim(op.m, z.len(), "sketch vector")?;
            }
            Observation::Population { kernel, target } => {
                check_dim(d, kernel.dim(), "model kernel")?;
                if let Some(td) = target.dim() {
                    check_dim(d, td, "observation measure")?;
                }
            }
            Observation::PopulationOpaque => {}
        }
        Ok(Self { observation, kappa, domain, metric })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn residual(&self, mu: &DiscreteMeasure) -> Result<Residual> {
        match &self.observation {
            Observation::Sketched { op, z } => {
                let mut r = z.clone();
                for a in &mu.atoms {
                    for (ri, f) in r.iter_mut().zip(op.atom_features(&a.x)) {
                        *ri -= f * a.w;
                    }
                }
                Ok(Residual::Sketched { op: op.clone(), r })
            }
            Observation::Population { kernel, target } => {
                Ok(Residual::Population { kernel: kernel.clone(), measure: target.plus(&mu.scaled(-1.0)) })
            }
            Observation::PopulationOpaque => Err(Error::Unsupported(
                "the population data term needs the observation expressed as F of a discrete measure".into(),
            )),
        }
    }

    /// `½‖y − F μ‖² + κ ‖μ‖_TV`.
    pub fn objective(&self, mu: &DiscreteMeasure) -> Result<f64> {
        mu.check_in_box(&self.domain)?;
        Ok(0.5 * self.residual(mu)?.norm_sq() + self.kappa * mu.tv_norm())
    }

    /// `‖F δ_x‖²`, which does not depend on `x`.
    pub fn atom_energy(&self) -> Result<f64> {
        let d = self.dim();
        match &self.observation {
            Observation::Sketched { op, .. } => Ok(op.atom_norm_sq()),
            Observation::Population { kernel, .. } => Ok(kernel.profile(&vec![0.0; d])),
            Observation::PopulationOpaque => Err(Error::Unsupported("opaque population observation".into())),
        }
    }

    /// Metric of the model kernel, `−∇²K(0)`, which sets the curvature of the
    /// data term in the atom positions.
    pub fn model_curvature(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        match &self.observation {
            Observation::Sketched { op, .. } => {
                let mut g = DMatrix::zeros(d, d);
                for ((w, wt), f) in op.omegas.iter().zip(&op.weights).zip(&op.template_cf) {
                    let m = wt * wt * f.norm_sqr() / op.m as f64;
                    for i in 0..d {
                        for j in 0..d {
                            g[(i, j)] += m * w[i] * w[j];
                        }
                    }
                }
                Ok(g)
            }
            Observation::Population { kernel, .. } => Ok(kernel.metric().matrix().clone()),
            Observation::PopulationOpaque => Err(Error::Unsupported("opaque population observation".into())),
        }
    }

    /// Gram matrix `Re ⟨F δ_{x_j}, F δ_{x_k}⟩` and correlations
    /// `Re ⟨y, F δ_{x_j}⟩` for fixed positions.
    pub(crate) fn weight_system(&self, positions: &[Vec<f64>]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let s = positions.len();
        match &self.observation {
            Observation::Sketched { op, z } => {
                let feats: Vec<Vec<Complex64>> = positions.iter().map(|x| op.atom_features(x)).collect();
                let gram = DMatrix::from_fn(s, s, |j, k| feats[j].iter().zip(&feats[k]).map(|(a, b)| (a * b.conj()).re).sum());
                let b = DVector::from_fn(s, |j, _| z.iter().zip(&feats[j]).map(|(a, f)| (a * f.conj()).re).sum());
                Ok((gram, b))
            }
            Observation::Population { kernel, target } => {
                let gram = DMatrix::from_fn(s, s, |j, k| kernel.profile(&diff(&positions[j], &positions[k])));
                let b = DVector::from_fn(s, |j, _| target.atoms.iter().map(|a| a.w * kernel.profile(&diff(&a.x, &positions[j]))).sum());
                Ok((gram, b))
            }
            Observation::PopulationOpaque => Err(Error::Unsupported("opaque population observation".into())),
        }
    }
}

/// True iff `J(μ̂) ≤ J(μ⁰)` up to a relative slack of `1e-12`.
pub fn near_optimality(problem: &BlassoProblem, mu_hat: &DiscreteMeasure, mu0: &DiscreteMeasure) -> Result<bool> {
    let a = problem.objective(mu_hat)?;
    let b = problem.objective(mu0)?;
    Ok(a <= b + 1e-12 * b.abs().max(f64::MIN_POSITIVE))
}

/// `κ = c_κ γ / √s0`.
pub fn calibrate_kappa(gamma_bound: f64, s0: usize, c_kappa: f64) -> Result<f64> {
    if !(gamma_bound > 0.0) || s0 == 0 || !(c_kappa > 0.0) {
        return invalid("kappa calibration needs gamma > 0, s0 >= 1 and c_kappa > 0");
    }
    Ok(c_kappa * gamma_bound / (s0 as f64).sqrt())
}

/// Choices of the proportionality constant `c_κ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KappaPreset {
    /// `1/(√2 C_switch)`, optimal for the population problem.
    Supermix { c_switch: f64 },
    /// `1/(C'_pivot C_switch)`, optimal for the sketched problem.
    S2mix { c_pivot: f64, c_switch: f64 },
    /// `√s0`, making `κ` independent of the sparsity.
    UnknownSparsity { s0: usize },
    Custom { c_kappa: f64 },
}

impl KappaPreset {
    pub fn c_kappa(&self) -> f64 {
        match *self {
            KappaPreset::Supermix { c_switch } => 1.0 / (2f64.sqrt() * c_switch),
            KappaPreset::S2mix { c_pivot, c_switch } => 1.0 / (c_pivot * c_switch),
            KappaPreset::UnknownSparsity { s0 } => (s0 as f64).sqrt(),
            KappaPreset::Custom { c_kappa } => c_kappa,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_presets() {
        assert_eq!(calibrate_kappa(1.0, 4, 1.0).unwrap(), 0.5);
        let c = KappaPreset::Supermix { c_switch: 2.0 }.c_kappa();
        assert!((calibrate_kappa(0.1, 1, c).unwrap() - 0.1 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        let c = KappaPreset::UnknownSparsity { s0: 9 }.c_kappa();
        assert!((calibrate_kappa(0.7, 9, c).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn opaque_population_is_unsupported() {
        let b = ParameterBox::symmetric(1, 1.0).unwrap();
        let g = MetricTensor::scaled_identity(1, 1.0).unwrap();
        let p = BlassoProblem::new(Observation::PopulationOpaque, 1.0, b, g).unwrap();
        assert!(matches!(p.objective(&DiscreteMeasure::zero()), Err(Error::Unsupported(_))));
    }
}
