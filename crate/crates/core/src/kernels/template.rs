use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Serialisable description of a template distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemplateSpec {
    /// Isotropic Gaussian with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Product of independent Cauchy laws with scale `alpha`.
    Cauchy { alpha: f64 },
    /// Dirac mass at the origin.
    PointMass,
    /// User-supplied characteristic function, only constructible in code.
    Custom { name: String },
}

type CharFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Elementary density `φ` whose translates form the mixture.
#[derive(Clone)]
pub struct TemplateDistribution {
    spec: TemplateSpec,
    custom: Option<CharFn>,
}

impl fmt::Debug for TemplateDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TemplateDistribution").field("spec", &self.spec).finish()
    }
}

impl TemplateDistribution {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return invalid("gaussian template needs sigma > 0");
        }
        Ok(Self { spec: TemplateSpec::Gaussian { sigma }, custom: None })
    }

    pub fn cauchy(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return invalid("cauchy template needs alpha > 0");
        }
        Ok(Self { spec: TemplateSpec::Cauchy { alpha }, custom: None })
    }

    pub fn point_mass() -> Self {
        Self { spec: TemplateSpec::PointMass, custom: None }
    }

    /// Template known only through its characteristic function. It cannot
    /// be sampled.
    pub fn custom(name: impl Into<String>, cf: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { spec: TemplateSpec::Custom { name: name.into() }, custom: Some(Arc::new(cf)) }
    }

    pub fn from_spec(spec: &TemplateSpec) -> Result<Self> {
        match spec {
            TemplateSpec::Gaussian { sigma } => Self::gaussian(*sigma),
            TemplateSpec::Cauchy { alpha } => Self::cauchy(*alpha),
            TemplateSpec::PointMass => Ok(Self::point_mass()),
            TemplateSpec::Custom { name } => Err(Error::Unsupported(format!(
                "custom template '{name}' needs a characteristic function supplied in code"
            ))),
        }
    }

    pub fn spec(&self) -> &TemplateSpec {
        &self.spec
    }

    /// `F[φ](ω) = E[exp(−i ωᵀ X)]`.
    pub fn characteristic(&self, omega: &[f64]) -> Complex64 {
        match &self.spec {
            TemplateSpec::Gaussian { sigma } => {
                let n2: f64 = omega.iter().map(|w| w * w).sum();
                Complex64::new((-0.5 * sigma * sigma * n2).exp(), 0.0)
            }
            TemplateSpec::Cauchy { alpha } => {
                let n1: f64 = omega.iter().map(|w| w.abs()).sum();
                Complex64::new((-alpha * n1).exp(), 0.0)
            }
            TemplateSpec::PointMass => Complex64::new(1.0, 0.0),
            TemplateSpec::Custom { .. } => (self.custom.as_ref().expect("custom template without function"))(omega),
        }
    }

    pub fn has_sampler(&self) -> bool {
        !matches!(self.spec, TemplateSpec::Custom { .. })
    }

    /// One draw of the template noise in dimension `d`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, d: usize) -> Result<Vec<f64>> {
        match &self.spec {
            TemplateSpec::Gaussian { sigma } => Ok((0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    sigma * z
                })
                .collect()),
            TemplateSpec::Cauchy { alpha } => {
                let law = Cauchy::new(0.0, *alpha).map_err(|e| Error::InvalidArgument(e.to_string()))?;
                Ok((0..d).map(|_| law.sample(rng)).collect())
            }
            TemplateSpec::PointMass => Ok(vec![0.0; d]),
            TemplateSpec::Custom { name } => Err(Error::Unsupported(format!("template '{name}' has no sampler"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn characteristic_functions_at_origin() {
        for t in [TemplateDistribution::gaussian(0.7).unwrap(), TemplateDistribution::cauchy(0.3).unwrap(), TemplateDistribution::point_mass()] {
            assert_eq!(t.characteristic(&[0.0, 0.0]), Complex64::new(1.0, 0.0));
            assert!(t.characteristic(&[1.3, -0.4]).norm() <= 1.0);
        }
    }

    #[test]
    fn empirical_cf_matches_cauchy() {
        let t = TemplateDistribution::cauchy(0.5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let n = 200_000;
        let w = 1.2;
        let mean: f64 = (0..n).map(|_| (w * t.sample(&mut rng, 1).unwrap()[0]).cos()).sum::<f64>() / n as f64;
        assert!((mean - (-0.5f64 * w).exp()).abs() < 0.01);
    }

    #[test]
    fn custom_templates_cannot_be_sampled_or_parsed() {
        let t = TemplateDistribution::custom("flat", |_| Complex64::new(1.0, 0.0));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(t.sample(&mut rng, 1), Err(Error::Unsupported(_))));
        assert!(TemplateDistribution::from_spec(&TemplateSpec::Custom { name: "x".into() }).is_err());
    }
}
