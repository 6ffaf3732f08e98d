use nalgebra::DMatrix;

use super::{KernelSpec, SpectralSupport, TiKernel};
use crate::error::{invalid, Result};
use crate::geometry::MetricTensor;
use crate::linalg::DerivTensor;
use crate::special::{jet_pow, jet_rescale, sinc_jet, sinc4_spectral_1d, Jet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SincKind {
    /// Normalised pivot `Π sinc⁴(u_j/(4τ))`.
    Sinc4,
    /// Smoothing kernel `τ^{-d} Π sinc(u_j/τ)`.
    Smoothing,
}

/// Separable kernel `A · Π_j sinc^p(u_j / a)`.
///
/// Derivatives are exact: each coordinate contributes a Taylor jet of
/// `sinc^p(·/a)`, and a mixed partial is the product of the matching jet
/// entries.
#[derive(Clone, Debug)]
pub struct SincProductKernel {
    kind: SincKind,
    d: usize,
    tau: f64,
    power: u32,
    arg_scale: f64,
    amplitude: f64,
    metric: MetricTensor,
}

impl SincProductKernel {
    pub fn sinc4(d: usize, tau: f64) -> Result<Self> {
        Self::build(SincKind::Sinc4, d, tau)
    }

    pub fn smoothing(d: usize, tau: f64) -> Result<Self> {
        Self::build(SincKind::Smoothing, d, tau)
    }

    fn build(kind: SincKind, d: usize, tau: f64) -> Result<Self> {
        if d == 0 {
            return invalid("kernel dimension must be positive");
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid("bandwidth tau must be positive and finite");
        }
        let (power, arg_scale, amplitude) = match kind {
            SincKind::Sinc4 => (4, 4.0 * tau, 1.0),
            SincKind::Smoothing => (1, tau, tau.powi(-(d as i32))),
        };
        let curvature = -amplitude * jet_pow(&sinc_jet(0.0), power)[2] / (arg_scale * arg_scale);
        let metric = MetricTensor::new(DMatrix::identity(d, d) * curvature)?;
        Ok(Self { kind, d, tau, power, arg_scale, amplitude, metric })
    }

    pub fn kind(&self) -> SincKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn axis_jet(&self, h: f64) -> Jet {
        jet_rescale(&jet_pow(&sinc_jet(h / self.arg_scale), self.power), self.arg_scale)
    }
}

impl TiKernel for SincProductKernel {
    fn dim(&self) -> usize {
        self.d
    }

    fn profile(&self, h: &[f64]) -> f64 {
        let base: f64 = h.iter().map(|&x| crate::special::sinc(x / self.arg_scale).powi(self.power as i32)).product();
        self.amplitude * base
    }

    fn derivative(&self, h: &[f64], order: usize) -> DerivTensor {
        assert!(order <= super::MAX_DERIVATIVE_ORDER);
        let jets: Vec<Jet> = h.iter().map(|&x| self.axis_jet(x)).collect();
        let mut counts = vec![0usize; self.d];
        DerivTensor::from_fn(self.d, order, |idx| {
            counts.iter_mut().for_each(|c| *c = 0);
            for &i in idx {
                counts[i] += 1;
            }
            self.amplitude * jets.iter().zip(&counts).map(|(j, &c)| j[c]).product::<f64>()
        })
    }

    fn metric(&self) -> &MetricTensor {
        &self.metric
    }

    fn spectral_density(&self, omega: &[f64]) -> f64 {
        match self.kind {
            SincKind::Sinc4 => omega.iter().map(|&w| sinc4_spectral_1d(w, self.tau)).product(),
            SincKind::Smoothing => smoothing_gate(omega, self.tau),
        }
    }

    fn spectral_support(&self) -> SpectralSupport {
        SpectralSupport::Cube { half_width: 1.0 / self.tau }
    }

    fn is_normalized(&self) -> bool {
        self.kind == SincKind::Sinc4
    }

    /// For the sinc-4 kernel every normalised derivative of order `k ≤ 3`
    /// obeys `(4/3)² · (48d)^{k/2} · d² / d_g⁴` at Fisher-Rao distance `d_g`.
    fn far_tail_bound(&self, fr_radius: f64, order: usize) -> Option<f64> {
        if self.kind != SincKind::Sinc4 || order > 3 || !(fr_radius > 0.0) {
            return None;
        }
        let d = self.d as f64;
        Some((16.0 / 9.0) * (48.0 * d).sqrt().powi(order as i32) * d * d / fr_radius.powi(4))
    }

    fn spec(&self) -> KernelSpec {
        match self.kind {
            SincKind::Sinc4 => KernelSpec::Sinc4 { tau: self.tau, d: Some(self.d) },
            SincKind::Smoothing => KernelSpec::Sinc { tau: self.tau, d: Some(self.d) },
        }
    }
}

/// Spectral density of the smoothing kernel: `2^{-d}` on the closed cube
/// `[-1/τ, 1/τ]^d`, zero outside.
pub fn smoothing_gate(omega: &[f64], tau: f64) -> f64 {
    if omega.iter().all(|w| w.abs() <= 1.0 / tau) {
        0.5f64.powi(omega.len() as i32)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn sinc4_values() {
        let k = SincProductKernel::sinc4(1, 1.0).unwrap();
        assert_eq!(k.profile(&[0.0]), 1.0);
        assert!(k.profile(&[4.0 * PI]).abs() < 1e-30);
        assert!((k.metric().matrix()[(0, 0)] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn smoothing_kernel_origin() {
        let k = SincProductKernel::smoothing(2, 0.5).unwrap();
        assert!((k.profile(&[0.0, 0.0]) - 4.0).abs() < 1e-14);
        assert!((k.metric().matrix()[(0, 0)] - 4.0 / (3.0 * 0.25)).abs() < 1e-12);
        assert_eq!(k.spectral_density(&[1.9, -1.9]), 0.25);
        assert_eq!(k.spectral_density(&[2.1, 0.0]), 0.0);
    }

    #[test]
    fn sinc4_spectral_peak() {
        let k = SincProductKernel::sinc4(1, 0.5).unwrap();
        assert!((k.spectral_density(&[0.0]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(k.spectral_density(&[2.0001]), 0.0);
    }
}
