//! Independent oracles shared by the integration test targets.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use offgrid::kernels::{model_kernel_from_template, GaussianKernel, SincProductKernel};
use offgrid::linalg::DerivTensor;
use offgrid::{KernelRef, TemplateDistribution, TiKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kernels exercised by the derivative and symmetry checks.
pub fn kernel_zoo() -> Vec<(&'static str, KernelRef)> {
    let aniso = DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]);
    vec![
        ("sinc4 d=1", Arc::new(SincProductKernel::sinc4(1, 0.7).unwrap()) as KernelRef),
        ("sinc4 d=2", Arc::new(SincProductKernel::sinc4(2, 1.0).unwrap())),
        ("smoothing sinc d=1", Arc::new(SincProductKernel::smoothing(1, 0.8).unwrap())),
        ("gaussian d=2", Arc::new(GaussianKernel::new(aniso).unwrap())),
        (
            "gaussian template d=1",
            Arc::new(model_kernel_from_template(&TemplateDistribution::gaussian(1.0).unwrap(), 1.0, 1, None).unwrap()),
        ),
        (
            "cauchy template d=2",
            Arc::new(model_kernel_from_template(&TemplateDistribution::cauchy(0.5).unwrap(), 1.2, 2, None).unwrap()),
        ),
    ]
}

/// Central finite-difference tensor of order `order` built from the analytic
/// tensor of order `order - 1` (or from the profile when `order == 1`), with
/// one Richardson extrapolation step so the truncation error is `O(step⁴)`.
pub fn fd_tensor(k: &dyn TiKernel, h: &[f64], order: usize, step: f64) -> DerivTensor {
    let d = h.len();
    let lower = |x: &[f64]| -> Vec<f64> {
        if order == 1 {
            vec![k.profile(x)]
        } else {
            k.derivative(x, order - 1).data
        }
    };
    let inner = d.pow(order as u32 - 1);
    let central = |a: usize, s: f64| -> Vec<f64> {
        let mut hp = h.to_vec();
        let mut hm = h.to_vec();
        hp[a] += s;
        hm[a] -= s;
        let (p, m) = (lower(&hp), lower(&hm));
        p.iter().zip(&m).map(|(x, y)| (x - y) / (2.0 * s)).collect()
    };
    let mut out = DerivTensor::zeros(d, order);
    for a in 0..d {
        let (coarse, fine) = (central(a, step), central(a, step / 2.0));
        // The new slot goes first: flat index = a * d^{order-1} + rest.
        for rest in 0..inner {
            out.data[a * inner + rest] = (4.0 * fine[rest] - coarse[rest]) / 3.0;
        }
    }
    out
}

/// Largest entry error relative to the larger of the tensor's own size and
/// `1e-3` times the natural scale `‖g‖^{order/2} |ρ(0)|`, which keeps the
/// comparison meaningful where a derivative crosses zero.
pub fn fd_relative_error(k: &dyn TiKernel, h: &[f64], order: usize, step: f64) -> f64 {
    let an = k.derivative(h, order);
    let fd = fd_tensor(k, h, order, step);
    let scale = an.data.iter().chain(&fd.data).fold(0.0f64, |m, v| m.max(v.abs()));
    let gmax = k.metric().matrix().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-3 * gmax.powf(order as f64 / 2.0) * k.profile(&vec![0.0; h.len()]).abs();
    let err = an.data.iter().zip(&fd.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    err / scale.max(floor)
}

/// Random offsets of Fisher-Rao length at most `max_fr` for a kernel.
pub fn random_offsets(k: &dyn TiKernel, count: usize, max_fr: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = k.dim();
    (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..d).map(|_| rng.random_range(-max_fr..max_fr) / (d as f64).sqrt()).collect();
            k.metric().from_fisher_rao_coords(&u)
        })
        .collect()
}

/// Adaptive Simpson quadrature with an absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1) + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Exact integral of the cubic B-spline `x ↦ density(x)` on `[0, 4]` pieces:
/// the Irwin-Hall density written independently as a truncated-power sum.
pub fn irwin_hall4_by_truncated_powers(x: f64) -> f64 {
    let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
    (0..=4)
        .map(|k| {
            let t = x - k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if t > 0.0 {
                sign * binom[k] * t.powi(3)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / 6.0
}

/// `‖A‖` for a symmetric matrix via its eigenvalues.
pub fn sym_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().symmetric_eigen().eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}
