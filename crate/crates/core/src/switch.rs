//! Kernel-switch constant between a pivot and a model kernel.
//!
//! For translation-invariant kernels the norm of the embedding of the pivot
//! RKHS into the model RKHS is the essential supremum of
//! `sqrt(ν_pivot / ν_model)` over the pivot's spectral support.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{model_kernel_from_template, KernelSpec, SincProductKernel, SpectralSupport, TemplateDistribution, TiKernel};
use crate::parallel;

/// Densities below this fraction of their maximum on the scan grid count as
/// zero: outside the support for the pivot, vanishing for the model.
pub const PIVOT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    /// Uniform nodes per axis; `None` picks 4096 for `d = 1` and 256 otherwise.
    #[serde(default)]
    pub nodes_per_axis: Option<usize>,
    /// Golden-section steps per axis around the grid argmax.
    pub refine_steps: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self { nodes_per_axis: None, refine_steps: 20 }
    }
}

impl FrequencyGrid {
    pub fn per_axis(&self, d: usize) -> usize {
        self.nodes_per_axis.unwrap_or(if d == 1 { 4096 } else { 256 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchConstant {
    pub value: f64,
    pub pivot: KernelSpec,
    pub model: KernelSpec,
    pub nodes_per_axis: usize,
    pub half_width: f64,
    pub attained_at: Vec<f64>,
    /// Value before the golden-section refinement.
    pub grid_value: f64,
}

fn scan_half_width(pivot: &dyn TiKernel, model: &dyn TiKernel) -> f64 {
    match (pivot.spectral_support(), model.spectral_support()) {
        (SpectralSupport::Cube { half_width }, _) => half_width,
        (SpectralSupport::Unbounded, SpectralSupport::Cube { half_width }) => 2.0 * half_width,
        (SpectralSupport::Unbounded, SpectralSupport::Unbounded) => {
            let d = pivot.dim();
            let peak = pivot.spectral_density(&vec![0.0; d]);
            let mut w = 1.0;
            while w < 1e6
                && (0..d).any(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = w;
                    pivot.spectral_density(&e) >= PIVOT_FLOOR * peak
                })
            {
                w *= 2.0;
            }
            w
        }
    }
}

/// `sqrt(ν_pivot/ν_model)` with `0/0 = 0`; an error when the pivot is above
/// `floor` and the model is at or below `model_floor`.
fn ratio(pivot: &dyn TiKernel, model: &dyn TiKernel, w: &[f64], floor: f64, model_floor: f64) -> Result<f64> {
    let p = pivot.spectral_density(w);
    if p <= floor {
        return Ok(0.0);
    }
    let m = model.spectral_density(w);
    if !(m > model_floor) {
        return Err(Error::EmbeddingViolation {
            frequency: w.to_vec(),
            detail: format!("pivot density {p:.3e} where the model density vanishes"),
        });
    }
    Ok((p / m).sqrt())
}

fn golden_max(mut a: f64, mut b: f64, steps: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut e = a + phi * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    for _ in 0..steps {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + phi * (b - a);
            fe = f(e);
        }
    }
    if fc >= fe { (c, fc) } else { (e, fe) }
}

/// Switch constant on a uniform frequency grid over the pivot support,
/// refined by golden-section search around the best node.
pub fn switch_constant(pivot: &dyn TiKernel, model: &dyn TiKernel, grid: &FrequencyGrid) -> Result<SwitchConstant> {
    let d = pivot.dim();
    crate::error::check_dim(d, model.dim(), "model kernel")?;
    let n = grid.per_axis(d);
    if n < 2 {
        return invalid("frequency grid needs at least two nodes per axis");
    }
    let total = n.checked_pow(d as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| Error::InvalidArgument("frequency grid too large".into()))?;
    let hw = scan_half_width(pivot, model);
    let step = 2.0 * hw / (n - 1) as f64;
    let node = |flat: usize| -> Vec<f64> {
        let mut rem = flat;
        (0..d)
            .map(|_| {
                let k = rem % n;
                rem /= n;
                -hw + k as f64 * step
            })
            .collect()
    };
    let peak = parallel::install(|| (0..total).into_par_iter().map(|q| pivot.spectral_density(&node(q))).reduce(|| 0.0, f64::max));
    if !(peak > 0.0) {
        return Err(Error::Numerical("pivot spectral density vanishes on the scan grid".into()));
    }
    let floor = PIVOT_FLOOR * peak;
    let model_peak = parallel::install(|| (0..total).into_par_iter().map(|q| model.spectral_density(&node(q))).reduce(|| 0.0, f64::max));
    let model_floor = PIVOT_FLOOR * model_peak;
    let scanned: Vec<Result<f64>> =
        parallel::install(|| (0..total).into_par_iter().map(|q| ratio(pivot, model, &node(q), floor, model_floor)).collect());
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (q, r) in scanned.into_iter().enumerate() {
        let v = r?;
        if v > best.0 {
            best = (v, q);
        }
    }
    let grid_value = best.0;
    let mut at = node(best.1);
    let mut value = grid_value;
    if grid.refine_steps > 0 {
        for _sweep in 0..2 {
            for axis in 0..d {
                let lo = (at[axis] - step).max(-hw);
                let hi = (at[axis] + step).min(hw);
                // A model zero between grid nodes surfaces here as a violation.
                let violation = std::cell::RefCell::new(None);
                let probe = |x: f64| {
                    let mut w = at.clone();
                    w[axis] = x;
                    ratio(pivot, model, &w, floor, model_floor).unwrap_or_else(|e| {
                        violation.borrow_mut().get_or_insert(e);
                        f64::NEG_INFINITY
                    })
                };
                let (x, v) = golden_max(lo, hi, grid.refine_steps, probe);
                if let Some(e) = violation.into_inner() {
                    return Err(e);
                }
                if v > value {
                    value = v;
                    at[axis] = x;
                }
            }
        }
    }
    Ok(SwitchConstant { value, pivot: pivot.spec(), model: model.spec(), nodes_per_axis: n, half_width: hw, attained_at: at, grid_value })
}

/// Shape of a supersmooth template, `|F[φ](ω)| ∝ exp(−α ‖ω‖_p^β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupersmoothShape {
    pub p: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingProbe {
    pub d: usize,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    pub attained_at: Vec<Vec<f64>>,
    /// Slope of `log C − (d/2) log τ` against `(d^{1/p}/τ)^β`.
    pub alpha_hat: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Fits the growth law `C_switch(τ) ≍ τ^{d/2} exp(α (d^{1/p}/τ)^β)` for the
/// sinc-4 pivot against the model kernel of `template`.
pub fn supersmooth_scaling_probe(
    template: &TemplateDistribution,
    shape: SupersmoothShape,
    d: usize,
    taus: &[f64],
    grid: &FrequencyGrid,
) -> Result<ScalingProbe> {
    if taus.len() < 4 {
        return invalid("scaling probe needs at least four bandwidths");
    }
    if taus.windows(2).any(|w| !(w[0] < w[1])) || taus[0] <= 0.0 {
        return invalid("bandwidths must be positive and strictly increasing");
    }
    let mut values = Vec::with_capacity(taus.len());
    let mut attained_at = Vec::with_capacity(taus.len());
    for &tau in taus {
        let pivot = SincProductKernel::sinc4(d, tau)?;
        let model = model_kernel_from_template(template, tau, d, Some(2))?;
        let c = switch_constant(&pivot, &model, grid)?;
        values.push(c.value);
        attained_at.push(c.attained_at);
    }
    fit_scaling_law(shape, d, taus, values, attained_at)
}

/// Least-squares fit of `log C − (d/2) log τ` against `(d^{1/p}/τ)^β` for
/// switch constants already computed at the given bandwidths.
pub fn fit_scaling_law(shape: SupersmoothShape, d: usize, taus: &[f64], values: Vec<f64>, attained_at: Vec<Vec<f64>>) -> Result<ScalingProbe> {
    if taus.len() != values.len() || taus.len() < 2 {
        return invalid("scaling fit needs one positive value per bandwidth");
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return invalid("switch constants must be positive");
    }
    let df = d as f64;
    let xs: Vec<f64> = taus.iter().map(|t| (df.powf(1.0 / shape.p) / t).powf(shape.beta)).collect();
    let ys: Vec<f64> = taus.iter().zip(&values).map(|(t, c)| c.ln() - 0.5 * df * t.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha_hat = sxy / sxx;
    let intercept = my - alpha_hat * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - alpha_hat * x).powi(2)).sum::<f64>() / n).sqrt();

    let mut warnings = Vec::new();
    let increasing = values.windows(2).all(|w| w[1] >= w[0]);
    let decreasing = values.windows(2).all(|w| w[1] <= w[0]);
    if !increasing && !decreasing {
        warnings.push("switch constants are not monotone in tau; the frequency grid may be too coarse".into());
    }
    if values.iter().all(|v| (v - values[0]).abs() <= 1e-12 * values[0].abs()) {
        warnings.push("switch constants do not vary with tau; the fit is degenerate".into());
    }
    Ok(ScalingProbe { d, taus: taus.to_vec(), values, attained_at, alpha_hat, intercept, residual, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::GaussianKernel;

    #[test]
    fn identical_kernels_give_one() {
        let k = SincProductKernel::sinc4(1, 0.7).unwrap();
        let c = switch_constant(&k, &k, &FrequencyGrid::default()).unwrap();
        assert_eq!(c.value, 1.0);
    }

    #[test]
    fn gaussian_pivot_violates_cube_model() {
        let g = GaussianKernel::isotropic(1, 1.0).unwrap();
        let m = model_kernel_from_template(&TemplateDistribution::gaussian(1.0).unwrap(), 1.0, 1, Some(2)).unwrap();
        match switch_constant(&g, &m, &FrequencyGrid::default()) {
            Err(Error::EmbeddingViolation { frequency, .. }) => assert!(frequency[0].abs() > 1.0),
            other => panic!("expected an embedding violation, got {other:?}"),
        }
    }

    #[test]
    fn short_tau_list_is_rejected() {
        let t = TemplateDistribution::point_mass();
        let s = SupersmoothShape { p: 2.0, beta: 2.0 };
        assert!(supersmooth_scaling_probe(&t, s, 1, &[0.5, 0.6, 0.7], &FrequencyGrid::default()).is_err());
    }
}
