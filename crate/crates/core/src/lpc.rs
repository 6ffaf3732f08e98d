//! Local positive curvature (LPC) constants of pivot kernels.
//!
//! For the sinc-4 kernel the constants have closed forms
//! ([`sinc4_lpc_params`]). Each constant can also be estimated numerically on
//! offset grids. All kernels handled here are translation invariant, so
//! scanning pairs `(s, t)` reduces to scanning offsets `h = s − t`.
//! Offsets are generated in Fisher-Rao coordinates `u = g^{1/2} h`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{MetricTensor, ParameterBox};
use crate::kernels::{normalized_derivative, KernelSpec, SincProductKernel, TiKernel};
use crate::parallel;

/// Sinc-4 minimal separation prefactor, in Fisher-Rao units.
pub const SINC4_DELTA0_PREFACTOR: f64 = 42.66;

/// Index pairs `(i, j)` with `i, j ≤ 2` and `i + j ≤ 3`.
pub const DERIVATIVE_PAIRS: [(usize, usize); 8] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBound {
    pub i: usize,
    pub j: usize,
    pub bound: f64,
}

/// Point where an audited extremum was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Euclidean offset `s − t`.
    pub offset: Vec<f64>,
    pub fr_distance: f64,
    pub value: f64,
    /// Worst tangent direction, for curvature witnesses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

/// Grid controls for [`audit_curvature_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureGrid {
    /// Near-region grid points per `r0` along each Fisher-Rao axis.
    pub near_steps: usize,
    /// Fisher-Rao spacing of the far scan.
    pub far_step: f64,
    /// Far scan truncation radius; beyond it the kernel decay bound is used.
    pub far_limit: f64,
    /// For `d ≥ 2`, radius up to which radial shells are spaced by `far_step`.
    pub dense_radius: f64,
    /// For `d ≥ 2`, number of log-spaced shells between `dense_radius` and `far_limit`.
    pub log_shells: usize,
    /// Directions per outer shell (`d = 2`) or per shell (`d ≥ 3`).
    pub directions: usize,
}

impl Default for CurvatureGrid {
    fn default() -> Self {
        Self { near_steps: 200, far_step: 0.01, far_limit: 50.0, dense_radius: 2.0, log_shells: 400, directions: 1257 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureAudit {
    pub r0: f64,
    pub eps0_hat: f64,
    pub eps2_hat: f64,
    pub eps0_witness: Witness,
    pub eps2_witness: Witness,
    pub near_points: usize,
    pub far_points: usize,
    pub near_step: f64,
    pub grid: CurvatureGrid,
    /// Decay bound on `|K|` beyond `far_limit`, when the box reaches that far.
    pub tail_bound: Option<f64>,
    /// False when the box extends beyond the scan and the kernel has no decay law.
    pub tail_certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBoundEstimate {
    pub i: usize,
    pub j: usize,
    pub estimate: f64,
    pub witness_offset: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl DerivativeBoundEstimate {
    pub fn within_bound(&self) -> bool {
        self.bound.is_none_or(|b| self.estimate <= b * (1.0 + 1e-12))
    }
}

/// LPC constants of a kernel together with optional numerical audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpcReport {
    pub d: usize,
    pub s0: usize,
    pub r0: f64,
    pub eps0_lower: f64,
    pub eps2_lower: f64,
    pub delta0: f64,
    pub b: Vec<DerivativeBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audited: Option<CurvatureAudit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_audit: Option<Vec<DerivativeBoundEstimate>>,
    pub passed: bool,
    pub failures: Vec<String>,
}

impl LpcReport {
    /// Validates positivity and `r0 < 1/√B02`.
    pub fn new(d: usize, s0: usize, r0: f64, eps0_lower: f64, eps2_lower: f64, delta0: f64, b: Vec<DerivativeBound>) -> Result<Self> {
        if !(eps0_lower > 0.0 && eps2_lower > 0.0 && delta0 > 0.0 && r0 > 0.0) {
            return invalid("LPC constants must be positive");
        }
        let report = Self { d, s0, r0, eps0_lower, eps2_lower, delta0, b, audited: None, derivative_audit: None, passed: true, failures: vec![] };
        let b02 = report.b_ij(0, 2).ok_or_else(|| Error::InvalidArgument("missing B_02".into()))?;
        if r0 >= 1.0 / b02.sqrt() {
            return Err(Error::Precondition(format!("r0 = {r0} must be below 1/sqrt(B_02) = {}", 1.0 / b02.sqrt())));
        }
        Ok(report)
    }

    pub fn b_ij(&self, i: usize, j: usize) -> Option<f64> {
        self.b.iter().find(|e| e.i == i && e.j == j).map(|e| e.bound)
    }

    /// `B_i = 1 + B_0i + B_1i`.
    pub fn b_i(&self, i: usize) -> f64 {
        1.0 + self.b_ij(0, i).unwrap_or(f64::NAN) + self.b_ij(1, i).unwrap_or(f64::NAN)
    }

    pub fn attach_curvature_audit(&mut self, audit: CurvatureAudit) {
        if audit.eps0_hat < self.eps0_lower {
            self.failures.push(format!("eps0_hat = {:.6e} below the lower bound {:.6e}", audit.eps0_hat, self.eps0_lower));
        }
        if audit.eps2_hat < self.eps2_lower {
            self.failures.push(format!("eps2_hat = {:.6e} below the lower bound {:.6e}", audit.eps2_hat, self.eps2_lower));
        }
        if !audit.tail_certified {
            self.failures.push("far scan truncated without a decay bound".into());
        }
        self.audited = Some(audit);
        self.passed = self.failures.is_empty();
    }

    pub fn attach_derivative_audit(&mut self, estimates: Vec<DerivativeBoundEstimate>) {
        for e in estimates.iter().filter(|e| !e.within_bound()) {
            self.failures.push(format!("B_{}{} estimate {:.6} exceeds bound {:.6}", e.i, e.j, e.estimate, e.bound.unwrap_or(f64::NAN)));
        }
        self.derivative_audit = Some(estimates);
        self.passed = self.failures.is_empty();
    }
}

/// `(12d)^{k/2}` for `k = i + j`.
pub fn sinc4_derivative_bound(d: usize, i: usize, j: usize) -> f64 {
    let base = 12.0 * d as f64;
    let k = (i + j) as i32;
    let whole = base.powi(k / 2);
    if k % 2 == 0 { whole } else { whole * base.sqrt() }
}

/// Closed-form LPC constants of the normalised sinc-4 kernel.
pub fn sinc4_lpc_params(d: usize, s0: usize) -> Result<LpcReport> {
    if d == 0 || s0 == 0 {
        return invalid("d and s0 must be at least 1");
    }
    let df = d as f64;
    let b = DERIVATIVE_PAIRS.iter().map(|&(i, j)| DerivativeBound { i, j, bound: sinc4_derivative_bound(d, i, j) }).collect();
    LpcReport::new(
        d,
        s0,
        1.0 / (4.0 * df),
        1.0 / (32.0 * df.powi(3)),
        23.0 / 128.0,
        SINC4_DELTA0_PREFACTOR * (s0 as f64).powf(0.25) * df.powf(1.75),
        b,
    )
}

fn offset_in_box(h: &[f64], widths: &[f64]) -> bool {
    h.iter().zip(widths).all(|(x, w)| x.abs() <= *w)
}

fn near_offsets(d: usize, r0: f64, steps: usize) -> (Vec<Vec<f64>>, f64) {
    let mut per = steps.max(1);
    while (2 * per + 1).pow(d as u32) > 4_000_000 && per > 1 {
        per /= 2;
    }
    let step = r0 / per as f64;
    let side = 2 * per + 1;
    let total = side.pow(d as u32);
    let mut out = Vec::new();
    let mut u = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for c in u.iter_mut() {
            *c = ((rem % side) as f64 - per as f64) * step;
            rem /= side;
        }
        if u.iter().map(|v| v * v).sum::<f64>().sqrt() < r0 {
            out.push(u.clone());
        }
    }
    (out, step)
}

fn shell_radii(r0: f64, grid: &CurvatureGrid, d: usize) -> Vec<f64> {
    let mut radii = Vec::new();
    let dense_end = if d == 1 { grid.far_limit } else { grid.dense_radius.max(r0) };
    let mut k = 0usize;
    loop {
        let r = r0 + k as f64 * grid.far_step;
        if r > dense_end + 1e-12 {
            break;
        }
        radii.push(r);
        k += 1;
    }
    if d > 1 && grid.far_limit > dense_end && grid.log_shells > 0 {
        let (a, b) = (dense_end.ln(), grid.far_limit.ln());
        for s in 1..=grid.log_shells {
            radii.push((a + (b - a) * s as f64 / grid.log_shells as f64).exp());
        }
    }
    radii
}

fn sphere_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_d1e5);
    let mut dirs = Vec::with_capacity(count + 2 * d);
    for axis in 0..d {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[axis] = sign;
            dirs.push(e);
        }
    }
    while dirs.len() < count + 2 * d {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            dirs.push(v.iter().map(|x| x / n).collect());
        }
    }
    dirs
}

fn far_offsets(d: usize, r0: f64, grid: &CurvatureGrid) -> Vec<Vec<f64>> {
    let radii = shell_radii(r0, grid, d);
    let mut out = Vec::new();
    match d {
        1 => {
            for r in radii {
                out.push(vec![r]);
                out.push(vec![-r]);
            }
        }
        2 => {
            for r in radii {
                let arc = ((2.0 * std::f64::consts::PI * r / grid.far_step).ceil() as usize).clamp(8, grid.directions);
                for k in 0..arc {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / arc as f64;
                    out.push(vec![r * th.cos(), r * th.sin()]);
                }
            }
        }
        _ => {
            let dirs = sphere_directions(d, grid.directions);
            for r in radii {
                for v in &dirs {
                    out.push(v.iter().map(|x| r * x).collect());
                }
            }
        }
    }
    out
}

/// Grid estimates of the curvature constants with the default grid and the
/// given near-region density.
pub fn audit_curvature(kernel: &dyn TiKernel, r0: f64, bx: &ParameterBox, grid_density: usize) -> Result<CurvatureAudit> {
    audit_curvature_with(kernel, r0, bx, &CurvatureGrid { near_steps: grid_density, ..CurvatureGrid::default() })
}

/// `eps0_hat = ½(1 − max K)` over offsets with `d_g ≥ r0`, and
/// `eps2_hat = ¼ min λ_min(−g^{-1/2} ∇²ρ g^{-1/2})` over offsets with
/// `d_g < r0`. Offsets are restricted to differences of box points.
pub fn audit_curvature_with(kernel: &dyn TiKernel, r0: f64, bx: &ParameterBox, grid: &CurvatureGrid) -> Result<CurvatureAudit> {
    if !kernel.is_normalized() {
        return Err(Error::Precondition("curvature audit needs a normalised kernel (rho(0) = 1)".into()));
    }
    if !(r0 > 0.0) || grid.near_steps == 0 || !(grid.far_step > 0.0) || !(grid.far_limit > r0) {
        return invalid("curvature audit needs r0 > 0, a positive step and far_limit > r0");
    }
    let d = kernel.dim();
    crate::error::check_dim(d, bx.dim(), "audit box")?;
    let g: &MetricTensor = kernel.metric();
    let widths = bx.widths();

    let (near_u, near_step) = near_offsets(d, r0, grid.near_steps);
    let near: Vec<Vec<f64>> = near_u.iter().map(|u| g.from_fisher_rao_coords(u)).filter(|h| offset_in_box(h, &widths)).collect();
    let far: Vec<Vec<f64>> = far_offsets(d, r0, grid)
        .iter()
        .map(|u| g.from_fisher_rao_coords(u))
        .filter(|h| offset_in_box(h, &widths))
        .collect();
    if near.is_empty() {
        return Err(Error::Diagnostic("near stratum of the curvature grid is empty".into()));
    }
    if far.is_empty() {
        return Err(Error::Diagnostic("far stratum of the curvature grid is empty; enlarge the box or lower r0".into()));
    }

    let (far_val, far_idx) = parallel::install(|| {
        far.par_iter()
            .enumerate()
            .map(|(i, h)| (kernel.profile(h), i))
            .reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
    });
    let near_eval = parallel::install(|| {
        near.par_iter()
            .enumerate()
            .map(|(i, h)| {
                let m = -normalized_derivative(kernel, h, 2).as_matrix();
                let eig = SymmetricEigen::new(m);
                let (k, lam) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
                (lam, i, k, eig.eigenvectors.column(k).iter().copied().collect::<Vec<f64>>())
            })
            .reduce(
                || (f64::INFINITY, usize::MAX, 0, vec![]),
                |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            )
    });

    let diameter = bx.diameter(g);
    let (tail_bound, tail_certified) = if diameter > grid.far_limit {
        match kernel.far_tail_bound(grid.far_limit, 0) {
            Some(b) => (Some(b), true),
            None => (None, false),
        }
    } else {
        (None, true)
    };
    let max_far = far_val.max(tail_bound.unwrap_or(f64::NEG_INFINITY));

    let fh = &far[far_idx];
    let nh = &near[near_eval.1];
    let dir_fr = DMatrix::from_column_slice(d, 1, &near_eval.3);
    let dir = g.inv_sqrt() * dir_fr;
    Ok(CurvatureAudit {
        r0,
        eps0_hat: 0.5 * (1.0 - max_far),
        eps2_hat: 0.25 * near_eval.0,
        eps0_witness: Witness { offset: fh.clone(), fr_distance: g.norm(fh), value: far_val, direction: None },
        eps2_witness: Witness { offset: nh.clone(), fr_distance: g.norm(nh), value: near_eval.0, direction: Some(dir.iter().copied().collect()) },
        near_points: near.len(),
        far_points: far.len(),
        near_step,
        grid: grid.clone(),
        tail_bound,
        tail_certified,
    })
}

fn norm_at(kernel: &dyn TiKernel, u: &[f64], order: usize) -> f64 {
    let h = kernel.metric().from_fisher_rao_coords(u);
    normalized_derivative(kernel, &h, order).operator_norm()
}

fn compass_refine(kernel: &dyn TiKernel, start: &[f64], order: usize, mut step: f64) -> (f64, Vec<f64>) {
    let d = start.len();
    let mut best = start.to_vec();
    let mut val = norm_at(kernel, &best, order);
    let mut iters = 0;
    while step > 1e-7 && iters < 400 {
        iters += 1;
        let mut improved = false;
        for axis in 0..d {
            for sign in [1.0, -1.0] {
                let mut cand = best.clone();
                cand[axis] += sign * step;
                let v = norm_at(kernel, &cand, order);
                if v > val {
                    val = v;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (val, best)
}

/// Monte-Carlo plus local-refinement estimate of
/// `B_ij = sup_h ‖∇^{i+j}ρ(h)‖` (metric-normalised) for every pair in
/// [`DERIVATIVE_PAIRS`]. For the sinc-4 kernel each estimate carries the
/// `(12d)^{(i+j)/2}` bound.
pub fn derivative_bound_audit(kernel: &dyn TiKernel, trials: usize, seed: u64) -> Result<Vec<DerivativeBoundEstimate>> {
    let d = kernel.dim();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut samples: Vec<Vec<f64>> = vec![vec![0.0; d]];
    for _ in 0..trials {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let r = 6.0 * rand::Rng::random::<f64>(&mut rng);
        samples.push(v.iter().map(|x| r * x / n).collect());
    }
    let sinc4 = matches!(kernel.spec(), KernelSpec::Sinc4 { .. });
    let mut per_order = Vec::with_capacity(4);
    for order in 0..=3 {
        let vals: Vec<f64> = parallel::install(|| samples.par_iter().map(|u| norm_at(kernel, u, order)).collect());
        let mut idx: Vec<usize> = (0..samples.len()).collect();
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        let mut best = (vals[idx[0]], samples[idx[0]].clone());
        for &k in idx.iter().take(6) {
            let (v, u) = compass_refine(kernel, &samples[k], order, 0.05);
            if v > best.0 {
                best = (v, u);
            }
        }
        per_order.push(best);
    }
    Ok(DERIVATIVE_PAIRS
        .iter()
        .map(|&(i, j)| {
            let (est, u) = &per_order[i + j];
            DerivativeBoundEstimate {
                i,
                j,
                estimate: *est,
                witness_offset: kernel.metric().from_fisher_rao_coords(u),
                bound: sinc4.then(|| sinc4_derivative_bound(d, i, j)),
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceTerm {
    pub i: usize,
    pub j: usize,
    /// Largest `32 Σ_{l ≠ a} ‖K^{(i,j)}(x_a, x_l)‖` over reference points `a`.
    pub worst: f64,
    pub reference_index: usize,
    /// Same sum with every norm replaced by the kernel's decay bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceReport {
    pub terms: Vec<InterferenceTerm>,
    pub rhs: f64,
    pub pass: bool,
    /// Whether the decay-bound sums also sit below `rhs`; `None` when the
    /// kernel has no decay law or some pair is too close for it.
    pub decay_bound_pass: Option<bool>,
}

/// Interference condition behind the minimal separation: for
/// `(i, j) ∈ {0,1}×{0,2}` and every reference point,
/// `32 Σ ‖K^{(i,j)}(x_a, x_l)‖ ≤ min(eps0/B0, 2 eps2/B2)`.
pub fn interference_check(points: &[Vec<f64>], kernel: &dyn TiKernel, eps0: f64, eps2: f64, b0: f64, b2: f64) -> Result<InterferenceReport> {
    if points.len() < 2 {
        return Err(Error::Precondition("interference check needs at least two points".into()));
    }
    for p in points {
        crate::error::check_dim(kernel.dim(), p.len(), "point")?;
    }
    let rhs = (eps0 / b0).min(2.0 * eps2 / b2);
    let g = kernel.metric();
    let mut terms = Vec::new();
    let mut bound_ok = Some(true);
    for (i, j) in [(0usize, 0usize), (0, 2), (1, 0), (1, 2)] {
        let mut worst = (f64::NEG_INFINITY, 0usize);
        let mut worst_bound: Option<f64> = Some(f64::NEG_INFINITY);
        for (a, xa) in points.iter().enumerate() {
            let mut sum = 0.0;
            let mut bsum = Some(0.0);
            for (l, xl) in points.iter().enumerate() {
                if l == a {
                    continue;
                }
                sum += crate::kernels::operator_norm(kernel, xa, xl, i, j)?;
                bsum = match (bsum, kernel.far_tail_bound(g.dist(xa, xl), i + j)) {
                    (Some(s), Some(b)) => Some(s + b),
                    _ => None,
                };
            }
            if 32.0 * sum > worst.0 {
                worst = (32.0 * sum, a);
            }
            worst_bound = match (worst_bound, bsum) {
                (Some(w), Some(b)) => Some(w.max(32.0 * b)),
                _ => None,
            };
        }
        bound_ok = match (bound_ok, worst_bound) {
            (Some(ok), Some(w)) => Some(ok && w <= rhs),
            _ => None,
        };
        terms.push(InterferenceTerm { i, j, worst: worst.0, reference_index: worst.1, decay_bound: worst_bound });
    }
    let pass = terms.iter().all(|t| t.worst <= rhs);
    Ok(InterferenceReport { terms, rhs, pass, decay_bound_pass: bound_ok })
}

/// Options for [`audit_sinc4`].
#[derive(Clone, Debug)]
pub struct Sinc4AuditOptions {
    pub grid: CurvatureGrid,
    pub derivative_trials: usize,
    pub seed: u64,
}

impl Default for Sinc4AuditOptions {
    fn default() -> Self {
        Self { grid: CurvatureGrid::default(), derivative_trials: 2000, seed: 7 }
    }
}

/// Closed-form sinc-4 constants with both numerical audits attached. The
/// kernel is `Ψ_1` on a box wide enough for the far scan to reach its
/// truncation radius.
pub fn audit_sinc4(d: usize, s0: usize, opts: &Sinc4AuditOptions) -> Result<LpcReport> {
    let mut report = sinc4_lpc_params(d, s0)?;
    let kernel = SincProductKernel::sinc4(d, 1.0)?;
    let half = 0.6 * opts.grid.far_limit * 12f64.sqrt();
    let bx = ParameterBox::symmetric(d, half)?;
    report.attach_curvature_audit(audit_curvature_with(&kernel, report.r0, &bx, &opts.grid)?);
    report.attach_derivative_audit(derivative_bound_audit(&kernel, opts.derivative_trials, opts.seed)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let r = sinc4_lpc_params(1, 1).unwrap();
        assert_eq!((r.r0, r.eps0_lower, r.eps2_lower, r.delta0), (0.25, 0.03125, 0.1796875, 42.66));
        assert_eq!(r.b_ij(0, 2), Some(12.0));
        let r = sinc4_lpc_params(2, 16).unwrap();
        assert!((r.delta0 - 42.66 * 2.0 * 2f64.powf(1.75)).abs() < 1e-9);
    }

    #[test]
    fn radius_constraint_is_enforced() {
        let b = vec![DerivativeBound { i: 0, j: 2, bound: 16.0 }];
        assert!(LpcReport::new(1, 1, 0.3, 0.1, 0.1, 1.0, b).is_err());
    }

    #[test]
    fn near_grid_is_inside_open_ball() {
        let (pts, step) = near_offsets(2, 0.5, 10);
        assert!((step - 0.05).abs() < 1e-15);
        assert!(pts.iter().all(|u| (u[0] * u[0] + u[1] * u[1]).sqrt() < 0.5));
        assert!(pts.contains(&vec![0.0, 0.0]));
    }

    #[test]
    fn tiny_box_gives_empty_far_stratum() {
        let k = SincProductKernel::sinc4(1, 1.0).unwrap();
        let bx = ParameterBox::symmetric(1, 0.1).unwrap();
        assert!(matches!(audit_curvature(&k, 0.25, &bx, 50), Err(Error::Diagnostic(_))));
    }
}
