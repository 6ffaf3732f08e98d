//! Dual certificates built from a pivot kernel.
//!
//! A certificate is `η(x) = Σ_j α1_j K(x_j, x) + ⟨α2_j, ∇₁K(x_j, x)⟩`, with
//! coefficients chosen so that `η(x_k) = u_k` and `∇η(x_k) = 0`. The
//! constraints form the interpolation system `Υ α = u`, where `Υ` is the
//! Gram matrix of the features `K(x_j, ·)` and `∂K(x_j, ·)`.
//!
//! The sketched variant replaces the pivot features by `m` random Fourier
//! features and picks the minimum-norm coefficient vector.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{label_point, DiscreteMeasure, MetricTensor, ParameterBox, RegionLabel};
use crate::kernels::KernelRef;
use crate::linalg::{solve_symmetric, symmetric_inverse_norm};
use crate::parallel;
use crate::sketching::SketchOperator;

/// Fisher-Rao radius beyond which the far audit switches to the decay bound.
pub const FAR_SCAN_RADIUS: f64 = 50.0;

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Interpolation matrix of a point configuration.
#[derive(Clone, Debug)]
pub struct UpsilonSystem {
    pub points: Vec<Vec<f64>>,
    pub pivot: KernelRef,
    /// Unknowns and constraints are ordered point by point: value, then the
    /// `d` gradient components.
    pub upsilon: DMatrix<f64>,
    /// Block diagonal `(1, g^{-1/2})` per point.
    pub d_g: DMatrix<f64>,
    pub normalized: DMatrix<f64>,
}

impl UpsilonSystem {
    pub fn size(&self) -> usize {
        self.upsilon.nrows()
    }

    /// `‖Υ̃^{-1}‖`.
    pub fn normalized_inverse_norm(&self) -> f64 {
        symmetric_inverse_norm(&self.normalized)
    }
}

pub fn assemble_upsilon(points: &[Vec<f64>], pivot: KernelRef) -> Result<UpsilonSystem> {
    if points.is_empty() {
        return invalid("certificate needs at least one point");
    }
    let d = pivot.dim();
    for p in points {
        check_dim(d, p.len(), "certificate point")?;
    }
    for (a, pa) in points.iter().enumerate() {
        if points[..a].iter().any(|pb| pb == pa) {
            return Err(Error::IllPosed(format!("certificate point {a} is repeated")));
        }
    }
    let s = points.len();
    let b = d + 1;
    let mut ups = DMatrix::zeros(s * b, s * b);
    for (k, xk) in points.iter().enumerate() {
        for (j, xj) in points.iter().enumerate() {
            let h = diff(xj, xk);
            let v = pivot.profile(&h);
            let grad = pivot.derivative(&h, 1);
            let hess = pivot.derivative(&h, 2);
            ups[(k * b, j * b)] = v;
            for l in 0..d {
                ups[(k * b, j * b + 1 + l)] = grad.data[l];
                ups[(k * b + 1 + l, j * b)] = -grad.data[l];
                for q in 0..d {
                    ups[(k * b + 1 + l, j * b + 1 + q)] = -hess.data[l * d + q];
                }
            }
        }
    }
    let mut d_g = DMatrix::zeros(s * b, s * b);
    let gi = pivot.metric().inv_sqrt();
    for k in 0..s {
        d_g[(k * b, k * b)] = 1.0;
        for l in 0..d {
            for q in 0..d {
                d_g[(k * b + 1 + l, k * b + 1 + q)] = gi[(l, q)];
            }
        }
    }
    let normalized = &d_g * &ups * &d_g;
    Ok(UpsilonSystem { points: points.to_vec(), pivot, upsilon: ups, d_g, normalized })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CertificateKind {
    Full,
    /// Localizing certificate at the given 0-based spike index.
    Localizing { index: usize },
}

/// Anything that can be audited as a certificate.
pub trait CertificateField: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn points(&self) -> &[Vec<f64>];
    /// Interpolated value at each point.
    fn targets(&self) -> &[f64];
    fn kind(&self) -> CertificateKind;
    /// Bound on `|η(x)|` at Fisher-Rao distance at least `radius` from every
    /// point, when the certificate decays.
    fn tail_bound(&self, _radius: f64) -> Option<f64> {
        None
    }
}

/// Certificate in the span of pivot features.
#[derive(Clone, Debug, Serialize)]
pub struct DualCertificate {
    pub kind: CertificateKind,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<Vec<f64>>,
    /// `uᵀ Υ^{-1} u`.
    pub rkhs_norm_sq: f64,
    /// `√(2 s0)` for full certificates, `√2` for localizing ones.
    pub rkhs_norm_bound: f64,
    pub upsilon_inverse_norm: f64,
    pub condition: f64,
    #[serde(skip)]
    pub pivot: KernelRef,
}

fn check_signs(signs: &[f64], n: usize) -> Result<()> {
    if signs.len() != n {
        return invalid(format!("expected {n} signs, got {}", signs.len()));
    }
    if signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
        return invalid("signs must be +1 or -1");
    }
    Ok(())
}

fn solve_certificate(sys: &UpsilonSystem, targets: Vec<f64>, kind: CertificateKind, norm_bound: f64) -> Result<DualCertificate> {
    let d = sys.pivot.dim();
    let b = d + 1;
    let s = sys.points.len();
    let mut u = DVector::zeros(s * b);
    for (k, t) in targets.iter().enumerate() {
        u[k * b] = *t;
    }
    // Solve the unit-diagonal system for D⁻¹α, then undo the scaling.
    let du = &sys.d_g * &u;
    let sol = solve_symmetric(&sys.normalized, &du)?;
    let alpha = &sys.d_g * &sol.x;
    let rkhs_norm_sq = u.dot(&alpha);
    Ok(DualCertificate {
        kind,
        points: sys.points.clone(),
        targets,
        alpha1: (0..s).map(|k| alpha[k * b]).collect(),
        alpha2: (0..s).map(|k| (0..d).map(|l| alpha[k * b + 1 + l]).collect()).collect(),
        rkhs_norm_sq,
        rkhs_norm_bound: norm_bound,
        upsilon_inverse_norm: sys.normalized_inverse_norm(),
        condition: sol.condition,
        pivot: sys.pivot.clone(),
    })
}

/// Certificate interpolating `signs` with vanishing gradients.
pub fn build_certificate(points: &[Vec<f64>], signs: &[f64], pivot: KernelRef) -> Result<DualCertificate> {
    check_signs(signs, points.len())?;
    let sys = assemble_upsilon(points, pivot)?;
    let bound = (2.0 * points.len() as f64).sqrt();
    solve_certificate(&sys, signs.to_vec(), CertificateKind::Full, bound)
}

/// Certificate equal to `signs[index]` at `points[index]` and zero at the
/// other points, with vanishing gradients everywhere.
pub fn build_localizing_certificate(points: &[Vec<f64>], signs: &[f64], index: usize, pivot: KernelRef) -> Result<DualCertificate> {
    check_signs(signs, points.len())?;
    if index >= points.len() {
        return invalid(format!("localizing index {index} out of range"));
    }
    let sys = assemble_upsilon(points, pivot)?;
    let targets = (0..points.len()).map(|k| if k == index { signs[k] } else { 0.0 }).collect();
    solve_certificate(&sys, targets, CertificateKind::Localizing { index }, 2f64.sqrt())
}

impl DualCertificate {
    /// Largest `|η(x_k) − u_k|` and largest `‖∇η(x_k)‖₂`.
    pub fn interpolation_residuals(&self) -> (f64, f64) {
        let mut val: f64 = 0.0;
        let mut grad: f64 = 0.0;
        for (p, t) in self.points.iter().zip(&self.targets) {
            val = val.max((self.value(p) - t).abs());
            grad = grad.max(self.gradient(p).iter().map(|g| g * g).sum::<f64>().sqrt());
        }
        (val, grad)
    }
}

impl CertificateField for DualCertificate {
    fn dim(&self) -> usize {
        self.pivot.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((p, a1), a2) in self.points.iter().zip(&self.alpha1).zip(&self.alpha2) {
            let h = diff(p, x);
            acc += a1 * self.pivot.profile(&h);
            let g = self.pivot.derivative(&h, 1);
            acc += a2.iter().zip(&g.data).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    /// `∇_x` of the certificate; differentiating `ρ(x_j − x)` in `x` flips
    /// the sign of each derivative.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for ((p, a1), a2) in self.points.iter().zip(&self.alpha1).zip(&self.alpha2) {
            let h = diff(p, x);
            let g = self.pivot.derivative(&h, 1);
            let hess = self.pivot.derivative(&h, 2);
            for l in 0..d {
                out[l] -= a1 * g.data[l];
                for q in 0..d {
                    out[l] -= a2[q] * hess.data[q * d + l];
                }
            }
        }
        out
    }

    fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn kind(&self) -> CertificateKind {
        self.kind
    }

    fn tail_bound(&self, radius: f64) -> Option<f64> {
        let b0 = self.pivot.far_tail_bound(radius, 0)?;
        let b1 = self.pivot.far_tail_bound(radius, 1)?;
        let gs = self.pivot.metric().sqrt();
        let mut total = 0.0;
        for (a1, a2) in self.alpha1.iter().zip(&self.alpha2) {
            let v = gs * DVector::from_column_slice(a2);
            total += a1.abs() * b0 + v.norm() * b1;
        }
        Some(total)
    }
}

/// Certificate in the span of `m` sketched features, stored both as pivot
/// feature coefficients `q` and as model coefficients `c`, so that
/// `η(x) = Re ⟨q, p(x)⟩ = Re ⟨c, F δ_x⟩` with
/// `p_i(x) = m^{-1/2} sqrt(f⁽⁴⁾_τ/Λ)(ω_i) e^{i ω_iᵀ x}`.
#[derive(Clone, Debug, Serialize)]
pub struct SketchedCertificate {
    pub kind: CertificateKind,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    #[serde(skip)]
    pub q: Vec<Complex64>,
    #[serde(skip)]
    pub c: Vec<Complex64>,
    /// `‖c‖`.
    pub coefficient_norm: f64,
    pub condition: f64,
    #[serde(skip)]
    omegas: Vec<Vec<f64>>,
    #[serde(skip)]
    scales: Vec<f64>,
}

impl SketchedCertificate {
    /// Soft check of `‖c‖ ≤ C'_pivot C_switch √s0`.
    pub fn norm_within(&self, c_pivot: f64, c_switch: f64) -> bool {
        let factor = match self.kind {
            CertificateKind::Full => (self.points.len() as f64).sqrt(),
            CertificateKind::Localizing { .. } => 1.0,
        };
        self.coefficient_norm <= c_pivot * c_switch * factor
    }

    fn pivot_feature(&self, x: &[f64]) -> Vec<Complex64> {
        let s = 1.0 / (self.omegas.len() as f64).sqrt();
        self.omegas
            .iter()
            .zip(&self.scales)
            .map(|(w, sc)| {
                let phase: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
                Complex64::from_polar(s * sc, phase)
            })
            .collect()
    }

    pub fn interpolation_residuals(&self) -> (f64, f64) {
        let mut val: f64 = 0.0;
        let mut grad: f64 = 0.0;
        for (p, t) in self.points.iter().zip(&self.targets) {
            val = val.max((self.value(p) - t).abs());
            grad = grad.max(self.gradient(p).iter().map(|g| g * g).sum::<f64>().sqrt());
        }
        (val, grad)
    }

    /// Evaluation through the model features, `Re ⟨c, F δ_x⟩`.
    pub fn value_via_model(&self, op: &SketchOperator, x: &[f64]) -> f64 {
        self.c.iter().zip(op.atom_features(x)).map(|(c, f)| (c.conj() * f).re).sum()
    }
}

impl CertificateField for SketchedCertificate {
    fn dim(&self) -> usize {
        self.points.first().map(|p| p.len()).unwrap_or(0)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.q.iter().zip(self.pivot_feature(x)).map(|(q, p)| (q.conj() * p).re).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let p = self.pivot_feature(x);
        (0..self.dim())
            .map(|l| self.q.iter().zip(&p).zip(&self.omegas).map(|((q, p), w)| (q.conj() * p * Complex64::new(0.0, w[l])).re).sum())
            .collect()
    }

    fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn kind(&self) -> CertificateKind {
        self.kind
    }
}

fn build_sketched(points: &[Vec<f64>], targets: Vec<f64>, kind: CertificateKind, op: &SketchOperator) -> Result<SketchedCertificate> {
    let d = op.d;
    for p in points {
        check_dim(d, p.len(), "certificate point")?;
    }
    let scales = op.pivot_scales();
    let mut proto = SketchedCertificate {
        kind,
        points: points.to_vec(),
        targets,
        q: vec![],
        c: vec![],
        coefficient_norm: 0.0,
        condition: 0.0,
        omegas: op.omegas.clone(),
        scales,
    };
    // Constraint vectors: p(x_k) and ∂_l p(x_k) = i ω_l p(x_k).
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(points.len() * (d + 1));
    for x in points {
        let p = proto.pivot_feature(x);
        cols.push(p.clone());
        for l in 0..d {
            cols.push(p.iter().zip(&op.omegas).map(|(v, w)| v * Complex64::new(0.0, w[l])).collect());
        }
    }
    let n = cols.len();
    let gram = DMatrix::from_fn(n, n, |a, b| cols[a].iter().zip(&cols[b]).map(|(u, v)| (u.conj() * v).re).sum());
    let mut rhs = DVector::zeros(n);
    for (k, t) in proto.targets.iter().enumerate() {
        rhs[k * (d + 1)] = *t;
    }
    let sol = solve_symmetric(&gram, &rhs).map_err(|e| match e {
        Error::IllPosed(msg) => Error::IllPosed(format!("sketched feature system is rank deficient ({msg}); increase m")),
        other => other,
    })?;
    let mut q = vec![Complex64::new(0.0, 0.0); op.m];
    for (beta, col) in sol.x.iter().zip(&cols) {
        for (qi, v) in q.iter_mut().zip(col) {
            *qi += v * *beta;
        }
    }
    let mut c = Vec::with_capacity(op.m);
    for ((qi, sc), (w, f)) in q.iter().zip(&proto.scales).zip(op.weights.iter().zip(&op.template_cf)) {
        let denom = f * *w;
        if denom.norm() == 0.0 {
            return Err(Error::Numerical("model feature vanishes at a sketch frequency".into()));
        }
        c.push((qi * *sc / denom).conj());
    }
    proto.coefficient_norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    proto.q = q;
    proto.c = c;
    proto.condition = sol.condition;
    Ok(proto)
}

/// Minimum-norm sketched certificate interpolating `signs`.
pub fn build_sketched_certificate(points: &[Vec<f64>], signs: &[f64], op: &SketchOperator) -> Result<SketchedCertificate> {
    check_signs(signs, points.len())?;
    build_sketched(points, signs.to_vec(), CertificateKind::Full, op)
}

pub fn build_sketched_localizing_certificate(points: &[Vec<f64>], signs: &[f64], index: usize, op: &SketchOperator) -> Result<SketchedCertificate> {
    check_signs(signs, points.len())?;
    if index >= points.len() {
        return invalid(format!("localizing index {index} out of range"));
    }
    let targets = (0..points.len()).map(|k| if k == index { signs[k] } else { 0.0 }).collect();
    build_sketched(points, targets, CertificateKind::Localizing { index }, op)
}

/// Required non-degeneracy constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditTargets {
    pub eps0: f64,
    pub eps2: f64,
    pub r0: f64,
}

/// Sampling controls for [`audit_certificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditGrid {
    pub far_samples: usize,
    /// Near grid points per axis across `[-r0, r0]`; the total is capped at
    /// `near_cap` per region.
    pub near_grid_density: usize,
    pub near_cap: usize,
    pub seed: u64,
}

impl Default for AuditGrid {
    fn default() -> Self {
        Self { far_samples: 10_000, near_grid_density: 200, near_cap: 100_000, seed: 11 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMargin {
    /// Worst slack; negative means the condition is violated.
    pub margin: f64,
    pub witness: Vec<f64>,
    pub points_checked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateAudit {
    pub kind: CertificateKind,
    pub eps0_required: f64,
    pub eps2_required: f64,
    pub r0: f64,
    pub far: RegionMargin,
    pub near: Vec<RegionMargin>,
    /// Slack of the decay bound beyond [`FAR_SCAN_RADIUS`], when available.
    pub tail_margin: Option<f64>,
    pub far_pass: bool,
    pub near_pass: bool,
    pub pass: bool,
}

fn random_unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn worst(cands: Vec<(f64, Vec<f64>)>) -> RegionMargin {
    let count = cands.len();
    let mut best = (f64::INFINITY, vec![]);
    for c in cands {
        if c.0 < best.0 {
            best = c;
        }
    }
    RegionMargin { margin: best.0, witness: best.1, points_checked: count }
}

/// Checks the non-degeneracy conditions on sampled far points and per-spike
/// near grids.
///
/// Full certificates need `|η| ≤ 1 − eps0` on the far region and
/// `|η(x)| ≤ 1 − eps2 d_g(x, x_k)²` near each point. A localizing
/// certificate needs `|η| ≤ 1 − eps0` far and
/// `|u_k − η(x)| ≤ eps2 d_g(x, x_k)²` near each point, where `u_k` is its
/// interpolated value there. Failures are reported, never raised.
pub fn audit_certificate(
    cert: &dyn CertificateField,
    targets: AuditTargets,
    g: &MetricTensor,
    grid: &AuditGrid,
    bx: Option<&ParameterBox>,
) -> Result<CertificateAudit> {
    let d = cert.dim();
    check_dim(d, g.dim(), "metric")?;
    let pts = cert.points();
    let r0 = targets.r0;
    if !(r0 > 0.0) {
        return invalid("audit radius must be positive");
    }
    let inside = |x: &[f64]| bx.is_none_or(|b| b.contains(x));
    let max_radius = bx.map_or(FAR_SCAN_RADIUS, |b| b.diameter(g).min(FAR_SCAN_RADIUS)).max(r0);

    // Far samples: stratified log-uniform radii around each point, plus the
    // sphere of radius r0 around each point.
    let mut rng = ChaCha20Rng::seed_from_u64(grid.seed);
    let mut far_pts: Vec<Vec<f64>> = Vec::new();
    let per_point = grid.far_samples.div_ceil(pts.len().max(1));
    for t in pts {
        for i in 0..per_point {
            let u = (i as f64 + rng.random::<f64>()) / per_point as f64;
            let r = r0 * (max_radius / r0).powf(u);
            let dir = random_unit(&mut rng, d);
            let fr: Vec<f64> = dir.iter().map(|v| r * v).collect();
            far_pts.push(t.iter().zip(g.from_fisher_rao_coords(&fr)).map(|(a, b)| a + b).collect());
        }
        let ring = if d == 1 { 2 } else { 64 };
        for i in 0..ring {
            let dir = if d == 1 {
                vec![if i == 0 { 1.0 } else { -1.0 }]
            } else if d == 2 {
                let th = 2.0 * std::f64::consts::PI * i as f64 / ring as f64;
                vec![th.cos(), th.sin()]
            } else {
                random_unit(&mut rng, d)
            };
            let fr: Vec<f64> = dir.iter().map(|v| r0 * v).collect();
            far_pts.push(t.iter().zip(g.from_fisher_rao_coords(&fr)).map(|(a, b)| a + b).collect());
        }
    }
    far_pts.retain(|x| inside(x) && pts.iter().all(|t| g.dist(x, t) >= r0 * (1.0 - 1e-12)));
    let far_cands: Vec<(f64, Vec<f64>)> =
        parallel::install(|| far_pts.par_iter().map(|x| (1.0 - targets.eps0 - cert.value(x).abs(), x.clone())).collect());
    let far = worst(far_cands);

    let tail_margin = if max_radius >= FAR_SCAN_RADIUS { cert.tail_bound(FAR_SCAN_RADIUS).map(|b| 1.0 - targets.eps0 - b) } else { None };

    // Near grids in Fisher-Rao coordinates.
    let mut per_axis = grid.near_grid_density.max(2);
    while per_axis.checked_pow(d as u32).is_none_or(|n| n > grid.near_cap) && per_axis > 2 {
        per_axis -= 1;
    }
    let total = per_axis.pow(d as u32);
    let step = 2.0 * r0 / (per_axis - 1) as f64;
    let mut near = Vec::with_capacity(pts.len());
    for (k, t) in pts.iter().enumerate() {
        let mut offs = Vec::new();
        for flat in 0..total {
            let mut rem = flat;
            let u: Vec<f64> = (0..d)
                .map(|_| {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    -r0 + i as f64 * step
                })
                .collect();
            if u.iter().map(|v| v * v).sum::<f64>().sqrt() <= r0 {
                offs.push(u);
            }
        }
        let target = cert.targets()[k];
        let kind = cert.kind();
        let cands: Vec<(f64, Vec<f64>)> = parallel::install(|| {
            offs.par_iter()
                .filter_map(|u| {
                    let x: Vec<f64> = t.iter().zip(g.from_fisher_rao_coords(u)).map(|(a, b)| a + b).collect();
                    if !inside(&x) || !matches!(label_point(pts, r0, g, &x), RegionLabel::Near(j) if j == k) {
                        return None;
                    }
                    let dist2 = u.iter().map(|v| v * v).sum::<f64>();
                    let eta = cert.value(&x);
                    let margin = match kind {
                        CertificateKind::Full => 1.0 - targets.eps2 * dist2 - eta.abs(),
                        CertificateKind::Localizing { .. } => targets.eps2 * dist2 - (target - eta).abs(),
                    };
                    Some((margin, x))
                })
                .collect()
        });
        near.push(worst(cands));
    }

    let tol = 1e-9;
    let far_pass = (far.points_checked == 0 || far.margin >= -tol) && tail_margin.is_none_or(|m| m >= 0.0);
    let near_pass = near.iter().all(|r| r.points_checked == 0 || r.margin >= -tol);
    Ok(CertificateAudit {
        kind: cert.kind(),
        eps0_required: targets.eps0,
        eps2_required: targets.eps2,
        r0,
        far,
        near,
        tail_margin,
        far_pass,
        near_pass,
        pass: far_pass && near_pass,
    })
}

/// `D(μ) = ‖μ‖_TV − ‖μ⁰‖_TV − Σ_μ a η(x) + Σ_{μ⁰} a⁰ η(x⁰)`.
pub fn bregman_divergence(mu: &DiscreteMeasure, mu0: &DiscreteMeasure, cert: &dyn CertificateField) -> f64 {
    let lin = |m: &DiscreteMeasure| m.atoms.iter().map(|a| a.w * cert.value(&a.x)).sum::<f64>();
    mu.tv_norm() - mu0.tv_norm() - lin(mu) + lin(mu0)
}

/// `eps2 r² |μ|(far) + eps2 Σ_k Σ_{x ∈ N_k} |a| d_g(x, t_k)²`.
pub fn bregman_lower_bound(mu: &DiscreteMeasure, spikes: &[Vec<f64>], r: f64, eps2: f64, g: &MetricTensor) -> f64 {
    mu.atoms
        .iter()
        .map(|a| match label_point(spikes, r, g, &a.x) {
            RegionLabel::Far => eps2 * r * r * a.w.abs(),
            RegionLabel::Near(k) => eps2 * a.w.abs() * g.dist(&a.x, &spikes[k]).powi(2),
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::kernels::SincProductKernel;

    #[test]
    fn single_point_system_is_identity() {
        let k: KernelRef = Arc::new(SincProductKernel::sinc4(2, 0.8).unwrap());
        let sys = assemble_upsilon(&[vec![0.3, -0.2]], k).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((&sys.normalized - id).amax() < 1e-12);
    }

    #[test]
    fn single_spike_certificate_is_the_kernel() {
        let k: KernelRef = Arc::new(SincProductKernel::sinc4(1, 1.0).unwrap());
        let c = build_certificate(&[vec![0.5]], &[1.0], k.clone()).unwrap();
        assert!((c.alpha1[0] - 1.0).abs() < 1e-14 && c.alpha2[0][0].abs() < 1e-14);
        assert!((c.value(&[1.7]) - k.profile(&[-1.2])).abs() < 1e-14);
    }

    #[test]
    fn repeated_points_are_ill_posed() {
        let k: KernelRef = Arc::new(SincProductKernel::sinc4(1, 1.0).unwrap());
        assert!(matches!(assemble_upsilon(&[vec![0.0], vec![0.0]], k), Err(Error::IllPosed(_))));
    }
}
