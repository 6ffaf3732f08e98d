//! Parameter space, discrete measures, the constant Fisher-Rao metric and
//! near/far region bookkeeping.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};

/// Closed axis-aligned box `[lower, upper]` in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParameterBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return invalid("parameter box must have dimension at least 1");
        }
        check_dim(lower.len(), upper.len(), "parameter box bounds")?;
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return invalid(format!("parameter box axis {i}: need finite lower < upper, got [{l}, {u}]"));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[-half, half]^d`.
    pub fn symmetric(d: usize, half: f64) -> Result<Self> {
        Self::new(vec![-half; d], vec![half; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| *v >= *l && *v <= *u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }

    pub fn euclidean_diameter(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Diameter under a constant metric. The distance is a convex function of
    /// the pair of points, so its maximum over the box is attained at a pair
    /// of corners; by symmetry it suffices to pair each corner with its
    /// mirror image.
    pub fn diameter(&self, g: &MetricTensor) -> f64 {
        let d = self.dim();
        let w = self.widths();
        let mut best = 0.0f64;
        for mask in 0u32..(1u32 << d) {
            let diff: Vec<f64> = (0..d).map(|i| if mask & (1 << i) != 0 { w[i] } else { -w[i] }).collect();
            best = best.max(g.norm(&diff));
        }
        best
    }
}

/// One weighted Dirac mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub w: f64,
    pub x: Vec<f64>,
}

/// Finite signed measure `Σ w_k δ_{x_k}`. The empty list is the zero measure.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if let Some(first) = atoms.first() {
            let d = first.x.len();
            if d == 0 {
                return invalid("atoms must have dimension at least 1");
            }
            for a in &atoms {
                check_dim(d, a.x.len(), "atom position")?;
                if !a.w.is_finite() || a.x.iter().any(|v| !v.is_finite()) {
                    return invalid("atom weights and positions must be finite");
                }
            }
        }
        Ok(Self { atoms })
    }

    pub fn zero() -> Self {
        Self { atoms: Vec::new() }
    }

    pub fn from_parts(weights: &[f64], positions: &[Vec<f64>]) -> Result<Self> {
        check_dim(weights.len(), positions.len(), "weights vs positions")?;
        Self::new(weights.iter().zip(positions).map(|(&w, x)| Atom { w, x: x.clone() }).collect())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Dimension of the atoms, or `None` for the zero measure.
    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.x.len())
    }

    pub fn tv_norm(&self) -> f64 {
        self.atoms.iter().map(|a| a.w.abs()).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.w).collect()
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.atoms.iter().map(|a| a.x.clone()).collect()
    }

    pub fn check_in_box(&self, b: &ParameterBox) -> Result<()> {
        for (k, a) in self.atoms.iter().enumerate() {
            if !b.contains(&a.x) {
                return Err(Error::Precondition(format!("atom {k} at {:?} lies outside the parameter box", a.x)));
            }
        }
        Ok(())
    }

    /// Concatenation of two atom lists (the sum of the measures).
    pub fn plus(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        DiscreteMeasure { atoms }
    }

    pub fn scaled(&self, c: f64) -> DiscreteMeasure {
        DiscreteMeasure { atoms: self.atoms.iter().map(|a| Atom { w: c * a.w, x: a.x.clone() }).collect() }
    }
}

/// Constant symmetric positive-definite metric tensor of a translation
/// invariant kernel, `g = -∇²ρ(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTensor {
    matrix: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    sqrt: DMatrix<f64>,
}

impl MetricTensor {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return invalid("metric tensor must be a non-empty square matrix");
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        if (&matrix - matrix.transpose()).amax() > 1e-12 * scale {
            return invalid("metric tensor must be symmetric");
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return invalid(format!("metric tensor must be positive definite, eigenvalues {:?}", eig.eigenvalues.as_slice()));
        }
        let q = &eig.eigenvectors;
        let f = |p: f64| {
            let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(p)));
            q * diag * q.transpose()
        };
        Ok(Self { inv_sqrt: f(-0.5), sqrt: f(0.5), matrix: sym })
    }

    /// `c · Id_d`.
    pub fn scaled_identity(d: usize, c: f64) -> Result<Self> {
        Self::new(DMatrix::identity(d, d) * c)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `g^{-1/2}`, which maps unit tangent vectors to Euclidean directions.
    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    /// `g^{1/2}`, which maps Euclidean offsets to Fisher-Rao coordinates.
    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    /// `sqrt(vᵀ g v)` without dimension checks.
    pub fn norm(&self, v: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.matrix[(i, j)] * v[j];
            }
            acc += v[i] * row;
        }
        acc.max(0.0).sqrt()
    }

    /// Fisher-Rao distance between two points, without dimension checks.
    pub fn dist(&self, s: &[f64], t: &[f64]) -> f64 {
        let diff: Vec<f64> = s.iter().zip(t).map(|(a, b)| a - b).collect();
        self.norm(&diff)
    }

    /// Euclidean offset whose Fisher-Rao coordinates are `u`, i.e. `g^{-1/2} u`.
    pub fn from_fisher_rao_coords(&self, u: &[f64]) -> Vec<f64> {
        (&self.inv_sqrt * DVector::from_column_slice(u)).as_slice().to_vec()
    }

    pub fn to_fisher_rao_coords(&self, h: &[f64]) -> Vec<f64> {
        (&self.sqrt * DVector::from_column_slice(h)).as_slice().to_vec()
    }
}

/// Fisher-Rao distance `sqrt((s-t)ᵀ g (s-t))` for a constant metric.
pub fn fisher_rao_distance(g: &MetricTensor, s: &[f64], t: &[f64]) -> Result<f64> {
    check_dim(g.dim(), s.len(), "first point")?;
    check_dim(g.dim(), t.len(), "second point")?;
    Ok(g.dist(s, t))
}

/// Minimal pairwise Fisher-Rao distance between the atoms of `mu`.
/// Zero-weight atoms count.
pub fn min_separation(mu: &DiscreteMeasure, g: &MetricTensor) -> Result<f64> {
    if mu.len() < 2 {
        return Err(Error::Precondition("minimal separation needs at least two atoms".into()));
    }
    check_dim(g.dim(), mu.dim().unwrap_or(0), "measure")?;
    let mut best = f64::INFINITY;
    for i in 0..mu.len() {
        for j in (i + 1)..mu.len() {
            best = best.min(g.dist(&mu.atoms[i].x, &mu.atoms[j].x));
        }
    }
    Ok(best)
}

/// Whether `mu` has at most `s0` atoms that are pairwise at least `delta0`
/// apart. Separation is vacuous with fewer than two atoms.
pub fn model_membership(mu: &DiscreteMeasure, s0: usize, delta0: f64, g: &MetricTensor) -> bool {
    if mu.len() > s0 {
        return false;
    }
    if mu.len() < 2 {
        return true;
    }
    match min_separation(mu, g) {
        Ok(sep) => sep >= delta0,
        Err(_) => false,
    }
}

/// Region assigned to a query point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    /// Within the closed ball of the given spike (0-based index).
    Near(usize),
    Far,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionLabeling {
    pub radius: f64,
    pub reference_spikes: Vec<Vec<f64>>,
    pub labels: Vec<RegionLabel>,
}

/// Label one point: the nearest spike whose closed ball of radius `r`
/// contains it, ties going to the smallest index.
pub fn label_point(spikes: &[Vec<f64>], r: f64, g: &MetricTensor, q: &[f64]) -> RegionLabel {
    let mut best: Option<(usize, f64)> = None;
    for (k, t) in spikes.iter().enumerate() {
        let dk = g.dist(q, t);
        if dk <= r && best.is_none_or(|(_, bd)| dk < bd) {
            best = Some((k, dk));
        }
    }
    match best {
        Some((k, _)) => RegionLabel::Near(k),
        None => RegionLabel::Far,
    }
}

pub fn classify_regions(spikes: &[Vec<f64>], r: f64, g: &MetricTensor, queries: &[Vec<f64>]) -> Result<RegionLabeling> {
    if !(r >= 0.0) {
        return invalid("region radius must be nonnegative");
    }
    for s in spikes.iter().chain(queries) {
        check_dim(g.dim(), s.len(), "region point")?;
    }
    Ok(RegionLabeling {
        radius: r,
        reference_spikes: spikes.to_vec(),
        labels: queries.iter().map(|q| label_point(spikes, r, g, q)).collect(),
    })
}

/// Far mass and per-spike near-region amplitude errors of a measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionStatistics {
    pub far_mass: f64,
    pub near_errors: Vec<f64>,
    /// Signed mass `μ(N_k(r))` of each near region.
    pub near_mass: Vec<f64>,
}

pub fn region_statistics(
    mu: &DiscreteMeasure,
    spikes0: &[Vec<f64>],
    amplitudes0: &[f64],
    r: f64,
    g: &MetricTensor,
) -> Result<RegionStatistics> {
    check_dim(spikes0.len(), amplitudes0.len(), "spike amplitudes")?;
    let labels = classify_regions(spikes0, r, g, &mu.positions())?;
    let mut far_mass = 0.0;
    let mut near_mass = vec![0.0; spikes0.len()];
    for (a, lab) in mu.atoms.iter().zip(&labels.labels) {
        match lab {
            RegionLabel::Far => far_mass += a.w.abs(),
            RegionLabel::Near(k) => near_mass[*k] += a.w,
        }
    }
    let near_errors = near_mass.iter().zip(amplitudes0).map(|(m, a)| (m - a).abs()).collect();
    Ok(RegionStatistics { far_mass, near_errors, near_mass })
}
