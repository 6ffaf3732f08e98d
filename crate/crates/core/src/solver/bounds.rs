use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{region_statistics, DiscreteMeasure, MetricTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    Population,
    Sketched,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c_switch: f64,
    pub c_kappa: f64,
    pub eps0: f64,
    pub eps2: f64,
    pub r0: f64,
    /// Required in sketched mode.
    pub c_pivot: Option<f64>,
    pub mode: BoundMode,
}

impl BoundConstants {
    /// Largest admissible radius (exclusive) and the name of the binding
    /// constraint.
    pub fn radius_cap(&self) -> (f64, &'static str) {
        let ratio = match self.mode {
            BoundMode::Population => (self.eps0 / self.eps2).sqrt(),
            BoundMode::Sketched => (self.eps0 / (6.0 * self.eps2)).sqrt(),
        };
        if self.r0 <= ratio {
            (self.r0, "r0")
        } else {
            (ratio, if self.mode == BoundMode::Population { "sqrt(eps0/eps2)" } else { "sqrt(eps0/(6 eps2))" })
        }
    }

    /// `(c̄_κ, c̃_κ, ĉ_κ)`.
    pub fn prefactors(&self) -> Result<(f64, f64, f64)> {
        let ck = self.c_kappa;
        if !(ck > 0.0 && self.c_switch > 0.0) {
            return invalid("c_kappa and C_switch must be positive");
        }
        Ok(match self.mode {
            BoundMode::Population => {
                let a = 2f64.sqrt() * self.c_switch;
                let bar = (1.0 + a * ck).powi(2) / (2.0 * ck);
                (bar, bar * self.eps0.max(1.0), 2.0 * a * (1.0 + a * ck))
            }
            BoundMode::Sketched => {
                let cp = self.c_pivot.ok_or_else(|| Error::Configuration("sketched bounds need C'_pivot".into()))?;
                let a = cp * self.c_switch;
                let bar = (1.0 + a * ck).powi(2) / (2.0 * ck);
                (bar, bar * (self.eps0 / 4.0).max(1.0), 2.0 * a * (1.0 + a * ck))
            }
        })
    }
}

/// A test set of the detection clause and its outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionCheck {
    /// Indices into the estimated measure.
    pub atoms: Vec<usize>,
    pub mass: f64,
    /// `min_k min_{t ∈ A} d_g(t, x_k)`.
    pub nearest_distance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: BoundMode,
    pub r: f64,
    pub gamma: f64,
    pub s0: usize,
    pub c_bar: f64,
    pub c_tilde: f64,
    pub c_hat: f64,
    pub far_mass: f64,
    pub far_bound: f64,
    pub far_pass: bool,
    pub near_errors: Vec<f64>,
    pub near_bound: f64,
    pub near_pass: bool,
    pub detection_threshold: f64,
    /// Only test sets whose mass exceeds the threshold.
    pub detection: Vec<DetectionCheck>,
    pub detection_pass: bool,
    /// `max_k min_atoms d_g(x_k, t)`; infinite for an empty estimate.
    pub localization_distance: f64,
    pub pass: bool,
}

/// Single atoms and clusters of atoms chained within distance `r`.
fn test_sets(mu: &DiscreteMeasure, r: f64, g: &MetricTensor) -> Vec<Vec<usize>> {
    let n = mu.len();
    let mut sets: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while c[i] != i {
            c[i] = c[c[i]];
            i = c[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            if g.dist(&mu.atoms[a].x, &mu.atoms[b].x) <= r {
                let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                if ra != rb {
                    comp[rb.max(ra)] = rb.min(ra);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..n {
        let root = find(&mut comp, k);
        groups[root].push(k);
    }
    sets.extend(groups.into_iter().filter(|grp| grp.len() > 1));
    sets
}

/// Compares an estimate with the far, near and detection guarantees at
/// radius `r` for noise level `gamma`.
pub fn bound_verdict(
    mu_hat: &DiscreteMeasure,
    mu0: &DiscreteMeasure,
    r: f64,
    gamma: f64,
    s0: usize,
    constants: &BoundConstants,
    g: &MetricTensor,
) -> Result<BoundReport> {
    if !(r > 0.0) || !(gamma >= 0.0) || s0 == 0 {
        return invalid("bound verdict needs r > 0, gamma >= 0 and s0 >= 1");
    }
    let (cap, binding) = constants.radius_cap();
    if r >= cap {
        return Err(Error::Precondition(format!("radius {r} is not below {binding} = {cap}")));
    }
    let (c_bar, c_tilde, c_hat) = constants.prefactors()?;
    let scale = match constants.mode {
        BoundMode::Population => gamma / (constants.eps2 * r * r),
        BoundMode::Sketched => 2.0 * gamma / (3.0 * constants.eps2 * r * r),
    };
    let root = (s0 as f64).sqrt();
    let far_bound = c_bar * scale * root;
    let near_bound = c_tilde * scale * root + c_hat * gamma;

    let spikes = mu0.positions();
    let stats = region_statistics(mu_hat, &spikes, &mu0.weights(), r, g)?;
    let far_pass = stats.far_mass <= far_bound;
    let near_pass = stats.near_errors.iter().all(|e| *e <= near_bound);

    let mut detection = Vec::new();
    for set in test_sets(mu_hat, r, g) {
        let mass: f64 = set.iter().map(|&k| mu_hat.atoms[k].w.abs()).sum();
        if mass > far_bound {
            let nearest = set
                .iter()
                .flat_map(|&k| spikes.iter().map(move |t| (k, t)))
                .map(|(k, t)| g.dist(&mu_hat.atoms[k].x, t))
                .fold(f64::INFINITY, f64::min);
            detection.push(DetectionCheck { atoms: set, mass, nearest_distance: nearest, pass: nearest <= r });
        }
    }
    let detection_pass = detection.iter().all(|c| c.pass);
    let localization_distance = spikes
        .iter()
        .map(|t| mu_hat.atoms.iter().filter(|a| a.w != 0.0).map(|a| g.dist(&a.x, t)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);

    Ok(BoundReport {
        mode: constants.mode,
        r,
        gamma,
        s0,
        c_bar,
        c_tilde,
        c_hat,
        far_mass: stats.far_mass,
        far_bound,
        far_pass,
        near_errors: stats.near_errors,
        near_bound,
        near_pass,
        detection_threshold: far_bound,
        detection,
        detection_pass,
        localization_distance,
        pass: far_pass && near_pass && detection_pass,
    })
}

/// Closed-form far, near and detection levels of the mixture propositions,
/// written with the effective radius `r_n = δ_n n^{-1/4}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropositionBounds {
    pub far: f64,
    pub near: f64,
    pub detection: f64,
}

/// Sketched mixture levels `C'_pivot C_switch (512/69, 1536/69) C_{α,m} δ_n^{-2} √s0`.
pub fn s2mix_proposition_bounds(c_pivot: f64, c_switch: f64, c_alpha_m: f64, delta_n: f64, s0: usize) -> PropositionBounds {
    let base = c_pivot * c_switch * c_alpha_m * (s0 as f64).sqrt() / (delta_n * delta_n);
    PropositionBounds { far: 512.0 / 69.0 * base, near: 1536.0 / 69.0 * base, detection: 512.0 / 69.0 * base }
}

/// Population mixture levels `√2 C_α C_switch τ^{-d/2} (256/23, 1536/23) δ_n^{-2} √s0`.
pub fn supermix_proposition_bounds(c_switch: f64, c_alpha: f64, tau: f64, d: usize, delta_n: f64, s0: usize) -> PropositionBounds {
    let base = 2f64.sqrt() * c_alpha * c_switch * tau.powf(-(d as f64) / 2.0) * (s0 as f64).sqrt() / (delta_n * delta_n);
    PropositionBounds { far: 256.0 / 23.0 * base, near: 1536.0 / 23.0 * base, detection: 256.0 / 23.0 * base }
}

/// Growth schedule of `δ_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusSchedule {
    /// `δ_n = n^a` with `a ∈ (0, 1/4)`.
    Poly { a: f64 },
    /// `δ_n = sqrt(log n)`.
    Log,
    /// `δ_n = n^a log(n)^b` with `a ∈ [0, 1/4)` and `b > 0`.
    LogPoly { a: f64, b: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRadius {
    pub delta: f64,
    /// `r_n = δ_n n^{-1/4}`.
    pub r: f64,
    /// `v_n = δ_n^{-2}`.
    pub v: f64,
}

/// `n` is a sample size but accepted as a real so schedules can be probed
/// between integers.
pub fn effective_radius(n: f64, schedule: RadiusSchedule) -> Result<EffectiveRadius> {
    if !(n >= 1.0 && n.is_finite()) {
        return invalid("sample size must be at least one");
    }
    let nf = n;
    let delta = match schedule {
        RadiusSchedule::Poly { a } => {
            if !(a > 0.0 && a < 0.25) {
                return invalid(format!("polynomial exponent {a} must lie in (0, 1/4)"));
            }
            nf.powf(a)
        }
        RadiusSchedule::Log => nf.ln().sqrt(),
        RadiusSchedule::LogPoly { a, b } => {
            if !(a >= 0.0 && a < 0.25 && b > 0.0) {
                return invalid(format!("log-poly schedule needs a in [0, 1/4) and b > 0, got ({a}, {b})"));
            }
            nf.powf(a) * nf.ln().powf(b)
        }
    };
    Ok(EffectiveRadius { delta, r: delta * nf.powf(-0.25), v: delta.powi(-2) })
}
