//! Synthetic mixture experiments: simulate, sketch, calibrate, solve, and
//! compare the estimate with its guarantees.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::geometry::{min_separation, model_membership, region_statistics, DiscreteMeasure, MetricTensor, ParameterBox};
use crate::kernels::{model_kernel_from_template, SincProductKernel, TemplateDistribution, TemplateSpec, TiKernel};
use crate::lpc::{audit_curvature_with, CurvatureGrid, SINC4_DELTA0_PREFACTOR};
use crate::parallel;
use crate::sketching::{draw_operator, noise_level_bound, sketch_dataset, sinc4_sketch_size, ConcentrationConstants, Samples, SketchingLaw};
use crate::solver::{
    bound_verdict, effective_radius, near_optimality, s2mix_proposition_bounds, solve, BlassoProblem, BoundConstants, BoundMode, BoundReport,
    KappaPreset, Observation, PropositionBounds, RadiusSchedule, SolveConfig,
};
use crate::switch::{switch_constant, FrequencyGrid};

/// Prefactor of the largest admissible bandwidth,
/// `τ_max = min_{k≠l} ‖x_k − x_l‖₂ / (TAU_MAX_PREFACTOR s0^{1/4} d^{7/4})`.
pub const TAU_MAX_PREFACTOR: f64 = 147.77;

/// `min_{k≠l} ‖x_k − x_l‖₂ / (147.77 s0^{1/4} d^{7/4})`, or `+∞` with fewer
/// than two atoms.
pub fn tau_max(mu0: &DiscreteMeasure, d: usize) -> Result<f64> {
    if mu0.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let euclid = MetricTensor::scaled_identity(d, 1.0)?;
    let gap = min_separation(mu0, &euclid)?;
    Ok(gap / (TAU_MAX_PREFACTOR * (mu0.len() as f64).powf(0.25) * (d as f64).powf(1.75)))
}

/// `n` i.i.d. draws from `φ ⋆ μ⁰`.
pub fn simulate_mixture(mu0: &DiscreteMeasure, template: &TemplateDistribution, n: usize, seed: u64) -> Result<Samples> {
    let d = mu0.dim().ok_or_else(|| Error::InvalidArgument("mixture needs at least one component".into()))?;
    let weights = mu0.weights();
    if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return invalid("mixture weights must be positive and sum to one");
    }
    if !template.has_sampler() {
        return Err(Error::Unsupported(format!("template {:?} cannot be sampled", template.spec())));
    }
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cum.push(acc);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let k = cum.iter().position(|c| u < *c).unwrap_or(weights.len() - 1);
        let noise = template.sample(&mut rng, d)?;
        data.extend(mu0.atoms[k].x.iter().zip(&noise).map(|(a, b)| a + b));
    }
    Samples::new(d, data)
}

/// Curvature constants used for region radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpcConstants {
    pub eps0: f64,
    pub eps2: f64,
    pub r0: f64,
}

/// Grid-audited sinc-4 constants at `r0 = 1/(4d)`. The far constant is the
/// audited value; the near constant is the smaller of `23/128` and its audit.
pub fn sinc4_audited_constants(d: usize) -> Result<LpcConstants> {
    let kernel = SincProductKernel::sinc4(d, 1.0)?;
    let r0 = 1.0 / (4.0 * d as f64);
    let grid = if d == 1 {
        CurvatureGrid { near_steps: 200, ..CurvatureGrid::default() }
    } else {
        CurvatureGrid { near_steps: 60, far_step: 0.02, log_shells: 200, directions: 400, ..CurvatureGrid::default() }
    };
    let bx = ParameterBox::symmetric(d, 0.6 * grid.far_limit * 12f64.sqrt())?;
    let audit = audit_curvature_with(&kernel, r0, &bx, &grid)?;
    Ok(LpcConstants { eps0: audit.eps0_hat, eps2: audit.eps2_hat.min(23.0 / 128.0), r0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KappaChoice {
    /// `κ = C_{α,m} / (C'_pivot C_switch √n √s0)`.
    S2mix,
    Fixed { kappa: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mu0: DiscreteMeasure,
    pub template: TemplateSpec,
    /// `None` selects `0.99 τ_max`.
    #[serde(default)]
    pub tau: Option<f64>,
    pub ns: Vec<u64>,
    /// `None` uses the sinc-4 sketch-size bound.
    #[serde(default)]
    pub m: Option<usize>,
    pub alpha: f64,
    pub schedule: RadiusSchedule,
    pub seeds: Vec<u64>,
    #[serde(default = "default_kappa")]
    pub kappa: KappaChoice,
    #[serde(default = "default_law")]
    pub law: SketchingLaw,
    #[serde(default)]
    pub concentration: ConcentrationConstants,
    #[serde(default = "one")]
    pub c_pivot: f64,
    /// Universal constant `C` of the sketch-size bound.
    #[serde(default = "one")]
    pub c_universal: f64,
    /// Parameter box; defaults to the atom hull padded by `max(10τ, 10% span)`.
    #[serde(default)]
    pub domain: Option<ParameterBox>,
    /// Defaults to the grid-audited sinc-4 constants.
    #[serde(default)]
    pub lpc: Option<LpcConstants>,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_kappa() -> KappaChoice {
    KappaChoice::S2mix
}

fn default_law() -> SketchingLaw {
    SketchingLaw::UniformCube
}

fn one() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn dim(&self) -> Result<usize> {
        self.mu0.dim().ok_or_else(|| Error::InvalidArgument("mu0 has no atoms".into()))
    }

    pub fn digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn read(path: &Path) -> Result<Self> {
        crate::sketching::read_json(path)
    }
}

/// Resolved quantities shared by every cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetup {
    pub d: usize,
    pub s0: usize,
    pub tau: f64,
    pub tau_max: f64,
    pub delta0: f64,
    pub fisher_rao_separation: f64,
    pub m: usize,
    pub c_switch: f64,
    pub lpc: LpcConstants,
    /// Admissible radius cap `min(r0, sqrt(eps0/(6 eps2)))`.
    pub radius_cap: f64,
    /// `c_d = cap^{-4}`; propositions apply once `n ≥ c_d δ_n⁴`.
    pub c_d: f64,
    pub domain: ParameterBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropositionCheck {
    pub bounds: PropositionBounds,
    /// False when `r_n` is not below the radius cap, i.e. `n < c_d δ_n⁴`.
    pub applicable: bool,
    pub far_mass: f64,
    pub max_near_error: f64,
    pub far_pass: bool,
    pub near_pass: bool,
    pub detection_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: u64,
    pub seed: u64,
    pub gamma_bound: f64,
    /// `‖z − F μ⁰‖`, observable only in synthetic runs.
    pub gamma_empirical: f64,
    pub c_alpha_m: f64,
    pub kappa: f64,
    pub mu_hat: DiscreteMeasure,
    pub converged: bool,
    pub iterations: usize,
    pub objective_hat: f64,
    pub objective_truth: f64,
    pub near_optimal: bool,
    pub delta_n: f64,
    pub r_n: f64,
    /// Radius of the theorem-form verdict, `min(r_n, 0.99 cap)`.
    pub r_used: f64,
    pub report: BoundReport,
    pub proposition: PropositionCheck,
    pub max_near_error: f64,
    /// `max_k min_atoms d_g(x_k, t)`.
    pub localization_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub n: u64,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub setup: ExperimentSetup,
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
    pub environment: Environment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub threads: usize,
}

fn default_domain(mu0: &DiscreteMeasure, d: usize, tau: f64) -> Result<ParameterBox> {
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for a in &mu0.atoms {
        for i in 0..d {
            lo[i] = lo[i].min(a.x[i]);
            hi[i] = hi[i].max(a.x[i]);
        }
    }
    for i in 0..d {
        let pad = (10.0 * tau).max(0.1 * (hi[i] - lo[i]));
        lo[i] -= pad;
        hi[i] += pad;
    }
    ParameterBox::new(lo, hi)
}

/// Resolves bandwidth, sketch size, switch constant and curvature constants.
pub fn prepare(config: &ExperimentConfig) -> Result<ExperimentSetup> {
    let d = config.dim()?;
    let s0 = config.mu0.len();
    if config.ns.is_empty() || config.seeds.is_empty() {
        return invalid("experiment needs at least one sample size and one seed");
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return invalid("alpha must lie in (0, 1)");
    }
    let tmax = tau_max(&config.mu0, d)?;
    let tau = match config.tau {
        None if tmax.is_finite() => 0.99 * tmax,
        None => return invalid("automatic bandwidth needs at least two atoms"),
        Some(t) if !(t > 0.0) => return invalid("tau must be positive"),
        Some(t) if t > tmax => {
            return invalid(format!(
                "bandwidth tau = {t} exceeds tau_max = {tmax}; the bandwidth condition requires tau <= min gap / (147.77 s0^(1/4) d^(7/4))"
            ))
        }
        Some(t) => t,
    };
    let template = TemplateDistribution::from_spec(&config.template)?;
    let pivot = SincProductKernel::sinc4(d, tau)?;
    let g = pivot.metric().clone();
    let delta0 = SINC4_DELTA0_PREFACTOR * (s0 as f64).powf(0.25) * (d as f64).powf(1.75);
    if !model_membership(&config.mu0, s0, delta0, &g) {
        return Err(Error::Precondition(format!("target is not {delta0}-separated in the pivot metric at tau = {tau}")));
    }
    let sep = if s0 >= 2 { min_separation(&config.mu0, &g)? } else { f64::INFINITY };
    let domain = match &config.domain {
        Some(b) => b.clone(),
        None => default_domain(&config.mu0, d, tau)?,
    };
    config.mu0.check_in_box(&domain)?;
    let m = match config.m {
        Some(m) if m > 0 => m,
        Some(_) => return invalid("sketch size must be positive"),
        None => sinc4_sketch_size(s0, d, domain.diameter(&g), config.alpha, config.law.c_lambda(d), config.c_universal)?,
    };
    let model = model_kernel_from_template(&template, tau, d, Some(2))?;
    let c_switch = switch_constant(&pivot, &model, &FrequencyGrid::default())?.value;
    let lpc = match config.lpc {
        Some(l) => l,
        None => sinc4_audited_constants(d)?,
    };
    let constants = BoundConstants {
        c_switch,
        c_kappa: 1.0,
        eps0: lpc.eps0,
        eps2: lpc.eps2,
        r0: lpc.r0,
        c_pivot: Some(config.c_pivot),
        mode: BoundMode::Sketched,
    };
    let (radius_cap, _) = constants.radius_cap();
    Ok(ExperimentSetup {
        d,
        s0,
        tau,
        tau_max: tmax,
        delta0,
        fisher_rao_separation: sep,
        m,
        c_switch,
        lpc,
        radius_cap,
        c_d: radius_cap.powi(-4),
        domain,
    })
}

/// One `(n, seed)` cell: simulate, sketch, calibrate, solve, verdict.
pub fn run_cell(config: &ExperimentConfig, setup: &ExperimentSetup, n: u64, seed: u64) -> Result<CellResult> {
    let d = setup.d;
    let template = TemplateDistribution::from_spec(&config.template)?;
    let samples = simulate_mixture(&config.mu0, &template, n as usize, seed)?;
    let op = draw_operator(config.law, &template, d, setup.tau, setup.m, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ n)?;
    let sketch = sketch_dataset(&samples, &op)?;
    let noise = noise_level_bound(config.alpha, setup.m, n, setup.tau, d, config.law, config.concentration)?;
    let c_kappa = KappaPreset::S2mix { c_pivot: config.c_pivot, c_switch: setup.c_switch }.c_kappa();
    let kappa = match config.kappa {
        KappaChoice::S2mix => c_kappa * noise.bound / (setup.s0 as f64).sqrt(),
        KappaChoice::Fixed { kappa } => kappa,
    };
    let g = SincProductKernel::sinc4(d, setup.tau)?.metric().clone();
    let problem = BlassoProblem::new(Observation::Sketched { op: op.clone(), z: sketch.z.clone() }, kappa, setup.domain.clone(), g.clone())?;
    let (mu_hat, trace) = solve(&problem, &config.solver)?;
    let objective_hat = problem.objective(&mu_hat)?;
    let objective_truth = problem.objective(&config.mu0)?;
    let near_optimal = near_optimality(&problem, &mu_hat, &config.mu0)?;
    let gamma_empirical = problem.residual(&config.mu0)?.norm_sq().sqrt();

    let eff = effective_radius(n as f64, config.schedule)?;
    let r_used = eff.r.min(0.99 * setup.radius_cap);
    let constants = BoundConstants {
        c_switch: setup.c_switch,
        c_kappa,
        eps0: setup.lpc.eps0,
        eps2: setup.lpc.eps2,
        r0: setup.lpc.r0,
        c_pivot: Some(config.c_pivot),
        mode: BoundMode::Sketched,
    };
    let report = bound_verdict(&mu_hat, &config.mu0, r_used, noise.bound, setup.s0, &constants, &g)?;

    let bounds = s2mix_proposition_bounds(config.c_pivot, setup.c_switch, noise.c_alpha_m, eff.delta, setup.s0);
    let stats = region_statistics(&mu_hat, &config.mu0.positions(), &config.mu0.weights(), eff.r, &g)?;
    let max_near = stats.near_errors.iter().cloned().fold(0.0, f64::max);
    let detection_pass = mu_hat.atoms.iter().all(|a| {
        a.w.abs() <= bounds.detection || config.mu0.atoms.iter().any(|t| g.dist(&a.x, &t.x) <= eff.r)
    });
    let proposition = PropositionCheck {
        bounds,
        applicable: eff.r < setup.radius_cap,
        far_mass: stats.far_mass,
        max_near_error: max_near,
        far_pass: stats.far_mass <= bounds.far,
        near_pass: max_near <= bounds.near,
        detection_pass,
    };
    Ok(CellResult {
        n,
        seed,
        gamma_bound: noise.bound,
        gamma_empirical,
        c_alpha_m: noise.c_alpha_m,
        kappa,
        converged: trace.converged,
        iterations: trace.iterations,
        mu_hat,
        objective_hat,
        objective_truth,
        near_optimal,
        delta_n: eff.delta,
        r_n: eff.r,
        r_used,
        max_near_error: report.near_errors.iter().cloned().fold(0.0, f64::max),
        localization_distance: report.localization_distance,
        report,
        proposition,
    })
}

/// Runs every `(n, seed)` cell in parallel. Cell errors are recorded and do
/// not stop the run. Writes `record.json` and `cells.csv` when an output
/// directory is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    let setup = prepare(config)?;
    let jobs: Vec<(u64, u64)> = config.ns.iter().flat_map(|&n| config.seeds.iter().map(move |&s| (n, s))).collect();
    let outcomes: Vec<std::result::Result<CellResult, CellFailure>> = parallel::install(|| {
        jobs.par_iter()
            .map(|&(n, seed)| run_cell(config, &setup, n, seed).map_err(|e| CellFailure { n, seed, error: e.to_string() }))
            .collect()
    });
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(c) => cells.push(c),
            Err(f) => failures.push(f),
        }
    }
    let record = RunRecord {
        config_digest: config.digest()?,
        config: config.clone(),
        setup,
        cells,
        failures,
        environment: Environment { crate_version: env!("CARGO_PKG_VERSION").into(), threads: parallel::pool().current_num_threads() },
    };
    if let Some(dir) = &config.output {
        write_record(&record, dir)?;
    }
    Ok(record)
}

pub fn write_record(record: &RunRecord, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    crate::sketching::write_json(&dir.join("record.json"), record)?;
    let mut w = csv::Writer::from_path(dir.join("cells.csv"))?;
    w.write_record([
        "n",
        "seed",
        "far_mass",
        "max_near_error",
        "far_bound",
        "near_bound",
        "prop_far_bound",
        "prop_near_bound",
        "localization_distance",
        "r_n",
        "r_used",
        "kappa",
        "gamma_bound",
        "gamma_empirical",
        "near_optimal",
        "converged",
    ])?;
    for c in &record.cells {
        w.write_record([
            c.n.to_string(),
            c.seed.to_string(),
            c.report.far_mass.to_string(),
            c.max_near_error.to_string(),
            c.report.far_bound.to_string(),
            c.report.near_bound.to_string(),
            c.proposition.bounds.far.to_string(),
            c.proposition.bounds.near.to_string(),
            c.localization_distance.to_string(),
            c.r_n.to_string(),
            c.r_used.to_string(),
            c.kappa.to_string(),
            c.gamma_bound.to_string(),
            c.gamma_empirical.to_string(),
            c.near_optimal.to_string(),
            c.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_max_formula() {
        let mu = DiscreteMeasure::from_parts(&[0.5, 0.5], &[vec![0.0], vec![147.77 * 2f64.powf(0.25)]]).unwrap();
        assert!((tau_max(&mu, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(tau_max(&DiscreteMeasure::from_parts(&[1.0], &[vec![0.0]]).unwrap(), 1).unwrap().is_infinite());
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mu = DiscreteMeasure::from_parts(&[0.5, 0.2], &[vec![0.0], vec![1.0]]).unwrap();
        assert!(simulate_mixture(&mu, &TemplateDistribution::point_mass(), 3, 0).is_err());
    }
}
