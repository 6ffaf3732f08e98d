//! Command-line front end: simulate mixtures, sketch datasets, estimate
//! measures, build and audit certificates, and report error bounds.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use offgrid::certificates::{
    audit_certificate, build_certificate, build_sketched_certificate, AuditGrid, AuditTargets, CertificateAudit, DualCertificate,
    SketchedCertificate,
};
use offgrid::kernels::{model_kernel_from_template, SincProductKernel};
use offgrid::lpc::{audit_curvature, audit_sinc4, derivative_bound_audit, CurvatureGrid, Sinc4AuditOptions};
use offgrid::pipeline::{run_experiment, simulate_mixture, ExperimentConfig};
use offgrid::sketching::{draw_operator, read_json, sketch_dataset, write_json, Samples, SketchFile, SketchingLaw};
use offgrid::solver::{
    bound_verdict, calibrate_kappa, effective_radius, solve, BlassoProblem, BoundConstants, KappaPreset, Observation, RadiusSchedule,
    SolveConfig,
};
use offgrid::switch::{switch_constant, FrequencyGrid};
use offgrid::{DiscreteMeasure, KernelSpec, MetricTensor, ParameterBox, TemplateDistribution, TiKernel};

#[derive(Parser)]
#[command(name = "offgrid", version, about = "Off-the-grid sparse measure recovery with the BLASSO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    UniformCube,
    IrwinHall4,
}

impl From<LawArg> for SketchingLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::UniformCube => SketchingLaw::UniformCube,
            LawArg::IrwinHall4 => SketchingLaw::IrwinHall4,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KappaPresetArg {
    S2mix,
    Fixed,
}

#[derive(Subcommand)]
enum Command {
    /// Draw mixture samples for every (n, seed) of an experiment config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sketch a headerless CSV dataset.
    Sketch {
        #[arg(long)]
        samples: PathBuf,
        /// Model kernel spec: `template` (bandwidth and template) or `sinc` (point mass).
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform-cube")]
        law: LawArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the sketched BLASSO for a sketch file.
    Estimate {
        #[arg(long)]
        sketch: PathBuf,
        #[arg(long, value_enum, default_value = "s2mix")]
        kappa_preset: KappaPresetArg,
        /// Regularization for the `fixed` preset.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 1)]
        s0: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c_pivot: f64,
        /// Lower corner of the parameter box, comma separated. Defaults to the
        /// recorded sample bounds padded by `10τ`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lower: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        upper: Vec<f64>,
        /// Optional solver config JSON.
        #[arg(long)]
        solver: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build and audit the dual certificate interpolating the signs of a measure.
    Certify {
        #[arg(long)]
        measure: PathBuf,
        /// Pivot kernel spec.
        #[arg(long)]
        kernel: PathBuf,
        /// Also build the sketched certificate with this sketch's frequencies.
        #[arg(long)]
        sketch: Option<PathBuf>,
        #[arg(long)]
        eps0: f64,
        #[arg(long)]
        eps2: f64,
        #[arg(long)]
        r0: f64,
        #[arg(long, default_value_t = 10_000)]
        far_samples: usize,
        #[arg(long, default_value_t = 200)]
        near_grid_density: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// LPC constants of a kernel and their numerical audits.
    Lpc {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        s0: usize,
        /// Near radius; required for kernels without closed-form constants.
        #[arg(long)]
        r0: Option<f64>,
        /// Far curvature the audit must certify (kernels without closed forms).
        #[arg(long)]
        eps0: Option<f64>,
        /// Near curvature the audit must certify (kernels without closed forms).
        #[arg(long)]
        eps2: Option<f64>,
        #[arg(long, default_value_t = 200)]
        grid_density: usize,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kernel-switch constant between a pivot and a model kernel.
    SwitchConstant {
        #[arg(long)]
        pivot: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Compare an estimate with the error bounds.
    Report {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        mu0: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Plot-ready CSV of the bound curves and the measured point.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a full experiment grid.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Inputs of the `report` subcommand.
#[derive(Deserialize)]
struct ReportConfig {
    constants: BoundConstants,
    /// Bandwidth of the sinc-4 pivot, which fixes the metric `Id/(12τ²)`.
    tau: f64,
    gamma: f64,
    #[serde(default)]
    s0: Option<usize>,
    #[serde(default)]
    r: Option<f64>,
    #[serde(default)]
    n: Option<u64>,
    #[serde(default)]
    schedule: Option<RadiusSchedule>,
}

#[derive(Serialize)]
struct CertifyOutput {
    certificate: DualCertificate,
    audit: CertificateAudit,
    #[serde(skip_serializing_if = "Option::is_none")]
    sketched: Option<SketchedOutput>,
}

#[derive(Serialize)]
struct SketchedOutput {
    certificate: SketchedCertificate,
    audit: CertificateAudit,
    coefficients: Vec<[f64; 2]>,
}

fn print_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_json(p, value)?,
        None => {
            use std::io::Write;
            let text = serde_json::to_string_pretty(value)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(path).with_context(|| format!("reading {}", path.display()))
}

fn read_samples(path: &Path) -> Result<Samples> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Samples::read_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

/// Bandwidth and template of a model kernel spec.
fn model_parts(spec: &KernelSpec) -> Result<(f64, TemplateDistribution)> {
    match spec {
        KernelSpec::Template { tau, template, .. } => Ok((*tau, TemplateDistribution::from_spec(template)?)),
        KernelSpec::Sinc { tau, .. } => Ok((*tau, TemplateDistribution::point_mass())),
        _ => Err(offgrid::Error::Configuration("sketching needs a `template` or `sinc` model kernel".into()).into()),
    }
}

/// Reports a failed audit through the numerical-failure exit code.
fn audit_outcome(pass: bool, what: &str) -> Result<()> {
    if pass {
        Ok(())
    } else {
        Err(offgrid::Error::Diagnostic(format!("{what} failed")).into())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load::<ExperimentConfig>(&config)?;
            let template = TemplateDistribution::from_spec(&cfg.template)?;
            std::fs::create_dir_all(&out)?;
            write_json(&out.join("mu0.json"), &cfg.mu0)?;
            for &n in &cfg.ns {
                for &seed in &cfg.seeds {
                    let s = simulate_mixture(&cfg.mu0, &template, n as usize, seed)?;
                    s.write_csv(File::create(out.join(format!("samples_n{n}_seed{seed}.csv")))?)?;
                }
            }
        }
        Command::Sketch { samples, kernel, m, seed, law, out } => {
            let spec: KernelSpec = load(&kernel)?;
            let (tau, template) = model_parts(&spec)?;
            let data = read_samples(&samples)?;
            let op = draw_operator(law.into(), &template, data.d, tau, m, seed)?;
            let z = sketch_dataset(&data, &op)?;
            SketchFile::new(&op, &z)?.with_sample_bounds(&data)?.write(&out)?;
        }
        Command::Estimate { sketch, kappa_preset, kappa, s0, alpha, c_pivot, lower, upper, solver, out, trace } => {
            let file = load::<SketchFile>(&sketch)?;
            let (op, z) = file.split()?;
            let domain = if lower.is_empty() && upper.is_empty() {
                let bounds = file.sample_bounds.as_ref().ok_or_else(|| {
                    offgrid::Error::InvalidArgument("the sketch file records no sample bounds; pass --lower and --upper".into())
                })?;
                let pad = 10.0 * op.tau;
                ParameterBox::new(bounds.iter().map(|b| b.0 - pad).collect(), bounds.iter().map(|b| b.1 + pad).collect())?
            } else {
                ParameterBox::new(lower, upper)?
            };
            let pivot = SincProductKernel::sinc4(op.d, op.tau)?;
            let kappa = match kappa_preset {
                KappaPresetArg::Fixed => kappa.ok_or_else(|| anyhow!("--kappa is required with the fixed preset"))?,
                KappaPresetArg::S2mix => {
                    let tpl = match &op.template {
                        Some(t) => TemplateDistribution::from_spec(t)?,
                        None => TemplateDistribution::point_mass(),
                    };
                    let model = model_kernel_from_template(&tpl, op.tau, op.d, Some(2))?;
                    let c_switch = switch_constant(&pivot, &model, &FrequencyGrid::default())?.value;
                    let noise = offgrid::sketching::noise_level_bound(alpha, op.m, z.n, op.tau, op.d, op.law, Default::default())?;
                    calibrate_kappa(noise.bound, s0, KappaPreset::S2mix { c_pivot, c_switch }.c_kappa())?
                }
            };
            let cfg: SolveConfig = match solver {
                Some(p) => load(&p)?,
                None => SolveConfig::default(),
            };
            let g = pivot.metric().clone();
            let problem = BlassoProblem::new(Observation::Sketched { op, z: z.z }, kappa, domain, g)?;
            let (mu, tr) = solve(&problem, &cfg)?;
            write_json(&out, &mu)?;
            if let Some(t) = trace {
                write_json(&t, &tr)?;
            }
            eprintln!("kappa = {kappa}, atoms = {}, converged = {}", mu.len(), tr.converged);
        }
        Command::Certify { measure, kernel, sketch, eps0, eps2, r0, far_samples, near_grid_density, out } => {
            let mu: DiscreteMeasure = load(&measure)?;
            let spec: KernelSpec = load(&kernel)?;
            let pivot = spec.build(mu.dim())?;
            let points = mu.positions();
            let signs: Vec<f64> = mu.weights().iter().map(|w| if *w >= 0.0 { 1.0 } else { -1.0 }).collect();
            let grid = AuditGrid { far_samples, near_grid_density, ..AuditGrid::default() };
            let cert = build_certificate(&points, &signs, pivot.clone())?;
            let g = pivot.metric().clone();
            let audit = audit_certificate(&cert, AuditTargets { eps0, eps2, r0 }, &g, &grid, None)?;
            let mut pass = audit.pass;
            let sketched = match sketch {
                Some(p) => {
                    let (op, _) = load::<SketchFile>(&p)?.split()?;
                    let sc = build_sketched_certificate(&points, &signs, &op)?;
                    let targets = AuditTargets { eps0: eps0 / 4.0, eps2: 1.5 * eps2, r0 };
                    let domain = points_box(&points, r0, &g)?;
                    let a = audit_certificate(&sc, targets, &g, &grid, Some(&domain))?;
                    pass &= a.pass;
                    let coefficients = sc.c.iter().map(|c| [c.re, c.im]).collect();
                    Some(SketchedOutput { certificate: sc, audit: a, coefficients })
                }
                None => None,
            };
            print_json(&CertifyOutput { certificate: cert, audit, sketched }, out.as_deref())?;
            audit_outcome(pass, "certificate audit")?;
        }
        Command::Lpc { kernel, d, s0, r0, eps0, eps2, grid_density, trials, seed, out } => {
            let spec: KernelSpec = load(&kernel)?;
            if let KernelSpec::Sinc4 { .. } = spec {
                let opts = Sinc4AuditOptions {
                    grid: CurvatureGrid { near_steps: grid_density, ..CurvatureGrid::default() },
                    derivative_trials: trials,
                    seed,
                };
                let report = audit_sinc4(d, s0, &opts)?;
                print_json(&report, out.as_deref())?;
                audit_outcome(report.passed, "LPC audit")?;
            } else {
                let r0 = r0.ok_or_else(|| anyhow!("--r0 is required for kernels without closed-form LPC constants"))?;
                let k = spec.build(Some(d))?;
                let bx = ParameterBox::symmetric(d, 50.0 / k.metric().matrix().diagonal().min().sqrt())?;
                let curvature = audit_curvature(k.as_ref(), r0, &bx, grid_density)?;
                let derivatives = derivative_bound_audit(k.as_ref(), trials, seed)?;
                let mut failures = Vec::new();
                if eps0.is_some_and(|e| curvature.eps0_hat < e) {
                    failures.push(format!("far curvature {} is below the required {}", curvature.eps0_hat, eps0.unwrap_or_default()));
                }
                if eps2.is_some_and(|e| curvature.eps2_hat < e) {
                    failures.push(format!("near curvature {} is below the required {}", curvature.eps2_hat, eps2.unwrap_or_default()));
                }
                if !curvature.tail_certified {
                    failures.push("the far scan does not cover the box and the kernel has no decay law".into());
                }
                failures.extend(
                    derivatives.iter().filter(|e| !e.within_bound()).map(|e| format!("derivative bound ({}, {}) exceeded", e.i, e.j)),
                );
                let passed = failures.is_empty();
                let report = serde_json::json!({
                    "d": d,
                    "r0": r0,
                    "curvature": curvature,
                    "derivatives": derivatives,
                    "passed": passed,
                    "failures": failures,
                });
                print_json(&report, out.as_deref())?;
                audit_outcome(passed, "LPC audit")?;
            }
        }
        Command::SwitchConstant { pivot, model, d, nodes } => {
            let p: KernelSpec = load(&pivot)?;
            let m: KernelSpec = load(&model)?;
            let pk = p.build(d)?;
            let mk = m.build(Some(pk.dim()))?;
            let grid = FrequencyGrid { nodes_per_axis: nodes, ..FrequencyGrid::default() };
            print_json(&switch_constant(pk.as_ref(), mk.as_ref(), &grid)?, None)?;
        }
        Command::Report { mu, mu0, config, csv } => {
            let mu: DiscreteMeasure = load(&mu)?;
            let mu0: DiscreteMeasure = load(&mu0)?;
            let cfg: ReportConfig = load(&config)?;
            let d = mu0.dim().ok_or_else(|| anyhow!("mu0 has no atoms"))?;
            let s0 = cfg.s0.unwrap_or(mu0.len());
            let g = MetricTensor::scaled_identity(d, 1.0 / (12.0 * cfg.tau * cfg.tau))?;
            let cap = 0.99 * cfg.constants.radius_cap().0;
            let r = match (cfg.r, cfg.n, cfg.schedule) {
                (Some(r), _, _) => r,
                (None, Some(n), Some(s)) => effective_radius(n as f64, s)?.r.min(cap),
                _ => bail!("report config needs `r`, or both `n` and `schedule`"),
            };
            let report = bound_verdict(&mu, &mu0, r, cfg.gamma, s0, &cfg.constants, &g)?;
            print_json(&report, None)?;
            if let Some(path) = csv {
                write_bound_curves(&path, &cfg, &report, s0, &g, &mu, &mu0)?;
            }
        }
        Command::Run { config, out } => {
            let mut cfg = load::<ExperimentConfig>(&config)?;
            if out.is_some() {
                cfg.output = out;
            }
            let record = run_experiment(&cfg)?;
            let summary = serde_json::json!({
                "config_digest": record.config_digest,
                "cells": record.cells.len(),
                "failures": record.failures,
                "near_optimal": record.cells.iter().filter(|c| c.near_optimal).count(),
                "bounds_hold": record.cells.iter().filter(|c| c.report.pass).count(),
            });
            print_json(&summary, None)?;
        }
    }
    Ok(())
}

/// Box around the certificate points padded by the far scan radius.
fn points_box(points: &[Vec<f64>], pad_fr: f64, g: &MetricTensor) -> Result<ParameterBox> {
    let d = g.dim();
    let scale: Vec<f64> = (0..d).map(|i| 1.0 / g.matrix()[(i, i)].sqrt()).collect();
    let pad = offgrid::certificates::FAR_SCAN_RADIUS.max(pad_fr);
    let lower = (0..d).map(|i| points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min) - pad * scale[i]).collect();
    let upper = (0..d).map(|i| points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max) + pad * scale[i]).collect();
    Ok(ParameterBox::new(lower, upper)?)
}

/// Bound curves over sample sizes for a noise level scaling as `n^{-1/2}`,
/// with the measured quantities of the report at the configured `n`.
fn write_bound_curves(
    path: &Path,
    cfg: &ReportConfig,
    report: &offgrid::solver::BoundReport,
    s0: usize,
    g: &MetricTensor,
    mu: &DiscreteMeasure,
    mu0: &DiscreteMeasure,
) -> Result<()> {
    use std::io::Write;
    let mut f = File::create(path)?;
    writeln!(f, "kind,n,r,gamma,far_bound,near_bound,far_mass,max_near_error")?;
    let n_ref = cfg.n.unwrap_or(1) as f64;
    let schedule = cfg.schedule.unwrap_or(RadiusSchedule::Log);
    let cap = 0.99 * cfg.constants.radius_cap().0;
    for e in 2..=7 {
        let n = 10f64.powi(e);
        let gamma = cfg.gamma * (n_ref / n).sqrt();
        let r = match cfg.r {
            Some(r) => r,
            None => effective_radius(n, schedule)?.r.min(cap),
        };
        let rep = bound_verdict(mu, mu0, r, gamma, s0, &cfg.constants, g)?;
        writeln!(f, "bound,{n},{r},{gamma},{},{},,", rep.far_bound, rep.near_bound)?;
    }
    let max_near = report.near_errors.iter().cloned().fold(0.0, f64::max);
    writeln!(
        f,
        "measured,{},{},{},{},{},{},{}",
        cfg.n.map(|n| n.to_string()).unwrap_or_default(),
        report.r,
        report.gamma,
        report.far_bound,
        report.near_bound,
        report.far_mass,
        max_near
    )?;
    Ok(())
}

/// The error chain without causes whose text an outer message already repeats.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            let code = e.downcast_ref::<offgrid::Error>().map(|e| e.exit_code()).unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}
