use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BlassoProblem, Residual};
use crate::error::{invalid, Result};
use crate::geometry::{Atom, DiscreteMeasure};
use crate::parallel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub max_atoms: usize,
    /// Grid nodes per axis for the atom search; `None` picks 1024 for
    /// `d = 1`, 128 for `d = 2` and 16 beyond.
    pub lmo_grid: Option<usize>,
    pub lmo_refine_steps: usize,
    /// Iteration cap of each joint weight/position descent.
    pub sliding_iters: usize,
    pub armijo_c: f64,
    /// Fisher-Rao radius under which two atoms are merged.
    pub merge_radius: f64,
    /// Atoms with `|w| < prune_factor · κ` are dropped when that does not
    /// raise the objective.
    pub prune_factor: f64,
    /// Stop once `max |η| ≤ κ (1 + gap_tol)`.
    pub gap_tol: f64,
    pub max_outer: usize,
    /// Recorded in the trace; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_atoms: 50,
            lmo_grid: None,
            lmo_refine_steps: 20,
            sliding_iters: 200,
            armijo_c: 1e-4,
            merge_radius: 0.025,
            prune_factor: 1e-3,
            gap_tol: 1e-6,
            max_outer: 200,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn grid_per_axis(&self, d: usize) -> usize {
        self.lmo_grid.unwrap_or(match d {
            1 => 1024,
            2 => 128,
            _ => 16,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.max_atoms == 0 || self.max_outer == 0 || self.sliding_iters == 0 {
            return invalid("solver budgets must be positive");
        }
        if !(self.merge_radius > 0.0 && self.prune_factor > 0.0 && self.gap_tol > 0.0 && self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return invalid("solver tolerances must be positive (and armijo_c < 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    /// Objective after each accepted outer step, starting from the zero measure.
    pub objectives: Vec<f64>,
    /// Relative gap `max|η|/κ − 1` measured before each outer step.
    pub gaps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: String,
    pub final_measure: DiscreteMeasure,
    pub seed: u64,
    /// Set by callers that know the target measure.
    pub near_optimal: Option<bool>,
}

impl SolveTrace {
    pub fn is_monotone(&self) -> bool {
        self.objectives.windows(2).all(|w| w[1] <= w[0])
    }
}

struct Context<'a> {
    problem: &'a BlassoProblem,
    cfg: &'a SolveConfig,
    energy: f64,
    curvature: DMatrix<f64>,
    /// Rounding-level objective change that tidying may absorb.
    slack: f64,
}

fn objective_of(p: &BlassoProblem, w: &[f64], x: &[Vec<f64>]) -> Result<f64> {
    p.objective(&to_measure(w, x))
}

fn to_measure(w: &[f64], x: &[Vec<f64>]) -> DiscreteMeasure {
    DiscreteMeasure { atoms: w.iter().zip(x).map(|(w, x)| Atom { w: *w, x: x.clone() }).collect() }
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Coordinate descent on `½ aᵀGa − bᵀa + κ‖a‖₁` from a warm start.
fn lasso_weights(gram: &DMatrix<f64>, b: &DVector<f64>, kappa: f64, warm: &[f64]) -> Vec<f64> {
    let s = warm.len();
    let mut a = warm.to_vec();
    let scale = (0..s).map(|j| gram[(j, j)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for _ in 0..20_000 {
        let mut change: f64 = 0.0;
        for j in 0..s {
            let gjj = gram[(j, j)];
            if gjj <= 0.0 {
                a[j] = 0.0;
                continue;
            }
            let mut c = b[j];
            for k in 0..s {
                if k != j {
                    c -= gram[(j, k)] * a[k];
                }
            }
            let new = soft(c, kappa) / gjj;
            change = change.max((new - a[j]).abs() * gjj.sqrt());
            a[j] = new;
        }
        if change <= 1e-15 * scale.sqrt() * (1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            break;
        }
    }
    a
}

impl Context<'_> {
    fn refit(&self, w: &[f64], x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let (gram, b) = self.problem.weight_system(x)?;
        Ok(lasso_weights(&gram, &b, self.problem.kappa, w))
    }

    /// Largest `|η|` over the search grid, refined by golden-section sweeps.
    fn lmo(&self, res: &Residual) -> (Vec<f64>, f64) {
        let bx = &self.problem.domain;
        let d = bx.dim();
        let n = self.cfg.grid_per_axis(d).max(2);
        let total = n.pow(d as u32);
        let widths = bx.widths();
        let node = |flat: usize| -> Vec<f64> {
            let mut rem = flat;
            (0..d)
                .map(|i| {
                    let k = rem % n;
                    rem /= n;
                    bx.lower[i] + widths[i] * k as f64 / (n - 1) as f64
                })
                .collect()
        };
        let best = parallel::install(|| {
            (0..total)
                .into_par_iter()
                .map(|q| (res.correlation(&node(q)).abs(), q))
                .reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        });
        let mut x = node(best.1);
        let mut val = best.0;
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..2 {
            for i in 0..d {
                let cell = widths[i] / (n - 1) as f64;
                let (mut lo, mut hi) = ((x[i] - cell).max(bx.lower[i]), (x[i] + cell).min(bx.upper[i]));
                let f = |v: f64| {
                    let mut y = x.clone();
                    y[i] = v;
                    res.correlation(&y).abs()
                };
                let (mut c, mut e) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
                let (mut fc, mut fe) = (f(c), f(e));
                for _ in 0..self.cfg.lmo_refine_steps {
                    if fc >= fe {
                        hi = e;
                        e = c;
                        fe = fc;
                        c = hi - phi * (hi - lo);
                        fc = f(c);
                    } else {
                        lo = c;
                        c = e;
                        fc = fe;
                        e = lo + phi * (hi - lo);
                        fe = f(e);
                    }
                }
                let (v, fv) = if fc >= fe { (c, fc) } else { (e, fe) };
                if fv > val {
                    val = fv;
                    x[i] = v;
                }
            }
        }
        (x, val)
    }

    /// Joint proximal-gradient descent on weights and positions with Armijo
    /// backtracking. Position steps are preconditioned by `w² G`, with `G`
    /// the curvature of the model kernel at zero.
    fn slide(&self, w: &mut Vec<f64>, x: &mut Vec<Vec<f64>>, mut j: f64) -> Result<f64> {
        let p = self.problem;
        let d = p.dim();
        let kappa = p.kappa;
        let floor = (kappa * self.cfg.prune_factor).max(1e-300);
        for _ in 0..self.cfg.sliding_iters {
            let res = p.residual(&to_measure(w, x))?;
            let eta: Vec<f64> = x.iter().map(|xk| res.correlation(xk)).collect();
            let grad: Vec<Vec<f64>> = x.iter().map(|xk| res.correlation_gradient(xk)).collect();
            let hess: Vec<DMatrix<f64>> = w.iter().map(|wk| &self.curvature * wk.abs().max(floor).powi(2)).collect();
            let dirs: Vec<DVector<f64>> = w
                .iter()
                .zip(&grad)
                .zip(&hess)
                .map(|((wk, gk), hk)| {
                    let rhs = DVector::from_iterator(d, gk.iter().map(|v| wk * v));
                    hk.clone().lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(d))
                })
                .collect();
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..50 {
                let nw: Vec<f64> = w.iter().zip(&eta).map(|(wk, ek)| soft(wk + t * ek / self.energy, t * kappa / self.energy)).collect();
                let nx: Vec<Vec<f64>> = x
                    .iter()
                    .zip(&dirs)
                    .map(|(xk, dk)| {
                        let mut y: Vec<f64> = xk.iter().zip(dk.iter()).map(|(a, b)| a + t * b).collect();
                        p.domain.clamp(&mut y);
                        y
                    })
                    .collect();
                let nj = objective_of(p, &nw, &nx)?;
                let mut q = 0.0;
                for k in 0..w.len() {
                    q += self.energy * (nw[k] - w[k]).powi(2);
                    let dx = DVector::from_iterator(d, nx[k].iter().zip(&x[k]).map(|(a, b)| a - b));
                    q += dx.dot(&(&hess[k] * &dx));
                }
                if nj <= j - self.cfg.armijo_c * q / t {
                    accepted = Some((nw, nx, nj));
                    break;
                }
                t *= 0.5;
            }
            let Some((nw, nx, nj)) = accepted else { break };
            let gain = j - nj;
            *w = nw;
            *x = nx;
            j = nj;
            if gain <= 1e-15 * j.abs() {
                break;
            }
        }
        Ok(j)
    }

    /// Drops zero atoms, then tries merges and small-weight pruning, keeping
    /// each change only if the objective does not increase beyond rounding.
    fn tidy(&self, w: &mut Vec<f64>, x: &mut Vec<Vec<f64>>, mut j: f64) -> Result<f64> {
        let p = self.problem;
        let keep: Vec<usize> = (0..w.len()).filter(|&k| w[k] != 0.0).collect();
        *x = keep.iter().map(|&k| x[k].clone()).collect();
        *w = keep.iter().map(|&k| w[k]).collect();

        'merge: loop {
            for a in 0..w.len() {
                for b in a + 1..w.len() {
                    if p.metric.dist(&x[a], &x[b]) < self.cfg.merge_radius {
                        let (wa, wb) = (w[a].abs(), w[b].abs());
                        let pos: Vec<f64> = x[a].iter().zip(&x[b]).map(|(u, v)| (wa * u + wb * v) / (wa + wb).max(f64::MIN_POSITIVE)).collect();
                        let mut tx = x.clone();
                        let mut tw = w.clone();
                        tx[a] = pos;
                        tw[a] += tw[b];
                        tx.remove(b);
                        tw.remove(b);
                        let tw = self.refit(&tw, &tx)?;
                        let tj = objective_of(p, &tw, &tx)?;
                        if tj <= j + self.slack {
                            *w = tw;
                            *x = tx;
                            j = tj;
                            continue 'merge;
                        }
                    }
                }
            }
            break;
        }

        let threshold = self.cfg.prune_factor * p.kappa;
        let small: Vec<usize> = (0..w.len()).filter(|&k| w[k].abs() < threshold).collect();
        if !small.is_empty() {
            let keep: Vec<usize> = (0..w.len()).filter(|k| !small.contains(k)).collect();
            let tx: Vec<Vec<f64>> = keep.iter().map(|&k| x[k].clone()).collect();
            let tw0: Vec<f64> = keep.iter().map(|&k| w[k]).collect();
            let tw = self.refit(&tw0, &tx)?;
            let tj = objective_of(p, &tw, &tx)?;
            if tj <= j + self.slack {
                *w = tw;
                *x = tx;
                j = tj;
            }
        }
        let keep: Vec<usize> = (0..w.len()).filter(|&k| w[k] != 0.0).collect();
        *x = keep.iter().map(|&k| x[k].clone()).collect();
        *w = keep.iter().map(|&k| w[k]).collect();
        Ok(j)
    }
}

/// Sliding Frank-Wolfe: add the atom maximizing `|η|`, refit the weights,
/// slide weights and positions jointly, then merge and prune.
pub fn solve(problem: &BlassoProblem, cfg: &SolveConfig) -> Result<(DiscreteMeasure, SolveTrace)> {
    cfg.validate()?;
    let energy = problem.atom_energy()?;
    if !(energy > 0.0) {
        return invalid("the forward operator maps every atom to zero");
    }
    let mut curvature = problem.model_curvature()?;
    let ridge = 1e-12 * curvature.diagonal().max().max(f64::MIN_POSITIVE);
    for i in 0..curvature.nrows() {
        curvature[(i, i)] += ridge;
    }
    let mut w: Vec<f64> = Vec::new();
    let mut x: Vec<Vec<f64>> = Vec::new();
    let mut j = objective_of(problem, &w, &x)?;
    let ctx = Context { problem, cfg, energy, curvature, slack: 64.0 * f64::EPSILON * j.abs() };
    let mut objectives = vec![j];
    let mut gaps = Vec::new();
    let mut converged = false;
    let mut stop_reason = String::from("outer iteration budget exhausted");
    let mut stalls = 0;
    let mut iterations = 0;

    for _ in 0..cfg.max_outer {
        iterations += 1;
        let res = problem.residual(&to_measure(&w, &x))?;
        let (cand, peak) = ctx.lmo(&res);
        gaps.push(peak / problem.kappa - 1.0);
        if peak <= problem.kappa * (1.0 + cfg.gap_tol) {
            converged = true;
            stop_reason = "certificate gap below tolerance".into();
            break;
        }
        if w.len() >= cfg.max_atoms {
            stop_reason = "atom budget exhausted".into();
            break;
        }
        let before = j;
        let mut tw = w.clone();
        let mut tx = x.clone();
        tw.push(0.0);
        tx.push(cand);
        tw = ctx.refit(&tw, &tx)?;
        let mut tj = objective_of(problem, &tw, &tx)?;
        if tj > j {
            tw = w.clone();
            tx = x.clone();
            tj = j;
        }
        tj = ctx.slide(&mut tw, &mut tx, tj)?;
        let refit = ctx.refit(&tw, &tx)?;
        let rj = objective_of(problem, &refit, &tx)?;
        if rj <= tj {
            tw = refit;
            tj = rj;
        }
        tj = ctx.tidy(&mut tw, &mut tx, tj)?;
        if tj <= j {
            w = tw;
            x = tx;
            j = tj;
        }
        objectives.push(j);
        if before - j <= 1e-14 * before.abs() {
            stalls += 1;
            if stalls >= 3 {
                stop_reason = "no further decrease".into();
                break;
            }
        } else {
            stalls = 0;
        }
    }
    let mu = to_measure(&w, &x);
    let trace = SolveTrace {
        objectives,
        gaps,
        iterations,
        converged,
        stop_reason,
        final_measure: mu.clone(),
        seed: cfg.seed,
        near_optimal: None,
    };
    Ok((mu, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lasso_weights_single_coordinate() {
        let g = DMatrix::from_element(1, 1, 2.0);
        let b = DVector::from_element(1, 3.0);
        assert_eq!(lasso_weights(&g, &b, 1.0, &[0.0]), vec![1.0]);
        assert_eq!(lasso_weights(&g, &b, 5.0, &[0.0]), vec![0.0]);
    }
}
