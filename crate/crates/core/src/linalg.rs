//! Dense derivative tensors, their operator norms, and a guarded symmetric
//! linear solve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full (not symmetry-packed) tensor of `order` slots over `R^d`.
///
/// Entry `(i_1, …, i_k)` lives at `Σ_j i_j d^(k-1-j)`, i.e. row-major with
/// the first slot slowest. Dimensions here are small (d ≤ 3, order ≤ 4).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivTensor {
    pub d: usize,
    pub order: usize,
    pub data: Vec<f64>,
}

impl DerivTensor {
    pub fn zeros(d: usize, order: usize) -> Self {
        Self { d, order, data: vec![0.0; d.pow(order as u32)] }
    }

    /// Build by evaluating `f` on every multi-index.
    pub fn from_fn(d: usize, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(d, order);
        let mut idx = vec![0usize; order];
        for flat in 0..t.data.len() {
            let mut rem = flat;
            for slot in (0..order).rev() {
                idx[slot] = rem % d;
                rem /= d;
            }
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    /// `T(v_1, …, v_k)`.
    pub fn contract(&self, vs: &[&[f64]]) -> f64 {
        assert_eq!(vs.len(), self.order, "one vector per slot");
        let mut acc = 0.0;
        let mut idx = vec![0usize; self.order];
        for (flat, &val) in self.data.iter().enumerate() {
            if val == 0.0 {
                continue;
            }
            let mut rem = flat;
            for slot in (0..self.order).rev() {
                idx[slot] = rem % self.d;
                rem /= self.d;
            }
            let mut w = val;
            for (slot, &i) in idx.iter().enumerate() {
                w *= vs[slot][i];
            }
            acc += w;
        }
        acc
    }

    /// Contract every slot but the first with `u`, giving `T(·, u, …, u)`.
    pub fn partial_contract(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        if self.order == 0 {
            return out;
        }
        let tail = self.d.pow((self.order - 1) as u32);
        for i in 0..self.d {
            let mut acc = 0.0;
            for rest in 0..tail {
                let mut rem = rest;
                let mut w = self.data[i * tail + rest];
                for _ in 1..self.order {
                    w *= u[rem % self.d];
                    rem /= self.d;
                }
                acc += w;
            }
            out[i] = acc;
        }
        out
    }

    /// `T(M·, …, M·)` for a square matrix `M`.
    pub fn precompose(&self, m: &DMatrix<f64>) -> DerivTensor {
        let mut cur = self.clone();
        for slot in 0..self.order {
            let mut next = DerivTensor::zeros(self.d, self.order);
            let mut idx = vec![0usize; self.order];
            for flat in 0..next.data.len() {
                let mut rem = flat;
                for s in (0..self.order).rev() {
                    idx[s] = rem % self.d;
                    rem /= self.d;
                }
                let keep = idx[slot];
                let mut acc = 0.0;
                for a in 0..self.d {
                    idx[slot] = a;
                    acc += cur.get(&idx) * m[(a, keep)];
                }
                next.data[flat] = acc;
            }
            cur = next;
        }
        cur
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.order, 2);
        DMatrix::from_row_slice(self.d, self.d, &self.data)
    }

    /// Euclidean operator norm `sup |T(u_1, …, u_k)|` over unit vectors.
    ///
    /// Exact for order ≤ 2. For symmetric tensors of higher order the norm
    /// equals `sup |T(u, …, u)|`, which is located by shifted symmetric power
    /// iteration from a deterministic set of starting points.
    pub fn operator_norm(&self) -> f64 {
        match self.order {
            0 => self.data[0].abs(),
            1 => self.data.iter().map(|v| v * v).sum::<f64>().sqrt(),
            2 => {
                let m = self.as_matrix();
                let sym = (&m + m.transpose()) * 0.5;
                SymmetricEigen::new(sym).eigenvalues.amax()
            }
            _ => symmetric_power_norm(self),
        }
    }
}

fn symmetric_power_norm(t: &DerivTensor) -> f64 {
    let d = t.d;
    let scale: f64 = t.data.iter().map(|v| v.abs()).sum();
    if scale == 0.0 {
        return 0.0;
    }
    if d == 1 {
        return t.data[0].abs();
    }
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        starts.push(e);
        for j in (i + 1)..d {
            for sgn in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e[j] = sgn;
                starts.push(e);
            }
        }
    }
    // A fixed low-discrepancy fan of extra directions.
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    for k in 0..24 {
        let v: Vec<f64> = (0..d).map(|i| ((k as f64 + 1.0) * golden * (i as f64 + 1.0)).fract() - 0.5).collect();
        starts.push(v);
    }
    let mut best = 0.0f64;
    for s in starts {
        for sign in [1.0, -1.0] {
            let mut u = normalize(s.clone());
            // Maximise sign·T(u,…,u); the shift makes the iteration monotone.
            for _ in 0..500 {
                let g = t.partial_contract(&u);
                let next: Vec<f64> = g.iter().zip(&u).map(|(gi, ui)| sign * gi + scale * ui).collect();
                let next = normalize(next);
                let delta: f64 = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum();
                u = next;
                if delta < 1e-14 {
                    break;
                }
            }
            let refs: Vec<&[f64]> = (0..t.order).map(|_| u.as_slice()).collect();
            best = best.max(t.contract(&refs).abs());
        }
    }
    best
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Solution of a symmetric system together with its conditioning.
#[derive(Clone, Debug)]
pub struct SymmetricSolve {
    pub x: DVector<f64>,
    pub condition: f64,
    pub min_abs_eigenvalue: f64,
}

/// Condition number above which a symmetric system is declared ill-posed.
pub const ILL_POSED_CONDITION: f64 = 1e12;

/// Solve `A x = b` for symmetric `A` with LU factorisation plus two rounds of
/// iterative refinement. The condition number is taken from the symmetric
/// eigenvalues; above [`ILL_POSED_CONDITION`] the system is rejected.
pub fn solve_symmetric(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<SymmetricSolve> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || b.len() != n {
        return Err(Error::InvalidArgument("symmetric solve needs a square system".into()));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let max = eig.eigenvalues.amax();
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= ILL_POSED_CONDITION) {
        return Err(Error::IllPosed(format!("condition number {condition:.3e} exceeds {ILL_POSED_CONDITION:.0e}")));
    }
    let lu = sym.clone().lu();
    let mut x = lu.solve(b).ok_or_else(|| Error::IllPosed("singular factorisation".into()))?;
    for _ in 0..2 {
        let r = b - &sym * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    Ok(SymmetricSolve { x, condition, min_abs_eigenvalue: min })
}

/// Spectral norm of the inverse of a symmetric matrix, `1 / min |λ|`.
pub fn symmetric_inverse_norm(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    let min = SymmetricEigen::new(sym).eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    1.0 / min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_two_norm_is_spectral() {
        let t = DerivTensor { d: 2, order: 2, data: vec![2.0, 1.0, 1.0, 2.0] };
        assert!((t.operator_norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn order_three_norm_matches_grid() {
        // T = sum of rank-one cubes, symmetric.
        let a = [0.8, -0.3];
        let b = [0.2, 0.9];
        let t = DerivTensor::from_fn(2, 3, |i| 1.5 * a[i[0]] * a[i[1]] * a[i[2]] - 0.7 * b[i[0]] * b[i[1]] * b[i[2]]);
        let mut grid_best = 0.0f64;
        for k in 0..200_000 {
            let th = std::f64::consts::PI * k as f64 / 200_000.0;
            let u = [th.cos(), th.sin()];
            grid_best = grid_best.max(t.contract(&[&u, &u, &u]).abs());
        }
        assert!((t.operator_norm() - grid_best).abs() < 1e-8);
    }

    #[test]
    fn precompose_scales_entries() {
        let t = DerivTensor::from_fn(2, 3, |i| (i[0] + 2 * i[1] + 3 * i[2]) as f64);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let p = t.precompose(&m);
        let idx = [1, 0, 1];
        assert!((p.get(&idx) - t.get(&idx) * 0.5 * 2.0 * 0.5).abs() < 1e-14);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(solve_symmetric(&a, &b), Err(Error::IllPosed(_))));
    }

    #[test]
    fn solve_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, 3.0]);
        let s = solve_symmetric(&a, &b).unwrap();
        assert!((s.x[0] - 3.0).abs() < 1e-14 && (s.x[1] - 2.0).abs() < 1e-14);
    }
}
