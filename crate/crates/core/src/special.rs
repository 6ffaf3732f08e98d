//! Scalar special functions: `sinc` and its derivatives, truncated Taylor
//! jets, and the order-4 Irwin-Hall density.

/// Highest derivative order carried by [`Jet`].
pub const JET_ORDER: usize = 4;

/// Values `[f, f', f'', f''', f'''']` of a scalar function at a point.
pub type Jet = [f64; JET_ORDER + 1];

const SINC_SERIES_CUTOFF: f64 = 1e-4;

/// `sin(z)/z`, with a short series below `|z| < 1e-4` to avoid `0/0`.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < SINC_SERIES_CUTOFF {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `sinc` and its first four derivatives.
///
/// For `|z| < 1` the Maclaurin series is differentiated term by term. Further
/// out the identity `z·sinc(z) = sin(z)`, differentiated `n` times, gives
/// `sinc⁽ⁿ⁾ = (sin⁽ⁿ⁾ − n·sinc⁽ⁿ⁻¹⁾)/z`, which is stable once `|z| ≥ 1`.
pub fn sinc_jet(z: f64) -> Jet {
    let mut out = [0.0; JET_ORDER + 1];
    if z.abs() < 1.0 {
        // sinc(z) = Σ_k (-1)^k z^{2k} / (2k+1)!
        let mut coef = 1.0; // (-1)^k / (2k+1)!
        for k in 0..18usize {
            let p = 2 * k;
            for (n, slot) in out.iter_mut().enumerate() {
                if n > p {
                    break;
                }
                // d^n z^p = p!/(p-n)! z^{p-n}
                let mut falling = 1.0;
                for q in 0..n {
                    falling *= (p - q) as f64;
                }
                *slot += coef * falling * z.powi((p - n) as i32);
            }
            coef /= -(((2 * k + 2) * (2 * k + 3)) as f64);
        }
        out[0] = sinc(z);
    } else {
        let (s, c) = z.sin_cos();
        let sin_derivs = [s, c, -s, -c, s];
        out[0] = s / z;
        for n in 1..=JET_ORDER {
            out[n] = (sin_derivs[n] - n as f64 * out[n - 1]) / z;
        }
    }
    out
}

/// Jet of `f^p` from the jet of `f`, by multiplying truncated Taylor series.
pub fn jet_pow(f: &Jet, p: u32) -> Jet {
    let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
    let base: [f64; JET_ORDER + 1] = std::array::from_fn(|k| f[k] / fact[k]);
    let mut acc = [0.0; JET_ORDER + 1];
    acc[0] = 1.0;
    for _ in 0..p {
        let mut next = [0.0; JET_ORDER + 1];
        for i in 0..=JET_ORDER {
            for j in 0..=(JET_ORDER - i) {
                next[i + j] += acc[i] * base[j];
            }
        }
        acc = next;
    }
    std::array::from_fn(|k| acc[k] * fact[k])
}

/// Jet of `x ↦ f(x / a)` from the jet of `f` at `x / a`.
pub fn jet_rescale(f: &Jet, a: f64) -> Jet {
    let mut out = *f;
    let mut s = 1.0;
    for v in out.iter_mut() {
        *v *= s;
        s /= a;
    }
    out
}

/// Density of the sum of four independent `U(0, 1)` variables (the cubic
/// B-spline), evaluated with its piecewise polynomial form and symmetry about
/// 2 so there is no cancellation near the edges of the support.
pub fn irwin_hall4_density(x: f64) -> f64 {
    if !(x > 0.0 && x < 4.0) {
        return 0.0;
    }
    let y = if x > 2.0 { 4.0 - x } else { x };
    if y <= 1.0 {
        y * y * y / 6.0
    } else {
        (-3.0 * y * y * y + 12.0 * y * y - 12.0 * y + 4.0) / 6.0
    }
}

/// One-dimensional spectral density of the sinc-4 kernel with bandwidth
/// `tau`: the law of a sum of four uniforms on `[-1/(4τ), 1/(4τ)]`.
pub fn sinc4_spectral_1d(omega: f64, tau: f64) -> f64 {
    2.0 * tau * irwin_hall4_density(2.0 * tau * omega + 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Alternating-sum form of the same density, used as an oracle.
    fn irwin_hall_sum(x: f64) -> f64 {
        if !(0.0..=4.0).contains(&x) {
            return 0.0;
        }
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
        let mut acc = 0.0;
        for k in 0..=(x.floor() as usize).min(4) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom[k] * (x - k as f64).powi(3);
        }
        acc / 6.0
    }

    #[test]
    fn irwin_hall_matches_alternating_sum() {
        for k in 0..=4000 {
            let x = k as f64 * 1e-3;
            assert!((irwin_hall4_density(x) - irwin_hall_sum(x)).abs() < 1e-12, "x = {x}");
        }
        assert!((irwin_hall4_density(2.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sinc_jet_matches_finite_differences() {
        for &z in &[-7.3, -2.0, -1.0, -0.999, -0.3, 0.0, 1e-6, 0.5, 0.9999, 1.0, 1.5, 4.0, 12.5] {
            let j = sinc_jet(z);
            let h = 1e-5;
            let jp = sinc_jet(z + h);
            let jm = sinc_jet(z - h);
            for n in 1..=JET_ORDER {
                let fd = (jp[n - 1] - jm[n - 1]) / (2.0 * h);
                assert!((fd - j[n]).abs() < 1e-8, "z={z}, n={n}: {fd} vs {}", j[n]);
            }
            assert!((j[0] - sinc(z)).abs() < 1e-15);
        }
    }

    #[test]
    fn sinc_origin_derivatives() {
        let j = sinc_jet(0.0);
        assert_eq!(j[0], 1.0);
        assert!((j[2] + 1.0 / 3.0).abs() < 1e-15);
        assert!((j[4] - 1.0 / 5.0).abs() < 1e-15);
        assert!(j[1].abs() < 1e-300 && j[3].abs() < 1e-300);
    }

    #[test]
    fn jet_pow_matches_direct_power() {
        let z = 0.7;
        let j4 = jet_pow(&sinc_jet(z), 4);
        assert!((j4[0] - sinc(z).powi(4)).abs() < 1e-15);
        let h = 1e-5;
        let fd = (jet_pow(&sinc_jet(z + h), 4)[3] - jet_pow(&sinc_jet(z - h), 4)[3]) / (2.0 * h);
        assert!((fd - j4[4]).abs() < 1e-7);
    }

    #[test]
    fn sinc_calculus_bound_holds() {
        // |sinc z| ≤ (1 − z²/12) on |z| ≤ 2 and ≤ 1/2 beyond.
        for k in 0..=200_000 {
            let z = k as f64 * 1e-4;
            let bound = if z <= 2.0 { 1.0 - z * z / 12.0 } else { 0.5 };
            assert!(sinc(z).abs() <= bound + 1e-15, "z = {z}");
        }
    }
}
