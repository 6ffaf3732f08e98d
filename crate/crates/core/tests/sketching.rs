mod common;

use num_complex::Complex64;
use offgrid::kernels::model_kernel_from_template;
use offgrid::quadrature::gauss_legendre;
use offgrid::sketching::{
    draw_operator, forward, noise_level_bound, sinc4_sketch_constants, sinc4_sketch_size, sketch_dataset, sketch_size,
    sketched_kernel, sketched_kernel_complex, tail_bound_levels, ConcentrationConstants, Samples, SketchAccumulator,
    SketchFile, SketchOperator, SketchingLaw,
};
use offgrid::{DiscreteMeasure, TemplateDistribution, TiKernel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn naive_entry(op: &SketchOperator, i: usize, rows: &[Vec<f64>]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for z in rows {
        let mut phase = 0.0;
        for l in 0..op.d {
            phase += op.omegas[i][l] * z[l];
        }
        acc += Complex64::new(phase.cos(), -phase.sin());
    }
    acc * op.weights[i] / ((op.m as f64).sqrt() * rows.len() as f64)
}

fn mixture_rows(rng: &mut ChaCha8Rng, n: usize, centers: &[f64], weights: &[f64]) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let k = weights.iter().position(|w| {
                acc += w;
                u < acc
            });
            vec![centers[k.unwrap_or(centers.len() - 1)] + normal.sample(rng)]
        })
        .collect()
}

#[test]
fn uniform_law_weights_are_constant() {
    for (d, tau) in [(1usize, 1.0), (2, 0.5), (3, 1.5)] {
        let op = draw_operator(SketchingLaw::UniformCube, &TemplateDistribution::point_mass(), d, tau, 64, 4).unwrap();
        let expected = tau.powi(-(d as i32));
        assert!(op.weights.iter().all(|w| (w * w - expected).abs() <= 1e-12 * expected));
    }
}

#[test]
fn irwin_hall_law_has_unit_c_lambda() {
    assert_eq!(SketchingLaw::IrwinHall4.c_lambda(2), 1.0);
    let op = draw_operator(SketchingLaw::IrwinHall4, &TemplateDistribution::point_mass(), 2, 0.7, 500, 9).unwrap();
    assert!(op.pivot_scales().iter().all(|s| (s - 1.0).abs() < 1e-12));
    // The uniform law's ratio peaks at the origin: (4τ/3)/(τ/2) per axis.
    assert!((SketchingLaw::UniformCube.c_lambda(2) - (8.0f64 / 3.0).powi(2)).abs() < 1e-12);
}

fn chi_square_p(law: SketchingLaw, tau: f64) -> f64 {
    let m = 10_000;
    let op = draw_operator(law, &TemplateDistribution::point_mass(), 1, tau, m, 2024).unwrap();
    let bins = 20;
    let hw = 1.0 / tau;
    let mut counts = vec![0usize; bins];
    for w in &op.omegas {
        let b = (((w[0] + hw) / (2.0 * hw)) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let (x, wq) = gauss_legendre(16);
    let density = |w: f64| match law {
        SketchingLaw::IrwinHall4 => 2.0 * tau * common::irwin_hall4_by_truncated_powers(2.0 * tau * w + 2.0),
        SketchingLaw::UniformCube => 0.5 * tau,
    };
    let mut stat = 0.0;
    for (b, &c) in counts.iter().enumerate() {
        let (a, e) = (-hw + 2.0 * hw * b as f64 / bins as f64, -hw + 2.0 * hw * (b + 1) as f64 / bins as f64);
        // Bin edges fall on the spline knots, so each bin integrand is a cubic.
        let p: f64 = x.iter().zip(&wq).map(|(xi, wi)| 0.5 * (e - a) * wi * density(0.5 * (a + e) + 0.5 * (e - a) * xi)).sum();
        let expected = p * m as f64;
        stat += (c as f64 - expected).powi(2) / expected;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn frequency_histograms_match_the_laws() {
    for (law, tau) in [(SketchingLaw::IrwinHall4, 1.0), (SketchingLaw::IrwinHall4, 0.4), (SketchingLaw::UniformCube, 0.8)] {
        let p = chi_square_p(law, tau);
        assert!(p > 0.01, "{law:?} tau={tau}: p = {p}");
    }
}

#[test]
fn single_sample_at_origin() {
    let m = 37;
    let op = draw_operator(SketchingLaw::UniformCube, &TemplateDistribution::gaussian(0.4).unwrap(), 2, 1.0, m, 1).unwrap();
    let sv = sketch_dataset(&Samples::from_rows(&[vec![0.0, 0.0]]).unwrap(), &op).unwrap();
    for z in &sv.z {
        assert!((z.re - 1.0 / (m as f64).sqrt()).abs() < 1e-15 && z.im == 0.0);
    }
}

#[test]
fn symmetric_dataset_has_real_sketch() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let half: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]).collect();
    let rows: Vec<Vec<f64>> = half.iter().cloned().chain(half.iter().map(|r| r.iter().map(|v| -v).collect())).collect();
    let op = draw_operator(SketchingLaw::IrwinHall4, &TemplateDistribution::point_mass(), 2, 0.5, 64, 3).unwrap();
    let sv = sketch_dataset(&Samples::from_rows(&rows).unwrap(), &op).unwrap();
    let scale = sv.z.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(sv.z.iter().all(|z| z.im.abs() <= 1e-13 * scale.max(1e-3)), "{:?}", sv.z);
}

#[test]
fn sketch_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let rows = mixture_rows(&mut rng, 1000, &[-3.0, 0.0, 4.0], &[0.3, 0.3, 0.4]);
    let op = draw_operator(SketchingLaw::IrwinHall4, &TemplateDistribution::gaussian(1.0).unwrap(), 1, 0.6, 50, 8).unwrap();
    let sv = sketch_dataset(&Samples::from_rows(&rows).unwrap(), &op).unwrap();
    assert_eq!(sv.n, 1000);
    for i in 0..op.m {
        let naive = naive_entry(&op, i, &rows);
        assert!((sv.z[i] - naive).norm() < 1e-13, "{i}: {} vs {naive}", sv.z[i]);
        assert!(sv.z[i].norm() <= op.weights[i] / (op.m as f64).sqrt() * (1.0 + 1e-12));
    }
}

#[test]
fn forward_examples() {
    let m = 20;
    let op = draw_operator(SketchingLaw::UniformCube, &TemplateDistribution::point_mass(), 1, 1.0, m, 5).unwrap();
    assert!(forward(&op, &DiscreteMeasure::from_parts(&[], &[]).unwrap()).unwrap().iter().all(|z| z.norm() == 0.0));
    let delta = DiscreteMeasure::from_parts(&[1.0], &[vec![0.0]]).unwrap();
    for z in forward(&op, &delta).unwrap() {
        assert!((z - Complex64::new(1.0 / (m as f64).sqrt(), 0.0)).norm() < 1e-15);
    }
    // Direct sum with the template factor.
    let op = draw_operator(SketchingLaw::IrwinHall4, &TemplateDistribution::gaussian(0.7).unwrap(), 1, 0.9, m, 5).unwrap();
    let mu = DiscreteMeasure::from_parts(&[0.5, -1.2], &[vec![1.0], vec![-2.5]]).unwrap();
    let f = forward(&op, &mu).unwrap();
    for i in 0..m {
        let w = op.omegas[i][0];
        let tpl = (-0.5 * 0.49 * w * w).exp();
        let direct: Complex64 = mu.atoms.iter().map(|a| Complex64::from_polar(a.w, -w * a.x[0])).sum::<Complex64>() * (op.weights[i] * tpl / (m as f64).sqrt());
        assert!((f[i] - direct).norm() < 1e-14);
    }
}

#[test]
fn sketched_kernel_is_the_feature_gram() {
    let op = draw_operator(SketchingLaw::IrwinHall4, &TemplateDistribution::cauchy(0.3).unwrap(), 2, 0.8, 40, 2).unwrap();
    let (s, t) = ([0.4, -1.0], [2.0, 0.3]);
    let (fs, ft) = (op.atom_features(&s), op.atom_features(&t));
    let inner: Complex64 = fs.iter().zip(&ft).map(|(a, b)| a * b.conj()).sum();
    let k = sketched_kernel_complex(&op, &s, &t);
    assert!((k - inner).norm() < 1e-14);
    assert!((sketched_kernel(&op, &s, &s) - op.atom_norm_sq()).abs() < 1e-14);
    assert!(op.atom_norm_sq() >= 0.0);
}

#[test]
fn sketched_kernel_converges_at_monte_carlo_rate() {
    let tau = 1.0;
    let population = model_kernel_from_template(&TemplateDistribution::point_mass(), tau, 1, None).unwrap();
    let offsets: Vec<f64> = (0..=120).map(|q| -30.0 + 0.5 * q as f64).collect();
    let ms: Vec<usize> = (6..=12).map(|k| 1usize << k).collect();
    let mut gaps = Vec::new();
    for &m in &ms {
        let mut total = 0.0;
        let reps = 12;
        for seed in 0..reps {
            let op = draw_operator(SketchingLaw::UniformCube, &TemplateDistribution::point_mass(), 1, tau, m, 100 + seed).unwrap();
            total += offsets
                .iter()
                .map(|h| (sketched_kernel(&op, &[*h], &[0.0]) - population.profile(&[*h])).abs())
                .fold(0.0f64, f64::max);
        }
        gaps.push(total / reps as f64);
    }
    let slope = common::log_log_slope(&ms.iter().map(|m| *m as f64).collect::<Vec<_>>(), &gaps);
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}, gaps {gaps:?}");
}

#[test]
fn dataset_sketch_is_unbiased_at_rate_one_over_root_n() {
    let centers = [-2.0, 3.0];
    let weights = [0.35, 0.65];
    let mu0 = DiscreteMeasure::from_parts(&weights, &[vec![centers[0]], vec![centers[1]]]).unwrap();
    let op = draw_operator(SketchingLaw::UniformCube, &TemplateDistribution::gaussian(1.0).unwrap(), 1, 0.8, 16, 21).unwrap();
    let target = forward(&op, &mu0).unwrap();
    let ns = [100usize, 1000, 10_000, 100_000, 1_000_000];
    let mut errs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for &n in &ns {
        let reps = 8;
        let mut total = 0.0;
        for _ in 0..reps {
            let rows = mixture_rows(&mut rng, n, &centers, &weights);
            let sv = sketch_dataset(&Samples::from_rows(&rows).unwrap(), &op).unwrap();
            total += sv.z.iter().zip(&target).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        }
        errs.push(total / reps as f64);
    }
    let slope = common::log_log_slope(&ns.iter().map(|n| *n as f64).collect::<Vec<_>>(), &errs);
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}, errors {errs:?}");
}

#[test]
fn operator_draw_is_deterministic() {
    let tpl = TemplateDistribution::gaussian(1.0).unwrap();
    let a = draw_operator(SketchingLaw::IrwinHall4, &tpl, 2, 0.5, 128, 42).unwrap();
    let b = draw_operator(SketchingLaw::IrwinHall4, &tpl, 2, 0.5, 128, 42).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = draw_operator(SketchingLaw::IrwinHall4, &tpl, 2, 0.5, 128, 43).unwrap();
    assert_ne!(a.omegas, c.omegas);
    assert!(draw_operator(SketchingLaw::IrwinHall4, &tpl, 2, 0.5, 0, 42).is_err());
}

#[test]
fn sketch_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let op = draw_operator(SketchingLaw::UniformCube, &TemplateDistribution::gaussian(1.0).unwrap(), 1, 0.5, 32, 1).unwrap();
    let samples = Samples::from_rows(&[vec![0.3], vec![-1.7], vec![2.2]]).unwrap();
    let sv = sketch_dataset(&samples, &op).unwrap();
    let file = SketchFile::new(&op, &sv).unwrap().with_sample_bounds(&samples).unwrap();
    assert_eq!(file.sample_bounds, Some(vec![(-1.7, 2.2)]));
    let path = tmp.path().join("z.json");
    file.write(&path).unwrap();
    let back = SketchFile::read(&path).unwrap();
    assert_eq!(back, file);
    let (op2, sv2) = back.split().unwrap();
    assert_eq!(op2, op);
    assert_eq!(sv2.z, sv.z);
}

#[test]
fn sketch_size_examples() {
    assert_eq!(sketch_size(1, 1, 1.0, 0.5, 1.0).unwrap(), 1);
    for s0 in [2usize, 4, 8, 16, 64] {
        let a = sketch_size(s0, 2, 10.0, 0.1, 50.0).unwrap();
        let b = sketch_size(2 * s0, 2, 10.0, 0.1, 50.0).unwrap();
        assert!(b > 2 * a, "s0={s0}: {a} -> {b}");
    }
    assert!(sketch_size(1, 1, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn sinc4_sketch_constants_follow_the_explicit_expressions() {
    let (d, cl, diam) = (1.0f64, 1.0f64, 20.0f64);
    let r12 = 12f64.sqrt();
    let q = 128.0 / 23.0;
    let n = diam * 32.0 * r12 * cl.sqrt() * d.powf(3.5) + q * (12.0 * r12 * cl * d.sqrt() + cl.sqrt() * 12.0 * d);
    let c1 = (1.0 + 12.0 * d) * cl * (1024.0 * d.powi(6) * (2.0 + (12.0 * d).sqrt()) + q * q * (1.0 + (12.0 * d).sqrt() + 12.0 * d));
    let c2 = cl * (1024.0 * d.powi(6) + 32.0 * d.powi(3) * (1.0 + 12.0 * d).sqrt() + q * q * 144.0 * d * d + q * 12.0 * d * (1.0 + 12.0 * d).sqrt());
    let k = sinc4_sketch_constants(1, 1.0, diam);
    assert!((k.covering - n).abs() < 1e-9 * n);
    assert!((k.c1 - c1).abs() < 1e-9 * c1);
    assert!((k.c2 - c2).abs() < 1e-9 * c2);
    // d=1, C_Λ=1 evaluated by hand: C₁ = 13 (1024 (2 + √12) + (128/23)² (13 + √12)).
    assert!((k.c1 - 13.0 * (1024.0 * (2.0 + r12) + q * q * (13.0 + r12))).abs() < 1e-9 * k.c1);

    // Growth orders in d and linearity in C_Λ.
    let big = |d: usize| sinc4_sketch_constants(d, 1.0, diam);
    assert!(((big(256).c1 / big(128).c1) / 2f64.powf(7.5) - 1.0).abs() < 0.05);
    assert!(((big(256).c2 / big(128).c2) / 2f64.powi(6) - 1.0).abs() < 0.05);
    assert!((sinc4_sketch_constants(2, 3.0, diam).c1 / sinc4_sketch_constants(2, 1.0, diam).c1 - 3.0).abs() < 1e-12);

    let m0 = sinc4_sketch_size(3, 1, diam, 0.1, 1.0, 1.0).unwrap();
    assert_eq!(m0, sketch_size(3, 1, diam, 0.1, 2.0 * c1.max(c2)).unwrap());
}

#[test]
fn noise_level_examples() {
    let k = ConcentrationConstants::default();
    let far = noise_level_bound(0.5, usize::MAX / 2, 1, 1.0, 1, SketchingLaw::UniformCube, k).unwrap();
    assert!((far.limit_of_formula - 3.091).abs() < 2e-3, "{}", far.limit_of_formula);
    assert!((far.c_alpha_m - far.limit_of_formula).abs() < 1e-6);
    assert!(far.limit_mismatch);

    let base = noise_level_bound(0.2, 256, 100, 0.8, 1, SketchingLaw::UniformCube, k).unwrap();
    for factor in [4u64, 100, 10_000] {
        let more = noise_level_bound(0.2, 256, 100 * factor, 0.8, 1, SketchingLaw::UniformCube, k).unwrap();
        assert!((more.bound * (factor as f64).sqrt() - base.bound).abs() < 1e-12 * base.bound);
    }
    // Direct evaluation of the formula.
    let tau: f64 = 0.8;
    let direct = 2.0 * ((1.0 / tau + (1.0 / tau) * (2.0f64 / 0.2).ln() / (2.0 * 16.0)) * (1.0 + (2.0f64 / 0.2).ln())).sqrt();
    assert!((base.c_alpha_m - direct).abs() < 1e-12 * direct);
}

#[test]
fn tail_levels_examples_and_monte_carlo() {
    let r = 12f64.sqrt();
    assert_eq!(tail_bound_levels(1, 1.0).unwrap(), [1.0, r, 12.0, 12.0 * r]);
    assert_eq!(tail_bound_levels(3, 1.0).unwrap(), tail_bound_levels(3, SketchingLaw::IrwinHall4.c_lambda(3)).unwrap());
    assert!(tail_bound_levels(1, f64::INFINITY).is_err());

    // ‖ψ_ω^{(j)}‖ in the Fisher-Rao metric is sqrt(f/Λ)(ω) · ‖ω‖_{g⁻¹}^j. The truncated-power
    // oracle for f cancels badly where f is tiny, so it only checks the uniform law.
    for (law, d, tau) in [(SketchingLaw::IrwinHall4, 1usize, 0.7), (SketchingLaw::UniformCube, 2, 1.3)] {
        let op = draw_operator(law, &TemplateDistribution::point_mass(), d, tau, 100_000, 31).unwrap();
        let levels = tail_bound_levels(d, law.c_lambda(d)).unwrap();
        for (w, scale) in op.omegas.iter().zip(op.pivot_scales()) {
            if law == SketchingLaw::UniformCube {
                let f: f64 = w.iter().map(|v| 2.0 * tau * common::irwin_hall4_by_truncated_powers(2.0 * tau * v + 2.0)).product();
                assert!((scale * scale - f / law.density(w, tau)).abs() < 1e-12);
            }
            let dual = 12f64.sqrt() * tau * w.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (j, level) in levels.iter().enumerate() {
                assert!(scale * dual.powi(j as i32) <= level * (1.0 + 1e-12), "{law:?} j={j}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_is_linear(wa in prop::collection::vec(-3.0..3.0f64, 1..5), wb in prop::collection::vec(-3.0..3.0f64, 1..5), a in -2.0..2.0f64, b in -2.0..2.0f64, seed in 0u64..100) {
        let op = draw_operator(SketchingLaw::IrwinHall4, &TemplateDistribution::gaussian(1.0).unwrap(), 1, 0.5, 24, seed).unwrap();
        let mu = DiscreteMeasure::from_parts(&wa, &(0..wa.len()).map(|k| vec![k as f64 * 1.7]).collect::<Vec<_>>()).unwrap();
        let nu = DiscreteMeasure::from_parts(&wb, &(0..wb.len()).map(|k| vec![-(k as f64) * 0.9]).collect::<Vec<_>>()).unwrap();
        let combo = mu.scaled(a).plus(&nu.scaled(b));
        let lhs = forward(&op, &combo).unwrap();
        let (fm, fn_) = (forward(&op, &mu).unwrap(), forward(&op, &nu).unwrap());
        for i in 0..op.m {
            prop_assert!((lhs[i] - (fm[i] * a + fn_[i] * b)).norm() < 1e-12);
        }
    }

    #[test]
    fn sketched_kernel_is_conjugate_symmetric(s in prop::collection::vec(-10.0..10.0f64, 2), t in prop::collection::vec(-10.0..10.0f64, 2), seed in 0u64..50) {
        let op = draw_operator(SketchingLaw::UniformCube, &TemplateDistribution::cauchy(0.5).unwrap(), 2, 0.9, 32, seed).unwrap();
        let st = sketched_kernel_complex(&op, &s, &t);
        let ts = sketched_kernel_complex(&op, &t, &s);
        prop_assert!((st - ts.conj()).norm() < 1e-14);
    }

    #[test]
    fn merge_law_is_exact(na in 1usize..40, nb in 1usize..40, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = |n: usize| (0..n).map(|_| vec![rng.random_range(-8.0..8.0)]).collect::<Vec<_>>();
        let (ra, rb) = (rows(na), rows(nb));
        let op = draw_operator(SketchingLaw::IrwinHall4, &TemplateDistribution::point_mass(), 1, 0.6, 16, seed).unwrap();
        let (sa, sb) = (Samples::from_rows(&ra).unwrap(), Samples::from_rows(&rb).unwrap());
        let whole = sketch_dataset(&sa.concat(&sb).unwrap(), &op).unwrap();

        let mut acc = SketchAccumulator::new(op.m);
        acc.absorb(&op, &sa).unwrap();
        let mut other = SketchAccumulator::new(op.m);
        other.absorb(&op, &sb).unwrap();
        acc.merge(&other).unwrap();
        let merged = acc.finish(&op, op.seed, String::new()).unwrap();
        prop_assert_eq!(&merged.z, &whole.z);

        // Sample-count weighted average of the two sketches, up to rounding.
        let (za, zb) = (sketch_dataset(&sa, &op).unwrap().z, sketch_dataset(&sb, &op).unwrap().z);
        for i in 0..op.m {
            let avg = (za[i] * na as f64 + zb[i] * nb as f64) / (na + nb) as f64;
            prop_assert!((avg - whole.z[i]).norm() < 1e-14);
        }
    }
}
