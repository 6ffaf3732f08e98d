use nalgebra::DMatrix;
use offgrid::geometry::{
    classify_regions, fisher_rao_distance, min_separation, model_membership, region_statistics, RegionLabel,
};
use offgrid::kernels::GaussianKernel;
use offgrid::{DiscreteMeasure, MetricTensor, TiKernel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn euclid(d: usize) -> MetricTensor {
    MetricTensor::scaled_identity(d, 1.0).unwrap()
}

fn random_metric(rng: &mut ChaCha8Rng, d: usize) -> MetricTensor {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    MetricTensor::new(&a * a.transpose() + DMatrix::identity(d, d) * 0.1).unwrap()
}

#[test]
fn gaussian_metric_by_finite_differences() {
    let k = GaussianKernel::isotropic(2, 1.0).unwrap();
    let h = 1e-4;
    let mut hess = DMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let at = |si: f64, sj: f64| {
                let mut x = vec![0.0; 2];
                x[i] += si * h;
                x[j] += sj * h;
                k.profile(&x)
            };
            hess[(i, j)] = -(at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
        }
    }
    let g = MetricTensor::new(hess).unwrap();
    let dist = fisher_rao_distance(&g, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
    assert!((dist - 1.0).abs() < 1e-6, "{dist}");
}

#[test]
fn sinc4_distance_and_separation() {
    let g = MetricTensor::scaled_identity(3, 1.0 / 12.0).unwrap();
    let t = [2.0 * 3f64.sqrt(), 0.0, 0.0];
    assert!((fisher_rao_distance(&g, &[0.0; 3], &t).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(fisher_rao_distance(&g, &t, &t).unwrap(), 0.0);

    let g1 = MetricTensor::scaled_identity(1, 1.0 / 12.0).unwrap();
    let mu = DiscreteMeasure::from_parts(&[1.0, 1.0], &[vec![0.0], vec![2.0 * 3f64.sqrt()]]).unwrap();
    assert!((min_separation(&mu, &g1).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn equally_spaced_atoms_separation() {
    let g = MetricTensor::scaled_identity(1, 0.3).unwrap();
    let h = 2.5;
    let mu = DiscreteMeasure::from_parts(&[1.0, -1.0, 0.5], &[vec![0.0], vec![h], vec![2.0 * h]]).unwrap();
    assert!((min_separation(&mu, &g).unwrap() - h * 0.3f64.sqrt()).abs() < 1e-14);
}

#[test]
fn separation_matches_pairwise_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_metric(&mut rng, 2);
    let pos: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
    let mu = DiscreteMeasure::from_parts(&[1.0; 5], &pos).unwrap();
    let mut best = f64::INFINITY;
    for a in 0..5 {
        for b in 0..5 {
            if a != b {
                let dx: Vec<f64> = (0..2).map(|i| pos[a][i] - pos[b][i]).collect();
                let q: f64 = (0..2).map(|i| (0..2).map(|j| dx[i] * g.matrix()[(i, j)] * dx[j]).sum::<f64>()).sum();
                best = best.min(q.sqrt());
            }
        }
    }
    assert!((min_separation(&mu, &g).unwrap() - best).abs() < 1e-12);
}

#[test]
fn membership_examples() {
    let g = euclid(1);
    let spaced = |s: f64| DiscreteMeasure::from_parts(&[1.0; 3], &[vec![0.0], vec![s], vec![2.0 * s]]).unwrap();
    assert!(model_membership(&spaced(5.0), 3, 4.0, &g));
    assert!(!model_membership(&spaced(3.0), 3, 4.0, &g));
    let single = DiscreteMeasure::from_parts(&[2.0], &[vec![1.0]]).unwrap();
    assert!(model_membership(&single, 1, 10.0, &g));
}

#[test]
fn labels_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = random_metric(&mut rng, 2);
    let spikes = vec![vec![-1.0, 0.0], vec![1.0, 0.5]];
    let r = 0.9;
    let queries: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
    let lab = classify_regions(&spikes, r, &g, &queries).unwrap();
    for (q, l) in queries.iter().zip(&lab.labels) {
        let d: Vec<f64> = spikes.iter().map(|s| g.dist(q, s)).collect();
        let expected = if d[0] <= r && (d[1] > r || d[0] <= d[1]) {
            RegionLabel::Near(0)
        } else if d[1] <= r {
            RegionLabel::Near(1)
        } else {
            RegionLabel::Far
        };
        assert_eq!(*l, expected);
    }
    assert_eq!(classify_regions(&spikes, 0.1, &g, &[spikes[1].clone()]).unwrap().labels, vec![RegionLabel::Near(1)]);
    let far = vec![50.0, 50.0];
    assert_eq!(classify_regions(&spikes, r, &g, &[far]).unwrap().labels, vec![RegionLabel::Far]);
}

#[test]
fn region_statistics_examples() {
    let g = euclid(1);
    let mu0 = DiscreteMeasure::from_parts(&[0.4, -0.6], &[vec![0.0], vec![10.0]]).unwrap();
    let (spikes, amps) = (mu0.positions(), mu0.weights());
    let s = region_statistics(&mu0, &spikes, &amps, 1.0, &g).unwrap();
    assert_eq!(s.far_mass, 0.0);
    assert!(s.near_errors.iter().all(|e| *e == 0.0));
    let extra = mu0.plus(&DiscreteMeasure::from_parts(&[0.3], &[vec![5.0]]).unwrap());
    assert!((region_statistics(&extra, &spikes, &amps, 1.0, &g).unwrap().far_mass - 0.3).abs() < 1e-15);
}

#[test]
fn region_statistics_match_direct_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = euclid(1);
    let spikes = vec![vec![0.0], vec![4.0]];
    let amps = vec![1.0, -0.5];
    let mu = DiscreteMeasure::from_parts(
        &(0..10).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
        &(0..10).map(|_| vec![rng.random_range(-2.0..6.0)]).collect::<Vec<_>>(),
    )
    .unwrap();
    let r = 1.2;
    let s = region_statistics(&mu, &spikes, &amps, r, &g).unwrap();
    let mut far = 0.0;
    let mut near = [0.0; 2];
    for a in &mu.atoms {
        if (a.x[0] - 0.0).abs() <= r {
            near[0] += a.w;
        } else if (a.x[0] - 4.0).abs() <= r {
            near[1] += a.w;
        } else {
            far += a.w.abs();
        }
    }
    assert!((s.far_mass - far).abs() < 1e-14);
    for k in 0..2 {
        assert!((s.near_errors[k] - (near[k] - amps[k]).abs()).abs() < 1e-14);
    }
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fisher_rao_is_a_metric(seed in 0u64..1000, a in point(3), b in point(3), c in point(3)) {
        let g = random_metric(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let dab = fisher_rao_distance(&g, &a, &b).unwrap();
        let dba = fisher_rao_distance(&g, &b, &a).unwrap();
        let dac = fisher_rao_distance(&g, &a, &c).unwrap();
        let dcb = fisher_rao_distance(&g, &c, &b).unwrap();
        prop_assert!(dab >= 0.0);
        prop_assert!((dab - dba).abs() <= 1e-12 * (1.0 + dab));
        prop_assert_eq!(fisher_rao_distance(&g, &a, &a).unwrap(), 0.0);
        prop_assert!(a == b || dab > 0.0);
        prop_assert!(dab <= dac + dcb + 1e-9);
    }

    #[test]
    fn labels_partition_queries(qs in prop::collection::vec(point(2), 1..40), r in 0.1..5.0f64) {
        let spikes = vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-4.0, 2.0]];
        let g = euclid(2);
        let lab = classify_regions(&spikes, r, &g, &qs).unwrap();
        prop_assert_eq!(lab.labels.len(), qs.len());
        for (q, l) in qs.iter().zip(&lab.labels) {
            match l {
                RegionLabel::Near(k) => prop_assert!(g.dist(q, &spikes[*k]) <= r),
                RegionLabel::Far => prop_assert!(spikes.iter().all(|s| g.dist(q, s) > r)),
            }
        }
    }

    #[test]
    fn exact_measure_has_zero_statistics(pos in prop::collection::vec(point(2), 2..6), ws in prop::collection::vec(0.1..2.0f64, 6), frac in 0.01..0.99f64) {
        let g = euclid(2);
        let mu0 = DiscreteMeasure::from_parts(&ws[..pos.len()], &pos).unwrap();
        let sep = min_separation(&mu0, &g).unwrap();
        prop_assume!(sep > 1e-6);
        let s = region_statistics(&mu0, &mu0.positions(), &mu0.weights(), frac * sep / 2.0, &g).unwrap();
        prop_assert_eq!(s.far_mass, 0.0);
        prop_assert!(s.near_errors.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn membership_is_monotone(pos in prop::collection::vec(point(1), 1..6), s0 in 1usize..8, delta in 0.0..5.0f64, shrink in 0.0..1.0f64, grow in 0usize..3) {
        let g = euclid(1);
        let mu = DiscreteMeasure::from_parts(&vec![1.0; pos.len()], &pos).unwrap();
        if model_membership(&mu, s0, delta, &g) {
            prop_assert!(model_membership(&mu, s0 + grow, delta * shrink, &g));
        }
    }

    #[test]
    fn tv_norm_is_sum_of_absolute_weights(ws in prop::collection::vec(-5.0..5.0f64, 0..8)) {
        let pos: Vec<Vec<f64>> = (0..ws.len()).map(|k| vec![k as f64]).collect();
        let mu = DiscreteMeasure::from_parts(&ws, &pos).unwrap();
        let direct: f64 = ws.iter().map(|w| w.abs()).sum();
        prop_assert!((mu.tv_norm() - direct).abs() <= 1e-12);
    }
}
