mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

use common::{simplex, soft_from};
use fairclust::fairness::{
    cluster_marginals, fairness_bound_potentials, fairness_error, fairness_penalty,
    fairness_penalty_gradient, kl_divergence,
};
use fairclust::{binarize, DemographicPartition, SoftAssignment, SolverConfig};

const FLOOR: f64 = 1e-10;

/// Soft assignment with strictly positive entries plus a two-group partition
/// where both groups are present.
fn instance(max_n: usize, max_k: usize) -> impl Strategy<Value = (SoftAssignment, DemographicPartition)> {
    (3..=max_n, 2..=max_k).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(0.05f64..1.0, n * k),
            prop::collection::vec(0usize..2, n - 2),
            0.1f64..0.9,
        )
            .prop_map(move |(raw, mut groups, mu)| {
                groups.extend([0, 1]);
                let demo = DemographicPartition::new(groups, 2, vec![mu, 1.0 - mu]).unwrap();
                (soft_from(&raw, k), demo)
            })
    })
}

#[test]
fn pinsker_on_random_pairs() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut checked = 0;
    for k in [2usize, 5, 10] {
        let pair = (
            prop::collection::vec(1e-6f64..1.0, k),
            prop::collection::vec(1e-6f64..1.0, k),
        );
        for _ in 0..334 {
            let (x, y) = pair.new_tree(&mut runner).unwrap().current();
            let (x, y) = (simplex(&x), simplex(&y));
            let kl = kl_divergence(&x, &y, 1e-300).unwrap();
            let sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(kl >= 0.5 * sq - 1e-12, "K={k}: kl {kl} < {}", 0.5 * sq);
            checked += 1;
        }
    }
    assert!(checked >= 1000);
}

fn g2(mu: f64, v: &[f64], s: &[f64]) -> f64 {
    -mu * v.iter().zip(s).map(|(a, b)| a * b).sum::<f64>().ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quadratic_bound_on_convex_part(
        n in 2usize..=20,
        mu in 0.05f64..1.0,
        seed in prop::collection::vec((any::<bool>(), 0.5f64..1.0, 0.5f64..1.0), 20),
    ) {
        let mut v: Vec<f64> = seed[..n].iter().map(|(m, _, _)| f64::from(u8::from(*m))).collect();
        v[0] = 1.0;
        let s0: Vec<f64> = seed[..n].iter().map(|t| t.1).collect();
        let s: Vec<f64> = seed[..n].iter().map(|t| t.2).collect();
        let vs0: f64 = v.iter().zip(&s0).map(|(a, b)| a * b).sum();

        let hessian = DMatrix::from_fn(n, n, |i, j| mu * v[i] * v[j] / (vs0 * vs0));
        let l_true = SymmetricEigen::new(hessian).eigenvalues.max();

        let grad: Vec<f64> = v.iter().map(|vi| -mu * vi / vs0).collect();
        let delta: Vec<f64> = s.iter().zip(&s0).map(|(a, b)| a - b).collect();
        let linear: f64 = grad.iter().zip(&delta).map(|(g, d)| g * d).sum();
        let sq: f64 = delta.iter().map(|d| d * d).sum();
        let upper = g2(mu, &v, &s0) + linear + l_true * sq;
        prop_assert!(g2(mu, &v, &s) <= upper + 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences((soft, demo) in instance(20, 4)) {
        let grad = fairness_penalty_gradient(&soft, &demo, FLOOR).unwrap();
        let h: f64 = 1e-5;
        let k = soft.n_clusters();
        for p in [0, soft.n_points() - 1] {
            for (c1, c2) in [(0, 1), (k - 1, 0)] {
                // Move mass between two clusters of one point, staying on the simplex.
                let step = h.min(soft.get(p, c2) / 2.0);
                let shifted = |sign: f64| {
                    let mut m = soft.probs().clone();
                    m.set(p, c1, m.get(p, c1) + sign * step);
                    m.set(p, c2, m.get(p, c2) - sign * step);
                    fairness_penalty(&SoftAssignment::new(m).unwrap(), &demo, FLOOR).unwrap()
                };
                let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * step);
                let analytic = grad.get(p, c1) - grad.get(p, c2);
                let scale = analytic.abs().max(fd.abs()).max(1e-3);
                prop_assert!((fd - analytic).abs() <= 1e-4 * scale, "fd {fd} vs {analytic}");
            }
        }
    }

    #[test]
    fn marginal_rows_sum_to_one((soft, demo) in instance(30, 6)) {
        let marg = cluster_marginals(&soft, &demo, FLOOR).unwrap();
        for k in 0..marg.n_clusters() {
            prop_assert!((marg.cluster(k).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn error_nonnegative_and_penalty_offset((soft, demo) in instance(30, 6)) {
        let err = fairness_error(&soft, &demo, FLOOR).unwrap();
        prop_assert!(err >= 0.0);
        let pen = fairness_penalty(&soft, &demo, FLOOR).unwrap();
        let entropy: f64 = demo.targets().iter().map(|m| -m * m.ln()).sum();
        let expected = err + soft.n_clusters() as f64 * entropy;
        prop_assert!((pen - expected).abs() <= 1e-9 * pen.abs().max(1.0));
    }

    #[test]
    fn doubling_l_halves_bound((soft, demo) in instance(20, 4)) {
        let at = |l: f64| {
            let cfg = SolverConfig { lipschitz_l: l, ..SolverConfig::default() };
            fairness_bound_potentials(&soft, &demo, &cfg).unwrap().into_matrix()
        };
        let (b2, b4) = (at(2.0), at(4.0));
        for (x, y) in b2.as_slice().iter().zip(b4.as_slice()) {
            prop_assert!((x - 2.0 * y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn error_zero_exactly_when_marginals_match() {
    let demo = DemographicPartition::new(vec![0, 0, 1, 1], 2, vec![0.5, 0.5]).unwrap();
    let fair = binarize(&[0, 1, 0, 1], 2).unwrap();
    assert_eq!(fairness_error(&fair, &demo, FLOOR).unwrap(), 0.0);
    let skewed = binarize(&[0, 0, 0, 1], 2).unwrap();
    assert!(fairness_error(&skewed, &demo, FLOOR).unwrap() > 0.1);
    let mixed = soft_from(&[0.7, 0.3, 0.3, 0.7, 0.7, 0.3, 0.3, 0.7], 2);
    let err = fairness_error(&mixed, &demo, FLOOR).unwrap();
    assert!(err.abs() < 1e-15, "{err}");
}

#[test]
fn single_group_bound_vanishes() {
    let demo = DemographicPartition::new(vec![0; 5], 1, vec![1.0]).unwrap();
    let soft = soft_from(&[0.2, 0.8, 0.5, 0.5, 0.9, 0.1, 0.3, 0.7, 0.6, 0.4], 2);
    let b = fairness_bound_potentials(&soft, &demo, &SolverConfig::default()).unwrap();
    assert!(b.values().as_slice().iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn bound_matches_direct_evaluation_on_six_points() {
    let groups = vec![0, 1, 0, 1, 0, 1];
    let labels = [0, 0, 1, 1, 2, 2];
    let mu = [0.5, 0.5];
    let demo = DemographicPartition::new(groups.clone(), 2, mu.to_vec()).unwrap();
    let soft = binarize(&labels, 3).unwrap();
    let b = fairness_bound_potentials(&soft, &demo, &SolverConfig::default()).unwrap();
    for p in 0..6 {
        for k in 0..3 {
            let size = labels.iter().filter(|&&l| l == k).count() as f64;
            let mut direct = 0.0;
            for (j, m) in mu.iter().enumerate() {
                let vjs = (0..6).filter(|&q| labels[q] == k && groups[q] == j).count() as f64;
                let vjp = f64::from(u8::from(groups[p] == j));
                direct += m / size - m * vjp / vjs;
            }
            assert_relative_eq!(b.values().get(p, k), direct / 2.0, epsilon = 1e-15);
        }
    }
    // Every (cluster, group) cell carries a single value.
    assert_eq!(b.values().get(0, 1), b.values().get(2, 1));
    assert_eq!(b.values().get(1, 2), b.values().get(3, 2));
}
