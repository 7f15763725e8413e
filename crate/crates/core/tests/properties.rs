use gml_core::classify::{knn_class_share, nearest_neighbors};
use gml_core::harness::experiment::stratified_folds;
use gml_core::harness::standardize;
use gml_core::linalg::{edge_weight, gershgorin_left_ends, mahalanobis, scaled_left_ends, DEFAULT_PD_TOL};
use gml_core::lp::solve_box_knapsack;
use gml_core::random::{random_features, random_graph_metric};
use gml_core::{
    alignment_scalars, graph_classify, knn_classify, smallest_eigenpair_dense, smallest_eigenpair_lobpcg,
    solve_diagonal_lp, solve_lp, validate_graph_metric, Constraint, LinearProgram, LpStatus, SymmetricMatrix,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn aligned_left_ends_coincide(seed in any::<u64>(), k in 2usize..=30) {
        let g = random_graph_metric(&mut rng(seed), k).unwrap();
        let s = alignment_scalars(&g).unwrap();
        let left = scaled_left_ends(g.matrix(), &s).unwrap();
        let lo = left.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = left.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(hi - lo < 1e-8 * g.lambda_min().max(1.0));
        prop_assert!((lo - g.lambda_min()).abs() < 1e-8 * g.lambda_min().max(1.0));
    }

    #[test]
    fn first_eigenvector_is_positive(seed in any::<u64>(), k in 2usize..=30) {
        let g = random_graph_metric(&mut rng(seed), k).unwrap();
        let dense = smallest_eigenpair_dense(g.matrix()).unwrap();
        prop_assert!(dense.vector.iter().all(|&x| x > 1e-10));
        prop_assert!(g.eigvec().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn plain_discs_bound_lambda_min(seed in any::<u64>(), k in 2usize..=30) {
        let g = random_graph_metric(&mut rng(seed), k).unwrap();
        let lo = gershgorin_left_ends(g.matrix()).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(lo <= g.lambda_min() + 1e-12);
    }

    #[test]
    fn lobpcg_agrees_with_dense(seed in any::<u64>(), k in 2usize..=40) {
        let g = random_graph_metric(&mut rng(seed), k).unwrap();
        let dense = smallest_eigenpair_dense(g.matrix()).unwrap();
        let it = smallest_eigenpair_lobpcg(g.matrix(), None, 1e-11, 500).unwrap();
        prop_assert!((it.pair.value - dense.value).abs() <= 1e-8);
    }

    #[test]
    fn revalidation_keeps_lambda(seed in any::<u64>(), k in 2usize..=12) {
        let g = random_graph_metric(&mut rng(seed), k).unwrap();
        let again = validate_graph_metric(g.matrix(), DEFAULT_PD_TOL).unwrap();
        prop_assert!((again.lambda_min() - g.lambda_min()).abs() <= 1e-10);
    }

    #[test]
    fn mahalanobis_is_symmetric_and_nonnegative(seed in any::<u64>(), k in 1usize..=10) {
        let mut r = rng(seed);
        let g = random_graph_metric(&mut r, k.max(2)).unwrap();
        let f = random_features(&mut r, 2, g.dim());
        let d01 = mahalanobis(&f[0], &f[1], g.matrix()).unwrap();
        let d10 = mahalanobis(&f[1], &f[0], g.matrix()).unwrap();
        prop_assert!(d01 >= 0.0);
        prop_assert!((d01 - d10).abs() <= 1e-12 * d01.max(1.0));
        prop_assert_eq!(mahalanobis(&f[0], &f[0], g.matrix()).unwrap(), 0.0);
        let w = edge_weight(d01).unwrap();
        prop_assert!(w > 0.0 && w <= 1.0);
    }

    #[test]
    fn knn_ignores_metric_scale(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut r = rng(seed);
        let g = random_graph_metric(&mut r, 3).unwrap();
        let train = random_features(&mut r, 15, 3);
        let labels: Vec<usize> = (0..15).map(|i| i % 3).collect();
        let q = random_features(&mut r, 1, 3).remove(0);
        let scaled = g.matrix().scale(c);
        prop_assert_eq!(
            nearest_neighbors(&train, &q, g.matrix(), 5).unwrap(),
            nearest_neighbors(&train, &q, &scaled, 5).unwrap()
        );
        prop_assert_eq!(
            knn_classify(&train, &labels, &q, g.matrix(), 5).unwrap(),
            knn_classify(&train, &labels, &q, &scaled, 5).unwrap()
        );
    }

    #[test]
    fn identity_knn_is_euclidean(seed in any::<u64>(), k in 1usize..=6) {
        let mut r = rng(seed);
        let train = random_features(&mut r, 12, k);
        let q = random_features(&mut r, 1, k).remove(0);
        let mut order: Vec<usize> = (0..12).collect();
        let d = |i: usize| train[i].iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        order.sort_by(|&a, &b| d(a).total_cmp(&d(b)).then(a.cmp(&b)));
        let id = SymmetricMatrix::identity(k).unwrap();
        prop_assert_eq!(nearest_neighbors(&train, &q, &id, 4).unwrap(), order[..4].to_vec());
        let labels: Vec<usize> = (0..12).map(|i| i % 2).collect();
        let share: f64 = (0..2).map(|c| knn_class_share(&train, &labels, &q, &id, 4, c).unwrap()).sum();
        prop_assert!((share - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graph_scores_obey_maximum_principle(seed in any::<u64>(), n in 4usize..=20) {
        let mut r = rng(seed);
        let g = random_graph_metric(&mut r, 3).unwrap();
        let f = random_features(&mut r, n, 3);
        let known: Vec<(usize, f64)> = (0..n / 2).map(|i| (i, if i % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let scores = graph_classify(&f, &known, g.matrix()).unwrap();
        prop_assert_eq!(scores.len(), n);
        for (i, s) in scores.iter().enumerate() {
            prop_assert!(s.abs() <= 1.0 + 1e-9, "node {} score {}", i, s);
        }
        for &(i, z) in &known {
            prop_assert_eq!(scores[i], z);
        }
    }

    #[test]
    fn diagonal_lp_matches_simplex(
        grad in prop::collection::vec(-5.0f64..5.0, 1..12),
        floor in 0.0f64..0.2,
        slack in 0.0f64..3.0,
    ) {
        let k = grad.len();
        let lower = vec![floor; k];
        let cap = floor * k as f64 + slack;
        let fast = solve_diagonal_lp(&grad, &lower, cap).unwrap();
        let mut lp = LinearProgram::new(grad.clone()).with_bounds(lower.clone(), vec![f64::INFINITY; k]);
        lp.push(Constraint::le(vec![1.0; k], cap));
        let slow = solve_lp(&lp).unwrap();
        prop_assert_eq!(fast.status, LpStatus::Optimal);
        prop_assert_eq!(slow.status, LpStatus::Optimal);
        prop_assert!((fast.objective_value - slow.objective_value).abs() <= 1e-9);
    }

    #[test]
    fn knapsack_matches_simplex(
        items in prop::collection::vec((-3.0f64..3.0, 0.0f64..0.5, 0.0f64..2.0), 1..10),
        budget in 0.0f64..6.0,
    ) {
        let cost: Vec<f64> = items.iter().map(|t| t.0).collect();
        let lower: Vec<f64> = items.iter().map(|t| t.1).collect();
        let upper: Vec<f64> = items.iter().map(|t| t.1 + t.2).collect();
        let n = cost.len();
        let fast = solve_box_knapsack(&cost, &lower, &upper, budget).unwrap();
        let mut lp = LinearProgram::new(cost.clone()).with_bounds(lower.clone(), upper.clone());
        lp.push(Constraint::le(vec![1.0; n], budget));
        let slow = solve_lp(&lp).unwrap();
        prop_assert_eq!(fast.status, slow.status);
        if fast.status == LpStatus::Optimal {
            prop_assert!((fast.objective_value - slow.objective_value).abs() <= 1e-9);
            prop_assert!(lp.max_violation(&fast.point) <= 1e-12);
        }
    }

    #[test]
    fn standardized_train_has_zero_mean(seed in any::<u64>(), n in 2usize..30, k in 1usize..5) {
        let mut r = rng(seed);
        let train: Vec<Vec<f64>> = random_features(&mut r, n, k)
            .into_iter()
            .map(|row| row.into_iter().map(|x| 3.0 * x + 7.0).collect())
            .collect();
        let (scaled, _, scaler) = standardize(&train, &train[..1]).unwrap();
        for j in 0..k {
            let mean = scaled.iter().map(|row| row[j]).sum::<f64>() / n as f64;
            prop_assert!(mean.abs() < 1e-12);
            prop_assert!(scaler.scale[j] > 0.0);
        }
    }

    #[test]
    fn folds_partition_and_stratify(seed in any::<u64>(), counts in prop::collection::vec(2usize..20, 2..5)) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let folds = stratified_folds(&labels, counts.len(), 2, &mut rng(seed));
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for (c, &n) in counts.iter().enumerate() {
            for f in &folds {
                let in_fold = f.iter().filter(|&&i| labels[i] == c).count();
                prop_assert!(in_fold >= n / 2 && in_fold <= n.div_ceil(2));
            }
        }
    }
}
