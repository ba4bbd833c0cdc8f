// Exact special cases of the random-projection construction.

mod common;

use common::*;
use proptest::prelude::*;
use rpgp::diag::exp_decay_matrix;
use rpgp::linalg::frobenius_diff;
use rpgp::sketch::{adaptive_rangefinder, nystrom_with_projection, theorem1_montecarlo_width};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenvector_sketch_is_best_rank(n in 10usize..80, m in 1usize..10, theta1 in 0.5f64..200.0, seed in 0u64..1000) {
        let k = se_gram(theta1, &random_points(n, 2, seed));
        prop_assert!(eigen_oracle(&k, m.min(n)) < 1e-8);
    }

    #[test]
    fn selection_rows_give_sor(n in 10usize..80, m in 1usize..8, seed in 0u64..1000) {
        let k = se_gram(30.0, &random_points(n, 1, seed));
        let idx = rand::seq::index::sample(&mut rpgp::rng::seeded(seed), n, m).into_vec();
        prop_assert!(permutation_oracle(&k, &idx) < 1e-8);
    }

    #[test]
    fn full_width_sketch_is_exact(n in 2usize..40, seed in 0u64..1000) {
        // Well-separated points keep K numerically full rank.
        let x = rpgp::kernels::Points::grid(0.0, n as f64, n);
        prop_assert!(full_rank_oracle(&se_gram(1.0, &x), seed) < 1e-8);
    }

    #[test]
    fn woodbury_matches_dense(n in 5usize..200, m in 1usize..25, seed in 0u64..1000) {
        let (apply, logdet) = woodbury_oracle(n, m.min(n), seed);
        prop_assert!(apply < 1e-8, "apply {apply}");
        prop_assert!(logdet < 1e-8, "logdet {logdet}");
    }

    #[test]
    fn generalized_projection_idempotent(n in 20usize..80, m in 2usize..8, seed in 0u64..1000) {
        let k = se_gram(10.0, &random_points(n, 1, seed));
        prop_assert!(projection_oracle(&k, m, seed) < 1e-6);
    }
}

#[test]
fn theorem1_rate_at_least_half() {
    let k = se_gram(1.0, &rpgp::kernels::Points::grid(0.0, 10.0, 100));
    let out = rpgp::sketch::theorem1_montecarlo(&k, 10, 0.5, 200, 1).unwrap();
    assert_eq!(out.sketch_width, 20);
    assert!(out.frobenius_rate >= 0.5, "{}", out.frobenius_rate);
}

#[test]
fn theorem1_rate_grows_with_width() {
    // A harder matrix, where the width-m sketch usually misses.
    let k = se_gram(0.3, &rpgp::kernels::Points::grid(0.0, 10.0, 100));
    let rates: Vec<f64> =
        [10, 12, 20, 40].iter().map(|&r| theorem1_montecarlo_width(&k, 10, 0.1, r, 100, 3).unwrap().frobenius_rate).collect();
    for w in rates.windows(2) {
        assert!(w[1] + 0.05 >= w[0], "{rates:?}");
    }
    assert!(rates[3] > rates[0], "{rates:?}");
}

#[test]
fn range_finder_reaches_target() {
    let k = exp_decay_matrix(120, 0.4, 2);
    for (i, eps) in [0.3, 0.05, 0.005].into_iter().enumerate() {
        let found = adaptive_rangefinder(&k, eps, 10, i as u64).unwrap();
        assert!(!found.exhausted);
        let model = nystrom_with_projection(&k, found.phi).unwrap();
        let err = frobenius_diff(k.as_matrix(), &model.dense());
        assert!(err < eps, "eps {eps}: residual {err}");
    }
}
