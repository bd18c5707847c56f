use approx::assert_relative_eq;
use ndarray::Array2;
use proptest::prelude::*;

use wlab::bounds::{regime_classifier, theorem1_bounds, RegimeCase};
use wlab::chaos::{
    contraction_norm_sq_row_independent, finite_d_inner_product, quadruple_sum, quadruple_sum_brute_force,
    ContractionCase,
};
use wlab::distances::{empirical_wasserstein2, energy_distance, half_vectorize_values, SampleCloud};
use wlab::ensembles::build_wishart;
use wlab::kernels::kernel_sums;
use wlab::linalg::{min_eigenvalue, toeplitz_dense};
use wlab::sampler::sample_row_independent;
use wlab::{Kernel, KernelF32};

fn cloud(m: usize, dim: usize) -> impl Strategy<Value = SampleCloud> {
    prop::collection::vec(-5.0f64..5.0, m * dim)
        .prop_map(move |v| SampleCloud::new(Array2::from_shape_vec((m, dim), v).unwrap(), "prop").unwrap())
}

fn triple() -> impl Strategy<Value = (SampleCloud, SampleCloud, SampleCloud)> {
    (1usize..=32, 1usize..=4).prop_flat_map(|(m, dim)| (cloud(m, dim), cloud(m, dim), cloud(m, dim)))
}

fn symmetric(n: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| {
        let a = Array2::from_shape_vec((n, n), v).unwrap();
        &a + &a.t()
    })
}

fn kernel_choice() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        Just(Kernel::delta()),
        (0.05f64..0.95).prop_map(|h| Kernel::fgn(h).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wasserstein_is_a_metric((a, b, c) in triple()) {
        let ab = empirical_wasserstein2(&a, &b).unwrap();
        let ba = empirical_wasserstein2(&b, &a).unwrap();
        let bc = empirical_wasserstein2(&b, &c).unwrap();
        let ac = empirical_wasserstein2(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert_eq!(empirical_wasserstein2(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn estimators_ignore_point_order((a, b, _) in triple(), shift in 0usize..32) {
        let m = a.len();
        let mut perm: Vec<usize> = (0..m).collect();
        perm.rotate_left(shift % m);
        perm.reverse();
        let shuffled = SampleCloud::new(a.points.select(ndarray::Axis(0), &perm), "perm").unwrap();
        let w = empirical_wasserstein2(&a, &b).unwrap();
        let w_perm = empirical_wasserstein2(&shuffled, &b).unwrap();
        prop_assert!((w - w_perm).abs() <= 1e-9 * (1.0 + w));
        if m >= 2 {
            let e = energy_distance(&a, &b).unwrap();
            let e_perm = energy_distance(&shuffled, &b).unwrap();
            prop_assert!((e - e_perm).abs() <= 1e-9 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn wishart_is_symmetric(s in kernel_choice(), n in 1usize..5, d in 1usize..40, seed in any::<u64>()) {
        let x = sample_row_independent(&s, n, d, seed).unwrap();
        let w = build_wishart(&x);
        prop_assert!(w.is_symmetric());
    }

    #[test]
    fn weighted_sum_is_the_double_sum(s in kernel_choice(), d in 1usize..=32) {
        let double: f64 = (0..d)
            .flat_map(|k| (0..d).map(move |l| (k, l)))
            .map(|(k, l)| s.eval(k as i64 - l as i64).powi(2))
            .sum::<f64>() / d as f64;
        let sums = kernel_sums(&s, d);
        prop_assert!((sums.sum_weighted_sq - double).abs() <= 1e-12 * double);
    }

    #[test]
    fn fgn_toeplitz_is_psd(h in 0.01f64..0.99, d in 1usize..=64) {
        let s = Kernel::fgn(h).unwrap();
        let m = toeplitz_dense(&s.lags(d));
        prop_assert!(min_eigenvalue(&m) >= -1e-10);
    }

    #[test]
    fn fast_contraction_matches_literal(
        s in prop_oneof![Just(Kernel::delta()), Just(Kernel::fgn(0.3).unwrap()), Just(Kernel::fgn(0.7).unwrap())],
        d in 1usize..=8,
    ) {
        let fast = quadruple_sum(&s, d);
        let slow = quadruple_sum_brute_force(&s, d);
        prop_assert!((fast - slow).abs() <= 1e-12 * slow.abs());
    }

    #[test]
    fn contraction_inequality(s in kernel_choice(), d in 1usize..300) {
        for case in [ContractionCase::Diagonal, ContractionCase::OffDiagonal] {
            let r = contraction_norm_sq_row_independent(&s, d, case).unwrap();
            prop_assert!(r.norm_sq >= 0.0);
            prop_assert!(r.ratio <= 1.0 + 1e-9, "{:?} d={} ratio {}", case, d, r.ratio);
        }
    }

    #[test]
    fn cl1_decreases_in_d(n in 1usize..20, d in 1usize..100_000) {
        let delta = Kernel::delta();
        let a = theorem1_bounds(&delta, n, d).unwrap().bound_cl1;
        let b = theorem1_bounds(&delta, n, 2 * d).unwrap().bound_cl1;
        prop_assert!(a >= 0.0 && b < a);
    }

    #[test]
    fn inner_product_symmetry(h in 0.76f64..0.99, d in 1usize..12, d2 in 1usize..12) {
        let a = finite_d_inner_product(h, d, d2, true).unwrap();
        let b = finite_d_inner_product(h, d2, d, true).unwrap();
        let off = finite_d_inner_product(h, d, d2, false).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert!((a - 2.0 * off).abs() <= 1e-15 * a);
    }

    #[test]
    fn f32_kernel_tracks_f64(h in 0.05f64..0.95, k in -5000i64..5000) {
        let a = Kernel::fgn(h).unwrap().eval(k);
        let b = KernelF32::fgn(h as f32).unwrap().eval(k) as f64;
        // the direct form cancels O(1) terms, so f32 only keeps ~1e-6 absolute accuracy
        prop_assert!((a - b).abs() <= 1e-4 * a.abs() + 2e-6, "{} vs {}", a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn half_vector_norm_bridge((a, b) in (1usize..6).prop_flat_map(|n| (symmetric(n), symmetric(n)))) {
        let hs = (&a - &b).mapv(|v| v * v).sum().sqrt();
        let half = (half_vectorize_values(&a) - half_vectorize_values(&b)).mapv(|v| v * v).sum().sqrt();
        prop_assert!(hs <= 2f64.sqrt() * half + 1e-12);
    }
}

#[test]
fn regime_is_total_and_ordered() {
    let mut last = RegimeCase::I;
    let order = |c: RegimeCase| c as u8;
    for i in 1..1000 {
        let h = i as f64 / 1000.0;
        let r = regime_classifier(h, 5, 10_000).unwrap();
        assert_eq!(r, regime_classifier(h, 5, 10_000).unwrap());
        assert!(order(r.case) >= order(last));
        last = r.case;
    }
    assert_eq!(regime_classifier(0.5, 1, 10).unwrap().case, RegimeCase::II);
    assert_eq!(regime_classifier(0.625, 1, 10).unwrap().case, RegimeCase::IV);
    assert_eq!(regime_classifier(0.75, 1, 10).unwrap().case, RegimeCase::VI);
}

#[test]
fn regime_phi_is_continuous_in_the_power_cases() {
    // below and above 5/8 the phi exponents meet at d^{-1}
    let below = regime_classifier(0.625 - 1e-9, 2, 1 << 20).unwrap().phi;
    let above = regime_classifier(0.625 + 1e-9, 2, 1 << 20).unwrap().phi;
    assert_relative_eq!(below, above, max_relative = 1e-6);
}
