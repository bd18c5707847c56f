//! Statistical checks with modest replicate counts. Every tolerance is a
//! multiple of the Monte Carlo standard error.

use std::io::Cursor;

use ndarray::Array2;

use wlab::distances::{
    coordinate_cumulants, energy_distance, energy_distance_bootstrap_se, half_vectorize, SampleCloud,
};
use wlab::dump::{read_matrix, write_matrix};
use wlab::ensembles::{
    build_p_tensor, build_shifted_wishart, build_wishart, matched_covariance, GaussianTarget, GaussianTargetSampler,
};
use wlab::kernels::kernel_sums;
use wlab::montecarlo::{mean_se, product_moment, run_replicates};
use wlab::rng::seeded;
use wlab::sampler::{sample_row_independent, SeparableSampler};
use wlab::{Kernel, KernelF32, Scalar};

const SEED: u64 = 7_311;

#[test]
fn wishart_off_diagonal_has_unit_variance() {
    let s = Kernel::delta();
    let sampler = SeparableSampler::row_independent(&s, 3, 24).unwrap();
    let w12 = run_replicates(20_000, SEED, None, |_, rng| {
        build_wishart(&sampler.sample_with_rng(rng, 0)).values[[0, 1]]
    })
    .unwrap();
    let sq: Vec<f64> = w12.iter().map(|v| v * v).collect();
    let m = mean_se(&sq);
    assert!(m.within(1.0, 4.0), "{m:?}");
    assert!(mean_se(&w12).within(0.0, 4.0));
}

#[test]
fn wishart_fourth_cumulant_is_six_over_d() {
    // W_12 is d^{-1/2} times a sum of d i.i.d. products X Y with kappa_4 = 6
    let d = 32;
    let sampler = SeparableSampler::row_independent(&Kernel::delta(), 2, d).unwrap();
    let w12 = run_replicates(20_000, SEED + 1, None, |_, rng| {
        build_wishart(&sampler.sample_with_rng(rng, 0)).values[[0, 1]]
    })
    .unwrap();
    let c = coordinate_cumulants(&w12).unwrap();
    let target = 6.0 / d as f64;
    assert!((c.estimate.k4 - target).abs() <= 4.0 * c.stderr.k4, "{c:?}");
    assert!(c.estimate.k3.abs() <= 4.0 * c.stderr.k3);
}

#[test]
fn gaussian_fourth_cumulant_vanishes() {
    let mut rng = seeded(SEED + 2);
    let x: Vec<f64> = (0..100_000).map(|_| f64::standard_normal(&mut rng)).collect();
    let c = coordinate_cumulants(&x).unwrap();
    assert!(c.estimate.k4.abs() <= 4.0 * c.stderr.k4, "{c:?}");
    assert!((c.estimate.k2 - 1.0).abs() <= 4.0 * c.stderr.k2);
}

#[test]
fn shifted_wishart_matches_target_covariance() {
    let (n, d) = (3, 16);
    let r = Kernel::fgn(0.7).unwrap();
    let s = Kernel::fgn(0.6).unwrap();
    let sampler = SeparableSampler::new(&r, &s, n, d).unwrap();
    let halves = run_replicates(20_000, SEED + 3, None, |_, rng| {
        half_vectorize(&build_shifted_wishart(&sampler.sample_with_rng(rng, 0), &r)).to_vec()
    })
    .unwrap();
    let target = matched_covariance(&r, kernel_sums(&s, d).sum_weighted_sq, n);
    let dim = n * (n + 1) / 2;
    let coord = |a: usize| halves.iter().map(|h| h[a]).collect::<Vec<f64>>();
    for a in 0..dim {
        for b in a..dim {
            let m = product_moment(&coord(a), &coord(b));
            assert!(m.within(target[(a, b)], 4.0), "({a},{b}) {m:?} vs {}", target[(a, b)]);
        }
    }
}

#[test]
fn goe_target_variances() {
    let s = Kernel::fgn(0.3).unwrap();
    let l2 = s.l2_norm_sq();
    let sampler = GaussianTargetSampler::new(GaussianTarget::GoeZ, &s, None, 3, 10).unwrap();
    let draws = run_replicates(20_000, SEED + 4, None, |_, rng| sampler.sample_values(rng)).unwrap();
    let sq = |i: usize, j: usize| draws.iter().map(|z| z[[i, j]].powi(2)).collect::<Vec<f64>>();
    assert!(mean_se(&sq(1, 1)).within(2.0 * l2, 4.0));
    assert!(mean_se(&sq(0, 2)).within(l2, 4.0));
    assert!(GaussianTargetSampler::new(GaussianTarget::GoeZ, &Kernel::fgn(0.8).unwrap(), None, 3, 10).is_err());
}

#[test]
fn same_law_energy_distance_is_within_noise() {
    let mut rng = seeded(SEED + 5);
    let mut cloud = || {
        let pts = Array2::from_shape_fn((10_000, 1), |_| f64::standard_normal(&mut rng));
        SampleCloud::new(pts, "N(0,1)").unwrap()
    };
    let (a, b) = (cloud(), cloud());
    let e = energy_distance(&a, &b).unwrap();
    let se = energy_distance_bootstrap_se(&a, &b, 20, SEED).unwrap();
    assert!(e.abs() <= 4.0 * se, "{e} vs se {se}");
}

#[test]
fn leading_minor_is_the_smaller_ensemble() {
    let s = Kernel::fgn(0.4).unwrap();
    let big = build_wishart(&sample_row_independent(&s, 5, 20, SEED).unwrap());
    let small = build_wishart(&sample_row_independent(&s, 5, 20, SEED).unwrap()).leading_minor();
    assert_eq!(small.n, 4);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(small.values[[i, j]], big.values[[i, j]]);
        }
    }
}

#[test]
fn tensor_components_have_unit_variance() {
    let sampler = SeparableSampler::row_independent(&Kernel::delta(), 4, 12).unwrap();
    let first = run_replicates(10_000, SEED + 6, None, |i, rng| {
        build_p_tensor(&sampler.sample_with_rng(rng, i as u64), 3)
            .unwrap()
            .values[0]
    })
    .unwrap();
    let sq: Vec<f64> = first.iter().map(|v| v * v).collect();
    assert!(mean_se(&sq).within(1.0, 4.0));
    let t = build_p_tensor(&sampler.sample(1), 3).unwrap();
    assert_eq!(t.len(), 4);
    assert_eq!(t.get(&[0, 1, 3]), Some(t.values[1]));
}

#[test]
fn dump_round_trip() {
    let x = sample_row_independent(&Kernel::fgn(0.6).unwrap(), 3, 9, SEED).unwrap();
    let mut buf = Vec::new();
    write_matrix(&mut buf, &x.entries, x.seed).unwrap();
    let back = read_matrix(Cursor::new(buf)).unwrap();
    assert_eq!(back.seed, SEED);
    assert_eq!(back.values, x.entries);
}

#[test]
fn f32_sampler_has_the_right_lag_one_covariance() {
    let s = KernelF32::fgn(0.7).unwrap();
    let sampler = SeparableSampler::row_independent(&s, 1, 32).unwrap();
    let pairs = run_replicates(20_000, SEED + 7, None, |_, rng| {
        let x = sampler.sample_with_rng(rng, 0).entries;
        (x[[0, 10]] as f64, x[[0, 11]] as f64)
    })
    .unwrap();
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let m = product_moment(&a, &b);
    assert!(m.within(s.eval(1) as f64, 4.0), "{m:?}");
}

#[test]
fn replicates_do_not_depend_on_thread_count() {
    let sampler = SeparableSampler::row_independent(&Kernel::fgn(0.3).unwrap(), 2, 16).unwrap();
    let run = |threads| {
        run_replicates(64, SEED, threads, |_, rng| {
            build_wishart(&sampler.sample_with_rng(rng, 0)).values[[0, 1]]
        })
        .unwrap()
    };
    assert_eq!(run(Some(1)), run(Some(3)));
}
