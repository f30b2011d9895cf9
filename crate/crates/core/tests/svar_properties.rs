// SPDX-License-Identifier: MIT
//! Property tests of the process model: population autocovariances, trek
//! sums, parent decompositions and sample covariances.

mod common;

use common::{ar1, confounded_ar3_params, random_instance, U, Y};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svarid::graph::{KindFilter, SeriesId, Vertex, VertexSet};
use svarid::svar::{
    exact_autocov, parent_decomposition_residual, sample_cov_table, simulate, spectral_margin, trek_sum_truncated, CovarianceProvider,
    SvarParams,
};

/// `max |(I − A⁽⁰⁾)Γ(h) − Σ_{k≥1} A⁽ᵏ⁾ Γ(h−k)|` over `h ∈ 1..=h_max`.
fn yule_walker_residual(p: &SvarParams<f64>, h_max: usize) -> f64 {
    let table = exact_autocov(p, h_max).unwrap();
    assert_eq!(table.series, p.graph().series());
    let a = p.coeffs();
    let d = p.graph().d();
    let lhs_op = DMatrix::<f64>::identity(d, d) - &a[0];
    let mut worst: f64 = 0.0;
    for h in 1..=h_max as i64 {
        let mut r = &lhs_op * table.at_lag(h).unwrap();
        for (k, ak) in a.iter().enumerate().skip(1) {
            r -= ak * table.at_lag(h - k as i64).unwrap();
        }
        worst = worst.max(r.abs().max());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn population_autocovariances_satisfy_yule_walker(seed in any::<u64>()) {
        let p = random_instance(seed, 0.9);
        let scale = exact_autocov(&p, 0).unwrap().gamma[0].abs().max().max(1.0);
        let res = yule_walker_residual(&p, 3 * p.graph().order() as usize + 2);
        prop_assert!(res < 1e-10 * scale, "residual {res} (scale {scale})");
    }

    #[test]
    fn covariances_are_shift_invariant(seed in any::<u64>(), dt in -6i64..6, s in -20i64..20, k1 in 0usize..3, k2 in 0usize..3) {
        let p = random_instance(seed, 0.9);
        let table = exact_autocov(&p, 12).unwrap();
        let series = p.graph().series();
        let (a, b) = (series[k1 % series.len()].at(0), series[k2 % series.len()].at(dt));
        let c = table.cov(a, b).unwrap();
        prop_assert!((c - table.cov(a.shifted(s), b.shifted(s)).unwrap()).abs() < 1e-12 * c.abs().max(1.0));
        prop_assert!((c - table.cov(b, a).unwrap()).abs() < 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn parent_decomposition_vanishes_for_non_descendants(seed in any::<u64>(), k1 in 0usize..3, k2 in 0usize..3, dt in -6i64..=0, superset in any::<bool>()) {
        let p = random_instance(seed, 0.9);
        let g = p.graph();
        let series = g.series();
        let b = series[k2 % series.len()].at(0);
        let a = series[k1 % series.len()].at(dt);
        prop_assume!(!g.is_descendant(b, a));
        let mut extra = VertexSet::new();
        if superset {
            // Vertices that are not parents of b enter with coefficient zero.
            for s in &series {
                for lag in 1..=g.order() + 1 {
                    let v = s.at(-lag);
                    if !g.parents(b, KindFilter::All).contains(&v) {
                        extra.insert(v);
                    }
                }
            }
        }
        let table = exact_autocov(&p, 2 * g.order() as usize + 8).unwrap();
        let res = parent_decomposition_residual(&p, a, b, &table, &extra).unwrap();
        let scale = table.gamma[0].abs().max().max(1.0);
        prop_assert!(res < 1e-10 * scale, "residual {res}");
    }

    #[test]
    fn scaling_noise_scales_covariances(seed in any::<u64>(), c in 0.1f64..10.0) {
        let p = random_instance(seed, 0.9);
        let a = exact_autocov(&p, 5).unwrap();
        let b = exact_autocov(&p.scale_noise(c), 5).unwrap();
        for (ga, gb) in a.gamma.iter().zip(&b.gamma) {
            let diff = (ga * c - gb).abs().max();
            prop_assert!(diff < 1e-10 * gb.abs().max().max(1.0));
        }
    }

    #[test]
    fn scalar_trek_tail_is_geometric(a in 0.05f64..0.95, var in 0.1f64..5.0, depth in 0i64..25) {
        let p = ar1(a, var);
        let exact = var / (1.0 - a * a);
        let gap = exact - trek_sum_truncated(&p, Y.at(0), Y.at(0), depth).unwrap();
        let bound = var * a.powi(2 * (depth as i32 + 1)) / (1.0 - a * a);
        prop_assert!((gap - bound).abs() <= 1e-12 * exact, "gap {gap} bound {bound}");
        let next = exact - trek_sum_truncated(&p, Y.at(0), Y.at(0), depth + 1).unwrap();
        prop_assert!(next <= gap + 1e-15, "enumerated mass must not decrease");
    }
}

#[test]
fn deep_trek_sums_match_population_covariances() {
    let p = confounded_ar3_params(0.6, 0.8, 0.4);
    let table = exact_autocov(&p, 10).unwrap();
    for (a, b) in [(Y.at(0), Y.at(0)), (Y.at(0), Y.at(-3)), (U.at(-1), Y.at(0)), (U.at(0), U.at(-2)), (Y.at(-1), U.at(0))] {
        let t = trek_sum_truncated(&p, a, b, 80).unwrap();
        assert!((t - table.cov(a, b).unwrap()).abs() < 1e-10, "{a} {b}");
    }
}

#[test]
fn stability_margin_reference_values() {
    assert_eq!(spectral_margin(&ar1(0.5, 1.0)).unwrap(), 0.5);
    let p = confounded_ar3_params(0.6, 0.8, 0.4);
    // Companion eigenvalues: 0.6 from U and the cube roots of 0.4 from Y.
    assert!((spectral_margin(&p).unwrap() - 0.4f64.cbrt()).abs() < 1e-12);
}

#[test]
fn sample_covariances_converge_at_root_t_rate() {
    // Mean absolute error of the lag-0 and lag-1 sample autocovariances of an
    // AR(1) over 12 seeds at T = 10³ and T = 10⁵: the ratio should be close
    // to √100 = 10.
    let p = ar1(0.5, 1.0);
    let truth = exact_autocov(&p, 1).unwrap();
    let err_at = |t: usize| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
        let mut total = 0.0;
        for _ in 0..12 {
            let data = simulate(&p, t, 200, rng.random()).unwrap();
            let s = sample_cov_table(&data, 1, true).unwrap();
            total += (s.gamma[0][(0, 0)] - truth.gamma[0][(0, 0)]).abs() + (s.gamma[1][(0, 0)] - truth.gamma[1][(0, 0)]).abs();
        }
        total / 12.0
    };
    let ratio = err_at(1_000) / err_at(100_000);
    assert!((3.0..30.0).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn single_and_double_precision_agree() {
    let p64 = confounded_ar3_params(0.6, 0.8, 0.4);
    let p32 = SvarParams::<f32>::from_json(&p64.to_json()).unwrap();
    let t64 = exact_autocov(&p64, 6).unwrap();
    let t32 = exact_autocov(&p32, 6).unwrap();
    for (a, b) in t64.gamma.iter().zip(&t32.gamma) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - *y as f64).abs() < 1e-4 * x.abs().max(1.0));
        }
    }
}

#[test]
fn latent_rows_can_be_dropped_from_data() {
    let p = confounded_ar3_params(0.6, 0.8, 0.4);
    let data = simulate(&p, 100, 10, 1).unwrap();
    let obs = data.select(&[SeriesId::Y]).unwrap();
    assert_eq!(obs.series, vec![Y]);
    assert_eq!(obs.len(), 100);
    let _: Vertex = Y.at(0);
}
