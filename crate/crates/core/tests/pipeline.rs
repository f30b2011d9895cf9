// SPDX-License-Identifier: MIT
//! End-to-end runs through the public API: identify a graph, simulate data,
//! estimate and bootstrap, in both precisions; and reproducibility of the
//! experiment drivers.

mod common;

use common::{confounded_ar3, confounded_ar3_params, Y};
use svarid::estimate::{block_bootstrap, build_system, estimate_from_data, solve_effects, Provenance};
use svarid::experiments::examples::{replicate_example, ExampleName};
use svarid::experiments::random::{convergence_study, draw_accepted_instances, RandomGraphProtocol};
use svarid::experiments::ParamDrawConfig;
use svarid::graph::SeriesId;
use svarid::identify::{default_delta_range, delta_sweep, select_spec, EstimatorSpec, SweepOptions};
use svarid::svar::{exact_autocov, simulate};
use svarid::{EffectEstimateF32, EffectEstimateF64, SeriesDataF32, SeriesDataF64, SvarParamsF32, SvarParamsF64};

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

/// The sweep result at the reference offset `Δ = 4` of the worked example.
fn reference_spec() -> EstimatorSpec {
    let g = confounded_ar3();
    let results = delta_sweep(&g, default_delta_range(&g), Y.at(0), SweepOptions::default()).unwrap();
    results.into_iter().find(|r| r.certificate.delta == Some(4)).unwrap().spec
}

#[test]
fn selected_spec_is_exact_on_population_covariances() {
    let g = confounded_ar3();
    let results = delta_sweep(&g, default_delta_range(&g), Y.at(0), SweepOptions::default()).unwrap();
    let spec = &select_spec(&results).expect("the worked example is identifiable").spec;
    let p = confounded_ar3_params(0.6, 0.8, 0.4);
    let table = exact_autocov(&p, spec.max_lag_span() as usize).unwrap();
    let est = solve_effects(&build_system(&table, spec).unwrap(), Provenance::Exact).unwrap();
    assert!((est.coefficient(Y, 3).unwrap() - 0.4).abs() < 1e-10);
}

#[test]
fn identify_simulate_estimate_in_double_precision() {
    let spec = &reference_spec();
    let p: SvarParamsF64 = confounded_ar3_params(0.6, 0.8, 0.4);
    let data: SeriesDataF64 = simulate(&p, 200_000, 1_000, 42).unwrap();
    // Only observed rows are needed.
    let observed = data.select(&[SeriesId::Y]).unwrap();
    let est: EffectEstimateF64 = estimate_from_data(&observed, spec, true).unwrap();
    let v = est.coefficient(Y, 3).unwrap();
    assert!((v - 0.4).abs() < 0.1, "estimate {v}");
    let boot = block_bootstrap(&observed, spec, 2_000, 40, 1, true).unwrap();
    assert_eq!(boot.failures, 0);
    assert!(boot.quantiles[0].q025 < boot.quantiles[0].q975);
    assert!((boot.quantiles[0].median - v).abs() < 0.1);
}

#[test]
fn single_precision_pipeline_tracks_double_precision() {
    let spec = &reference_spec();
    let p64 = confounded_ar3_params(0.6, 0.8, 0.4);
    let p32: SvarParamsF32 = SvarParamsF32::from_json(&p64.to_json()).unwrap();
    let data32: SeriesDataF32 = simulate(&p32, 100_000, 1_000, 7).unwrap();
    let est32: EffectEstimateF32 = estimate_from_data(&data32, spec, true).unwrap();
    let v32 = est32.coefficient(Y, 3).unwrap();
    assert!((v32 as f64 - 0.4).abs() < 0.1, "f32 estimate {v32}");
    // The same draws widened to f64 give nearly the same estimate.
    let data64 = SeriesDataF64::new(data32.series.clone(), data32.values.map(|x| x as f64)).unwrap();
    let v64 = estimate_from_data(&data64, spec, true).unwrap().coefficient(Y, 3).unwrap();
    assert!((v32 as f64 - v64).abs() < 1e-3, "{v32} vs {v64}");
}

#[test]
fn experiment_drivers_are_reproducible_across_thread_counts() {
    let protocol = RandomGraphProtocol { n_params: 2, ..RandomGraphProtocol::default() };
    let run = |threads| {
        in_pool(threads, || {
            let (inst, stats) = draw_accepted_instances(&protocol, 3, 1_000, 8).unwrap();
            let report = convergence_study(&inst, &[200, 400], 8).unwrap();
            let specs: Vec<String> = inst.iter().map(|i| i.spec.to_string()).collect();
            (stats, specs, report)
        })
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
    assert_eq!(a.2.rows.len(), 3 * 2 * 2);

    let ex = |threads| in_pool(threads, || replicate_example(ExampleName::LaggedCause, &[300, 600], 3, &ParamDrawConfig::default(), 4));
    assert_eq!(ex(1).unwrap(), ex(3).unwrap());
}
