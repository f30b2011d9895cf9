// SPDX-License-Identifier: MIT
//! Fixtures shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svarid::experiments::random::{draw_graph, RandomGraphProtocol};
use svarid::experiments::{draw_stable_params, ParamDrawConfig};
use svarid::graph::{LagStructure, SeriesId};
use svarid::svar::SvarParams;

pub const U: SeriesId = SeriesId::Latent(0);
pub const Y: SeriesId = SeriesId::Y;
pub const X: SeriesId = SeriesId::Observed(1);

/// One latent AR(1) confounder `U`, an observed `Y` with self-lag 3 and a
/// lag-1 edge `U → Y`.
pub fn confounded_ar3() -> LagStructure {
    LagStructure::new(1, 1, [(U, U, vec![1]), (Y, Y, vec![3]), (Y, U, vec![1])]).unwrap()
}

/// Parameters on [`confounded_ar3`] (edge order: `U→U`, `U→Y`, `Y→Y`).
pub fn confounded_ar3_params(u: f64, yu: f64, y: f64) -> SvarParams<f64> {
    SvarParams::from_edge_values(confounded_ar3(), &[u, yu, y], DVector::from_element(2, 1.0)).unwrap()
}

/// Scalar AR(1) with coefficient `a` and noise variance `var`.
pub fn ar1(a: f64, var: f64) -> SvarParams<f64> {
    let g = LagStructure::new(0, 1, [(Y, Y, vec![1])]).unwrap();
    SvarParams::from_edge_values(g, &[a], DVector::from_element(1, var)).unwrap()
}

/// A valid lag structure drawn under the standard random protocol, redrawing
/// on contemporaneous cycles; deterministic in `seed`.
pub fn random_graph(seed: u64) -> LagStructure {
    let protocol = RandomGraphProtocol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Ok(g) = draw_graph(&protocol, &mut rng) {
            return g;
        }
    }
}

/// A graph from [`random_graph`] with one stable parameter draw whose
/// spectral margin is at most `margin`.
pub fn random_instance(seed: u64, margin: f64) -> SvarParams<f64> {
    let mut s = seed;
    loop {
        let g = random_graph(s);
        let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0x5eed);
        let cfg = ParamDrawConfig { margin, max_retries: 20_000, ..ParamDrawConfig::default() };
        if let Ok(mut p) = draw_stable_params(&g, 1, &cfg, &mut rng) {
            return p.pop().unwrap();
        }
        s = s.wrapping_add(0x9E37_79B9);
    }
}
