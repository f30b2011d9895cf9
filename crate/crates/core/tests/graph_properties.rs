// SPDX-License-Identifier: MIT
//! Property tests of the full-time-graph queries on random lag structures.

mod common;

use common::{random_graph, U, Y};
use proptest::prelude::*;
use svarid::graph::{KindFilter, SeriesId, TauMode, Vertex, VertexSet};
use svarid::identify::construct_bu_fobs;

fn any_series(g: &svarid::graph::LagStructure, k: usize) -> SeriesId {
    g.series()[k % g.d()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parents_and_children_commute_with_shifts(seed in any::<u64>(), k in 0usize..3, t in -20i64..20, s in -50i64..50) {
        let g = random_graph(seed);
        let v = any_series(&g, k).at(t);
        for filter in [KindFilter::All, KindFilter::Latent, KindFilter::Observed] {
            let shifted: VertexSet = g.parents(v, filter).iter().map(|p| p.shifted(s)).collect();
            prop_assert_eq!(g.parents(v.shifted(s), filter), shifted);
        }
        let mut kids: Vec<Vertex> = g.children(v).into_iter().map(|c| c.shifted(s)).collect();
        let mut kids_s = g.children(v.shifted(s));
        kids.sort();
        kids_s.sort();
        prop_assert_eq!(kids, kids_s);
    }

    #[test]
    fn descendance_commutes_with_shifts(seed in any::<u64>(), k1 in 0usize..3, k2 in 0usize..3, dt in -8i64..8, s in -30i64..30) {
        let g = random_graph(seed);
        let a = any_series(&g, k1).at(0);
        let b = any_series(&g, k2).at(dt);
        prop_assert_eq!(g.is_descendant(a, b), g.is_descendant(a.shifted(s), b.shifted(s)));
        // Descendants never precede their ancestor.
        if dt < 0 {
            prop_assert!(!g.is_descendant(a, b));
        }
    }

    #[test]
    fn residue_classes_partition_every_window(seed in any::<u64>(), k in 0usize..3, start in -40i64..40, probe in -100i64..100) {
        let g = random_graph(seed);
        let series = any_series(&g, k);
        for (idx, &l) in g.self_lags(series).iter().enumerate() {
            let window: Vec<i64> = (start..start + l).collect();
            // The ℓ consecutive times are pairwise inequivalent ...
            for (i, &a) in window.iter().enumerate() {
                prop_assert!(g.same_residue_class(series, idx, a, a).unwrap());
                for &b in &window[i + 1..] {
                    prop_assert!(!g.same_residue_class(series, idx, a, b).unwrap());
                }
            }
            // ... and every time falls into exactly one of their classes.
            let hits = window.iter().filter(|&&a| g.same_residue_class(series, idx, probe, a).unwrap()).count();
            prop_assert_eq!(hits, 1);
            // Symmetry and transitivity on a probe triple.
            let (x, y) = (probe, probe + 3 * l);
            prop_assert_eq!(g.same_residue_class(series, idx, x, y).unwrap(), g.same_residue_class(series, idx, y, x).unwrap());
        }
    }

    #[test]
    fn latent_blocking_is_monotone_in_the_basis(seed in any::<u64>(), t in -6i64..0, extra in proptest::collection::vec(-12i64..2, 0..4)) {
        let g = random_graph(seed);
        let q = U.at(t);
        let base: VertexSet = [U.at(t - 1)].into_iter().collect();
        let mut larger = base.clone();
        larger.extend(extra.iter().map(|&e| U.at(e)));
        if let (Ok(small), Ok(big)) = (g.latent_ancestry_blocked(q, &base), g.latent_ancestry_blocked(q, &larger)) {
            prop_assert!(!small || big, "blocking flipped from true to false when enlarging the basis");
        }
    }

    #[test]
    fn forbidden_ancestors_and_tau_are_sound(seed in any::<u64>(), delta in -6i64..8, tight in any::<bool>()) {
        let g = random_graph(seed);
        let y = Y.at(0);
        let Ok((b_u, f_obs)) = construct_bu_fobs(&g, Y, delta, y) else { return Ok(()); };
        let Ok(forb) = g.forb_an(&b_u, &f_obs, y) else { return Ok(()); };
        for f in f_obs.iter().chain(std::iter::once(&y)) {
            prop_assert!(forb.contains(f));
        }
        for v in &forb {
            prop_assert!(v.series.is_latent() || f_obs.contains(v) || *v == y, "unexpected observed member {v}");
        }
        let mode = if tight { TauMode::Tight } else { TauMode::Conservative };
        for o in (0..g.d_o()).map(SeriesId::Observed) {
            let tau = g.valid_tau(&forb, o, y.time, mode);
            for back in 0..25 {
                let probe = o.at(y.time - tau - back);
                prop_assert!(!g.is_descendant_of_any(&forb, probe), "{probe} descends from ForbAn (tau {tau})");
            }
        }
    }
}

/// The soundness property above skips draws where ForbAn is unbounded; make
/// sure a good share of draws actually exercises it.
#[test]
fn forbidden_ancestor_property_is_not_vacuous() {
    let mut exercised = 0;
    for seed in 0..60u64 {
        let g = random_graph(seed);
        let y = Y.at(0);
        if let Ok((b, f)) = construct_bu_fobs(&g, Y, 1 + (seed % 5) as i64, y) {
            if g.forb_an(&b, &f, y).is_ok() {
                exercised += 1;
            }
        }
    }
    assert!(exercised >= 10, "only {exercised} of 60 draws had a bounded ForbAn");
}
