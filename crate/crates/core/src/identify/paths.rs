// SPDX-License-Identifier: MIT
//! Uniqueness of the basis path system on a finite subgraph.
//!
//! The `unique-path-system` check asks for a vertex-disjoint system of directed paths from
//! `B_U` onto `F^obs`, with latent interiors, whose monomial differs from the
//! monomial of every other such system. All candidate systems live in the
//! finite graph `𝓜`: the latent vertices in the time interval spanned by
//! `B_U ∪ pa^lat(F^obs)`, the edges among them except those joining two
//! members of `B_U`, and the edges from the latent parents of `F^obs` into
//! `F^obs`. Because distinct edge types carry algebraically independent
//! generic coefficients, two monomials coincide iff their multisets of edge
//! types `(lag, target series, source series)` coincide.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{t_inf, t_sup, KindFilter, LagStructure, SeriesId, Vertex, VertexSet};

/// Enumeration guard: more systems than this yields [`Error::Undecided`].
pub const MAX_PATH_SYSTEMS: usize = 1_000_000;

/// Companion guard on the number of search steps (partial paths explored)
/// per allowed system, so that graphs with many dead ends are also reported
/// as undecided.
pub const STEPS_PER_SYSTEM: usize = 50;

/// A system of vertex-disjoint directed paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSystem {
    /// One path per source, listed in the order of the sources.
    pub paths: Vec<Vec<Vertex>>,
    /// Sign of the induced bijection from sorted sources to sorted targets.
    pub sign: i8,
}

impl fmt::Display for PathSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.paths.iter().map(|p| p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("->")).collect();
        write!(f, "[{}]", parts.join(" | "))
    }
}

/// Outcome of the uniqueness check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsilonReport {
    pub unique: bool,
    /// Number of path systems enumerated.
    pub systems: usize,
    /// A system whose monomial occurs exactly once, if any.
    pub witness: Option<PathSystem>,
}

type EdgeType = (i64, SeriesId, SeriesId);

struct FiniteGraph {
    /// Successors of each vertex inside 𝓜.
    succ: BTreeMap<Vertex, Vec<Vertex>>,
    targets: VertexSet,
}

fn build_graph(g: &LagStructure, b_u: &VertexSet, f_obs: &VertexSet) -> FiniteGraph {
    let pa_f = g.parents_of_set(f_obs, KindFilter::Latent);
    let span: VertexSet = b_u.union(&pa_f).copied().collect();
    let mut succ: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    if let (Some(lo), Some(hi)) = (t_inf(&span), t_sup(&span)) {
        for time in lo..=hi {
            for k in 0..g.d_u() {
                let v = SeriesId::Latent(k).at(time);
                succ.entry(v).or_default();
                for &(src, h) in g.incoming(v.series) {
                    let u = src.at(time - h);
                    if src.is_latent() && u.time >= lo && !(b_u.contains(&u) && b_u.contains(&v)) {
                        succ.entry(u).or_default().push(v);
                    }
                }
            }
        }
    }
    for &f in f_obs {
        for q in g.parents(f, KindFilter::Latent) {
            succ.entry(q).or_default().push(f);
        }
    }
    for list in succ.values_mut() {
        list.sort();
        list.dedup();
    }
    FiniteGraph { succ, targets: f_obs.clone() }
}

struct Enumerator<'a> {
    graph: &'a FiniteGraph,
    sources: Vec<Vertex>,
    used: BTreeSet<Vertex>,
    current: Vec<Vec<Vertex>>,
    counts: HashMap<Vec<EdgeType>, (usize, Vec<Vec<Vertex>>)>,
    total: usize,
    steps: usize,
    limit: usize,
}

impl Enumerator<'_> {
    fn run(&mut self, j: usize) -> Result<()> {
        if j == self.sources.len() {
            self.total += 1;
            if self.total > self.limit {
                return Err(Error::Undecided(self.limit));
            }
            let mut mono: Vec<EdgeType> =
                self.current.iter().flat_map(|p| p.windows(2).map(|w| (w[1].time - w[0].time, w[1].series, w[0].series))).collect();
            mono.sort();
            let e = self.counts.entry(mono).or_insert_with(|| (0, self.current.clone()));
            e.0 += 1;
            return Ok(());
        }
        let s = self.sources[j];
        self.current.push(vec![s]);
        self.extend(j, s)?;
        self.current.pop();
        Ok(())
    }

    /// Necessary condition for completing the system: every later source
    /// still has an unused successor.
    fn later_sources_alive(&self, j: usize) -> bool {
        let graph = self.graph;
        self.sources[j + 1..].iter().all(|s| graph.succ.get(s).is_some_and(|n| n.iter().any(|w| !self.used.contains(w))))
    }

    fn extend(&mut self, j: usize, v: Vertex) -> Result<()> {
        let graph = self.graph;
        let next = graph.succ.get(&v).map(Vec::as_slice).unwrap_or(&[]);
        for &w in next {
            if self.used.contains(&w) {
                continue;
            }
            self.steps += 1;
            if self.steps > self.limit.saturating_mul(STEPS_PER_SYSTEM) {
                return Err(Error::Undecided(self.limit));
            }
            self.used.insert(w);
            if !self.later_sources_alive(j) {
                self.used.remove(&w);
                continue;
            }
            self.current[j].push(w);
            if self.graph.targets.contains(&w) {
                self.run(j + 1)?;
            } else {
                self.extend(j, w)?;
            }
            self.current[j].pop();
            self.used.remove(&w);
        }
        Ok(())
    }
}

fn permutation_sign(sources: &[Vertex], paths: &[Vec<Vertex>], targets: &VertexSet) -> i8 {
    let order: Vec<Vertex> = targets.iter().copied().collect();
    let perm: Vec<usize> = paths.iter().map(|p| order.iter().position(|t| t == p.last().unwrap()).unwrap()).collect();
    debug_assert_eq!(perm.len(), sources.len());
    let mut inversions = 0;
    for a in 0..perm.len() {
        for b in a + 1..perm.len() {
            if perm[a] > perm[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Enumerate every vertex-disjoint path system `B_U → F^obs` in `𝓜` and report
/// whether some system has a monomial shared with no other system.
pub fn check_upsilon_uniqueness(g: &LagStructure, b_u: &VertexSet, f_obs: &VertexSet) -> Result<UpsilonReport> {
    check_upsilon_uniqueness_with_limit(g, b_u, f_obs, MAX_PATH_SYSTEMS)
}

/// [`check_upsilon_uniqueness`] with an explicit bound on enumerated systems
/// (the step bound scales with it).
pub fn check_upsilon_uniqueness_with_limit(g: &LagStructure, b_u: &VertexSet, f_obs: &VertexSet, limit: usize) -> Result<UpsilonReport> {
    if b_u.iter().any(|v| !v.series.is_latent()) || f_obs.iter().any(|v| !v.series.is_observed()) {
        return Err(Error::Precondition("basis must be latent and future set observed".into()));
    }
    if b_u.len() != f_obs.len() {
        return Ok(UpsilonReport { unique: false, systems: 0, witness: None });
    }
    if b_u.is_empty() {
        return Ok(UpsilonReport { unique: true, systems: 1, witness: Some(PathSystem { paths: vec![], sign: 1 }) });
    }
    let graph = build_graph(g, b_u, f_obs);
    let sources: Vec<Vertex> = b_u.iter().copied().collect();
    let mut en = Enumerator {
        graph: &graph,
        sources: sources.clone(),
        used: b_u.clone(),
        current: Vec::new(),
        counts: HashMap::new(),
        total: 0,
        steps: 0,
        limit,
    };
    en.run(0)?;
    // Deterministic witness: the lexicographically smallest unique monomial.
    let witness = en
        .counts
        .iter()
        .filter(|(_, (n, _))| *n == 1)
        .min_by(|a, b| a.0.cmp(b.0))
        .map(|(_, (_, paths))| PathSystem { sign: permutation_sign(&sources, paths, f_obs), paths: paths.clone() });
    Ok(UpsilonReport { unique: witness.is_some(), systems: en.total, witness })
}

#[cfg(test)]
mod tests {
    use super::*;

    const U: SeriesId = SeriesId::Latent(0);
    const Y: SeriesId = SeriesId::Y;
    const X: SeriesId = SeriesId::Observed(1);

    fn set(vs: &[Vertex]) -> VertexSet {
        vs.iter().copied().collect()
    }

    #[test]
    fn confounded_ar3_has_a_single_chain() {
        let g = LagStructure::new(1, 1, [(U, U, vec![1]), (Y, Y, vec![3]), (Y, U, vec![1])]).unwrap();
        let rep = check_upsilon_uniqueness(&g, &set(&[U.at(-1)]), &set(&[Y.at(4)])).unwrap();
        assert!(rep.unique);
        assert_eq!(rep.systems, 1);
        let w = rep.witness.unwrap();
        assert_eq!(w.paths[0], vec![U.at(-1), U.at(0), U.at(1), U.at(2), U.at(3), Y.at(4)]);
        assert_eq!(w.sign, 1);
    }

    #[test]
    fn empty_basis_is_trivially_unique() {
        let g = LagStructure::new(1, 1, [(U, U, vec![1]), (Y, U, vec![1])]).unwrap();
        assert!(check_upsilon_uniqueness(&g, &VertexSet::new(), &VertexSet::new()).unwrap().unique);
    }

    #[test]
    fn two_latent_example_has_four_distinct_systems() {
        let u1 = SeriesId::Latent(0);
        let u2 = SeriesId::Latent(1);
        let g = LagStructure::new(
            2,
            2,
            [
                (u1, u1, vec![1]),
                (u2, u2, vec![1]),
                (u2, u1, vec![1]),
                (Y, Y, vec![2]),
                (X, X, vec![2]),
                (Y, X, vec![5]),
                (Y, u2, vec![2, 3]),
                (X, u1, vec![1, 2]),
            ],
        )
        .unwrap();
        let rep = check_upsilon_uniqueness(&g, &set(&[u1.at(-3), u2.at(-3)]), &set(&[Y.at(3), X.at(3)])).unwrap();
        assert_eq!(rep.systems, 4);
        assert!(rep.unique);
    }

    #[test]
    fn unreachable_or_mismatched_targets_are_not_unique() {
        // Without a latent self-lag the earlier source cannot reach any target.
        let g = LagStructure::new(1, 1, [(Y, U, vec![1])]).unwrap();
        let rep = check_upsilon_uniqueness(&g, &set(&[U.at(0), U.at(1)]), &set(&[Y.at(2), Y.at(3)])).unwrap();
        assert_eq!(rep.systems, 0);
        assert!(!rep.unique);
        let rep = check_upsilon_uniqueness(&g, &set(&[U.at(0)]), &set(&[Y.at(1), Y.at(2)])).unwrap();
        assert!(!rep.unique);
    }

    #[test]
    fn guard_trips_on_dense_graphs() {
        // Many parallel latent routes make the enumeration explode.
        let g = LagStructure::new(1, 1, [(U, U, vec![1, 2, 3, 4, 5]), (Y, U, vec![1])]).unwrap();
        let b = set(&[U.at(0)]);
        let f = set(&[Y.at(60)]);
        match check_upsilon_uniqueness_with_limit(&g, &b, &f, 1000) {
            Err(Error::Undecided(n)) => assert_eq!(n, 1000),
            other => panic!("expected undecided, got {other:?}"),
        }
    }
}
