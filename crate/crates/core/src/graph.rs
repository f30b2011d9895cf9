// SPDX-License-Identifier: MIT
//! The full time graph of an SVAR process, represented by its finite lag structure.
//!
//! The graph has one vertex per (series, time) pair and is infinite; it is
//! never materialised. Every edge `S^source_{t-h} → S^target_t` repeats for
//! all `t`, so the graph is fully described by the set of lags declared per
//! ordered series pair. All queries below work inside explicit, finite time
//! windows derived from their arguments.
//!
//! Series are ordered latent-first (`U1..U{d_U}`) followed by the observed
//! series (`O1..O{d_O}`); `Y` is an alias for `O1`, the target series.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Identifier of one component series: latent or observed, with a 0-based index
/// inside its kind. The derived order (all latent before all observed) matches
/// the component order of the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeriesId {
    /// Unobserved component `U{k+1}`.
    Latent(usize),
    /// Observed component `O{k+1}`.
    Observed(usize),
}

impl SeriesId {
    /// The target series `Y = O1`.
    pub const Y: SeriesId = SeriesId::Observed(0);

    pub fn is_latent(self) -> bool {
        matches!(self, SeriesId::Latent(_))
    }

    pub fn is_observed(self) -> bool {
        matches!(self, SeriesId::Observed(_))
    }

    /// Vertex of this series at `time`.
    pub fn at(self, time: i64) -> Vertex {
        Vertex { series: self, time }
    }
}

impl fmt::Display for SeriesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesId::Latent(k) => write!(f, "U{}", k + 1),
            SeriesId::Observed(k) => write!(f, "O{}", k + 1),
        }
    }
}

impl FromStr for SeriesId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "Y" {
            return Ok(SeriesId::Y);
        }
        let (kind, digits) = s.split_at(s.len().min(1));
        let k: usize = digits.parse().map_err(|_| Error::Format(format!("bad series name '{s}'")))?;
        if k == 0 {
            return Err(Error::Format(format!("series indices start at 1: '{s}'")));
        }
        match kind {
            "U" => Ok(SeriesId::Latent(k - 1)),
            "O" => Ok(SeriesId::Observed(k - 1)),
            _ => Err(Error::Format(format!("bad series name '{s}'"))),
        }
    }
}

impl Serialize for SeriesId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SeriesId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A vertex `S^series_time` of the full time graph. Times are relative to a
/// symbolic reference `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub series: SeriesId,
    pub time: i64,
}

impl Vertex {
    pub fn new(series: SeriesId, time: i64) -> Self {
        Vertex { series, time }
    }

    /// The same vertex moved by `s` time steps.
    pub fn shifted(self, s: i64) -> Self {
        Vertex { series: self.series, time: self.time + s }
    }
}

impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.series).cmp(&(other.time, other.series))
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.time {
            0 => write!(f, "{}[t]", self.series),
            t if t > 0 => write!(f, "{}[t+{}]", self.series, t),
            t => write!(f, "{}[t{}]", self.series, t),
        }
    }
}

/// Finite set of vertices, ordered by (time, series).
pub type VertexSet = BTreeSet<Vertex>;

/// Smallest time index in a set (`None` for the empty set).
pub fn t_inf(set: &VertexSet) -> Option<i64> {
    set.iter().next().map(|v| v.time)
}

/// Largest time index in a set (`None` for the empty set).
pub fn t_sup(set: &VertexSet) -> Option<i64> {
    set.iter().next_back().map(|v| v.time)
}

/// Shift every vertex of a set by `s` time steps.
pub fn shift_set(set: &VertexSet, s: i64) -> VertexSet {
    set.iter().map(|v| v.shifted(s)).collect()
}

/// Which parents to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindFilter {
    All,
    Latent,
    Observed,
}

impl KindFilter {
    fn admits(self, s: SeriesId) -> bool {
        match self {
            KindFilter::All => true,
            KindFilter::Latent => s.is_latent(),
            KindFilter::Observed => s.is_observed(),
        }
    }
}

/// How [`LagStructure::valid_tau`] picks its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    /// `τ = t_ref − t_inf(forb) + 1`: sound because edges never point backwards in time.
    #[default]
    Conservative,
    /// Smallest τ certified by a forward reachability search from the forbidden set.
    Tight,
}

/// One declared lag set in serialized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub target: SeriesId,
    pub source: SeriesId,
    pub lags: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct LagStructureFile {
    #[serde(rename = "d_U")]
    d_u: usize,
    #[serde(rename = "d_O")]
    d_o: usize,
    p: i64,
    edges: Vec<EdgeSpec>,
}

/// The time-shift-invariant lag specification of a full time graph.
///
/// Invariants (checked on construction): every lag lies in `0..=p` and some
/// pair attains `p`; no lag-0 self edges; the lag-0 edges form a DAG; no edge
/// points from an observed to a latent series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagStructure {
    d_u: usize,
    d_o: usize,
    p: i64,
    lags: BTreeMap<(SeriesId, SeriesId), Vec<i64>>,
    /// incoming[target] = (source, lag) pairs, sorted.
    incoming: Vec<Vec<(SeriesId, i64)>>,
    /// outgoing[source] = (target, lag) pairs, sorted.
    outgoing: Vec<Vec<(SeriesId, i64)>>,
    /// Series in a topological order of the lag-0 edges.
    topo: Vec<SeriesId>,
    window_override: Option<i64>,
}

impl Serialize for LagStructure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LagStructureFile { d_u: self.d_u, d_o: self.d_o, p: self.p, edges: self.edge_specs() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LagStructure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = LagStructureFile::deserialize(d)?;
        let g =
            LagStructure::new(f.d_u, f.d_o, f.edges.into_iter().map(|e| (e.target, e.source, e.lags))).map_err(serde::de::Error::custom)?;
        if g.p != f.p {
            return Err(serde::de::Error::custom(format!("declared order p = {} but the largest lag is {}", f.p, g.p)));
        }
        Ok(g)
    }
}

impl LagStructure {
    /// Build and validate a lag structure from `(target, source, lags)` triples.
    /// The order `p` is the largest declared lag. Duplicate triples are merged.
    pub fn new<I>(d_u: usize, d_o: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SeriesId, SeriesId, Vec<i64>)>,
    {
        let d = d_u + d_o;
        let mut lags: BTreeMap<(SeriesId, SeriesId), Vec<i64>> = BTreeMap::new();
        for (target, source, ls) in edges {
            for s in [target, source] {
                let ok = match s {
                    SeriesId::Latent(k) => k < d_u,
                    SeriesId::Observed(k) => k < d_o,
                };
                if !ok {
                    return Err(Error::InvalidGraph(format!("series {s} does not exist")));
                }
            }
            if target.is_latent() && source.is_observed() {
                return Err(Error::InvalidGraph(format!("edge {source} -> {target} points from an observed to a latent series")));
            }
            for &h in &ls {
                if h < 0 {
                    return Err(Error::InvalidGraph(format!("negative lag {h} on {source} -> {target}")));
                }
                if h == 0 && target == source {
                    return Err(Error::InvalidGraph(format!("contemporaneous self edge on {target}")));
                }
            }
            if ls.is_empty() {
                continue;
            }
            let entry = lags.entry((target, source)).or_default();
            entry.extend(ls);
            entry.sort_unstable();
            entry.dedup();
        }
        let p = lags.values().flat_map(|v| v.iter().copied()).max().unwrap_or(0);

        let index = |s: SeriesId| match s {
            SeriesId::Latent(k) => k,
            SeriesId::Observed(k) => d_u + k,
        };
        let mut incoming = vec![Vec::new(); d];
        let mut outgoing = vec![Vec::new(); d];
        for (&(target, source), ls) in &lags {
            for &h in ls {
                incoming[index(target)].push((source, h));
                outgoing[index(source)].push((target, h));
            }
        }
        for v in incoming.iter_mut().chain(outgoing.iter_mut()) {
            v.sort_unstable();
        }

        // Kahn's algorithm on the lag-0 edges; ties broken by series order.
        let all: Vec<SeriesId> = (0..d_u).map(SeriesId::Latent).chain((0..d_o).map(SeriesId::Observed)).collect();
        let mut indeg = vec![0usize; d];
        for s in &all {
            indeg[index(*s)] = incoming[index(*s)].iter().filter(|(_, h)| *h == 0).count();
        }
        let mut ready: BTreeSet<SeriesId> = all.iter().copied().filter(|s| indeg[index(*s)] == 0).collect();
        let mut topo = Vec::with_capacity(d);
        while let Some(s) = ready.pop_first() {
            topo.push(s);
            for &(t, h) in &outgoing[index(s)] {
                if h == 0 {
                    indeg[index(t)] -= 1;
                    if indeg[index(t)] == 0 {
                        ready.insert(t);
                    }
                }
            }
        }
        if topo.len() != d {
            return Err(Error::InvalidGraph("contemporaneous (lag-0) edges contain a directed cycle".into()));
        }

        Ok(LagStructure { d_u, d_o, p, lags, incoming, outgoing, topo, window_override: None })
    }

    /// Parse the JSON interchange format.
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Serialize to the JSON interchange format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lag structure serializes")
    }

    /// Override the maximal search window used by bounded ancestor/descendant searches.
    pub fn with_search_window(mut self, window: i64) -> Self {
        self.window_override = Some(window.max(1));
        self
    }

    /// Maximal number of time steps a bounded search may explore beyond its
    /// reference times; defaults to `10·(p+1)·d`.
    pub fn search_window(&self) -> i64 {
        self.window_override.unwrap_or(10 * (self.p + 1) * self.d() as i64)
    }

    pub fn d(&self) -> usize {
        self.d_u + self.d_o
    }

    pub fn d_u(&self) -> usize {
        self.d_u
    }

    pub fn d_o(&self) -> usize {
        self.d_o
    }

    /// Order `p` of the process (largest declared lag).
    pub fn order(&self) -> i64 {
        self.p
    }

    /// Position of a series in the state vector (latent first).
    pub fn index(&self, s: SeriesId) -> usize {
        match s {
            SeriesId::Latent(k) => k,
            SeriesId::Observed(k) => self.d_u + k,
        }
    }

    /// Series at a state-vector position.
    pub fn series_at(&self, idx: usize) -> SeriesId {
        if idx < self.d_u {
            SeriesId::Latent(idx)
        } else {
            SeriesId::Observed(idx - self.d_u)
        }
    }

    /// All series in state-vector order.
    pub fn series(&self) -> Vec<SeriesId> {
        (0..self.d()).map(|i| self.series_at(i)).collect()
    }

    /// Whether a series exists in this graph.
    pub fn contains_series(&self, s: SeriesId) -> bool {
        match s {
            SeriesId::Latent(k) => k < self.d_u,
            SeriesId::Observed(k) => k < self.d_o,
        }
    }

    /// Lags `h` with an edge `source_{t−h} → target_t` (sorted, possibly empty).
    pub fn lags(&self, target: SeriesId, source: SeriesId) -> &[i64] {
        self.lags.get(&(target, source)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Sorted self-lags of a series.
    pub fn self_lags(&self, s: SeriesId) -> &[i64] {
        self.lags(s, s)
    }

    /// Whether the edge `source_{t−h} → target_t` is declared.
    pub fn has_edge(&self, target: SeriesId, source: SeriesId, lag: i64) -> bool {
        self.lags(target, source).binary_search(&lag).is_ok()
    }

    /// `(source, lag)` pairs of all edges into `target`.
    pub fn incoming(&self, target: SeriesId) -> &[(SeriesId, i64)] {
        &self.incoming[self.index(target)]
    }

    /// `(target, lag)` pairs of all edges out of `source`.
    pub fn outgoing(&self, source: SeriesId) -> &[(SeriesId, i64)] {
        &self.outgoing[self.index(source)]
    }

    /// Series in a topological order of the contemporaneous edges.
    pub fn topological_order(&self) -> &[SeriesId] {
        &self.topo
    }

    /// The declared lag sets in serialized form.
    pub fn edge_specs(&self) -> Vec<EdgeSpec> {
        self.lags.iter().map(|(&(target, source), ls)| EdgeSpec { target, source, lags: ls.clone() }).collect()
    }

    /// Total number of declared edges (summed over lags).
    pub fn edge_count(&self) -> usize {
        self.lags.values().map(Vec::len).sum()
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if self.contains_series(v.series) {
            Ok(())
        } else {
            Err(Error::Precondition(format!("vertex {v} refers to a series outside the graph")))
        }
    }

    /// Parents of `v`, restricted by kind.
    pub fn parents(&self, v: Vertex, filter: KindFilter) -> VertexSet {
        self.incoming(v.series).iter().filter(|(s, _)| filter.admits(*s)).map(|&(s, h)| s.at(v.time - h)).collect()
    }

    /// Union of the parents of every vertex in `set`.
    pub fn parents_of_set(&self, set: &VertexSet, filter: KindFilter) -> VertexSet {
        set.iter().flat_map(|&v| self.parents(v, filter)).collect()
    }

    /// Parents of the vertices in `set` along one particular edge type
    /// `source_{t−lag} → target_t` (only members of `set` in series `target` contribute).
    pub fn parents_along(&self, set: &VertexSet, target: SeriesId, source: SeriesId, lag: i64) -> VertexSet {
        set.iter().filter(|v| v.series == target).map(|v| source.at(v.time - lag)).collect()
    }

    /// Children of `v`.
    pub fn children(&self, v: Vertex) -> Vec<Vertex> {
        self.outgoing(v.series).iter().map(|&(s, h)| s.at(v.time + h)).collect()
    }

    /// Whether `t1` and `t2` lie in the same residue class of `series` with
    /// respect to its `lag_index`-th self-lag (0-based, ascending order).
    pub fn same_residue_class(&self, series: SeriesId, lag_index: usize, t1: i64, t2: i64) -> Result<bool> {
        let ls = self.self_lags(series);
        if ls.is_empty() {
            return Err(Error::NoResidueClasses(series.to_string()));
        }
        let l = *ls
            .get(lag_index)
            .ok_or_else(|| Error::Precondition(format!("series {series} has {} self-lags, index {lag_index} requested", ls.len())))?;
        Ok((t1 - t2).rem_euclid(l) == 0)
    }

    /// True iff `b` is a descendant of `a` (reflexive).
    pub fn is_descendant(&self, a: Vertex, b: Vertex) -> bool {
        self.is_descendant_of_any(&VertexSet::from([a]), b)
    }

    /// True iff `b` is a descendant of some member of `set` (reflexive).
    ///
    /// Searches backwards from `b`; vertices earlier than `t_inf(set)` cannot
    /// lead to `set` and are pruned, so the search is finite.
    pub fn is_descendant_of_any(&self, set: &VertexSet, b: Vertex) -> bool {
        let Some(lo) = t_inf(set) else { return false };
        if b.time < lo {
            return false;
        }
        let mut seen = BTreeSet::from([b]);
        let mut queue = VecDeque::from([b]);
        while let Some(v) = queue.pop_front() {
            if set.contains(&v) {
                return true;
            }
            for &(s, h) in self.incoming(v.series) {
                let u = s.at(v.time - h);
                if u.time >= lo && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        false
    }

    /// All ancestors (reflexive) of `start` of the given kind with time `≥ floor`.
    /// With [`KindFilter::Latent`] only latent edges are traversed.
    fn ancestors_above(&self, start: &VertexSet, floor: i64, filter: KindFilter) -> VertexSet {
        let mut seen: VertexSet = start.iter().copied().filter(|v| v.time >= floor).collect();
        let mut queue: VecDeque<Vertex> = seen.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &(s, h) in self.incoming(v.series) {
                if !filter.admits(s) {
                    continue;
                }
                let u = s.at(v.time - h);
                if u.time >= floor && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Whether every directed path from a latent vertex earlier than
    /// `t_inf(b_u)` into the latent vertex `q` is d-blocked by `b_u`.
    ///
    /// Runs a backward search over latent parents that never expands members
    /// of `b_u`; the answer is `false` as soon as a visited vertex (including
    /// `q` itself) lies before `t_inf(b_u)`. For an empty `b_u` there is no
    /// vertex before `t_inf(∅) = −∞` and the condition holds vacuously.
    /// Membership `q ∈ b_u` is the caller's concern.
    pub fn latent_ancestry_blocked(&self, q: Vertex, b_u: &VertexSet) -> Result<bool> {
        self.check_vertex(q)?;
        if !q.series.is_latent() {
            return Err(Error::Precondition(format!("{q} is not latent")));
        }
        if b_u.iter().any(|v| !v.series.is_latent()) {
            return Err(Error::Precondition("basis set must be latent".into()));
        }
        let Some(lo) = t_inf(b_u) else { return Ok(true) };
        let mut seen = BTreeSet::from([q]);
        let mut queue = VecDeque::from([q]);
        while let Some(v) = queue.pop_front() {
            if v.time < lo {
                return Ok(false);
            }
            if b_u.contains(&v) {
                continue;
            }
            for &(s, h) in self.incoming(v.series) {
                if s.is_latent() {
                    let u = s.at(v.time - h);
                    if seen.insert(u) {
                        queue.push_back(u);
                    }
                }
            }
        }
        Ok(true)
    }

    /// The blocking checks on a basis (`target-latents-blocked` and
    /// `future-latents-blocked`): every latent
    /// parent of `y` and of `f_obs` is in `b_u` or has its latent ancestry blocked.
    /// Returns the first offending latent parent, if any.
    pub fn first_unblocked_latent_parent(&self, b_u: &VertexSet, f_obs: &VertexSet, y: Vertex) -> Result<Option<Vertex>> {
        let mut top = f_obs.clone();
        top.insert(y);
        for q in self.parents_of_set(&top, KindFilter::Latent) {
            if !b_u.contains(&q) && !self.latent_ancestry_blocked(q, b_u)? {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }

    /// The forbidden-ancestor set
    /// `F ∪ {y} ∪ (an^lat(F ∪ {y}) \ an^lat(B_U))`.
    ///
    /// The latent ancestors are collected by a backward search bounded by the
    /// search window below `min(t_inf(B_U), t_inf(F ∪ {y}))`. If a latent
    /// ancestor outside `an(B_U)` is found near the floor of that window the
    /// set is (or may be) infinite and an error is returned instead of a
    /// truncated answer.
    pub fn forb_an(&self, b_u: &VertexSet, f_obs: &VertexSet, y: Vertex) -> Result<VertexSet> {
        self.check_vertex(y)?;
        if !y.series.is_observed() || f_obs.iter().any(|v| !v.series.is_observed()) {
            return Err(Error::Precondition("target and future set must be observed".into()));
        }
        if let Some(q) = self.first_unblocked_latent_parent(b_u, f_obs, y)? {
            return Err(Error::UnboundedAncestry(format!("latent parent {q} is neither in the basis set nor blocked by it")));
        }
        let mut top = f_obs.clone();
        top.insert(y);
        let reference = match t_inf(b_u) {
            Some(b) => b.min(t_inf(&top).unwrap()),
            None => t_inf(&top).unwrap(),
        };
        let window = self.search_window();
        let floor = reference - window;
        let anc = self.ancestors_above(&top, floor, KindFilter::All);
        let anc_b = self.ancestors_above(b_u, floor, KindFilter::Latent);
        let mut forb = top;
        let guard = floor + 2 * (self.p + 1);
        for v in anc.into_iter().filter(|v| v.series.is_latent() && !anc_b.contains(v)) {
            if v.time < guard {
                return Err(Error::WindowExceeded {
                    window,
                    context: format!("latent ancestor {v} outside an(B_U) reaches the search floor"),
                });
            }
            forb.insert(v);
        }
        Ok(forb)
    }

    /// A τ such that every vertex of `series` at time `≤ t_ref − τ` is not a
    /// descendant of `forb`.
    pub fn valid_tau(&self, forb: &VertexSet, series: SeriesId, t_ref: i64, mode: TauMode) -> i64 {
        let window = self.search_window();
        let Some(lo) = t_inf(forb) else {
            return -window;
        };
        match mode {
            TauMode::Conservative => t_ref - lo + 1,
            TauMode::Tight => {
                // Forward search in time order: the first vertex of `series`
                // popped is the earliest descendant.
                let cap = t_sup(forb).unwrap().max(t_ref) + window;
                let mut frontier: BTreeSet<Vertex> = forb.clone();
                let mut seen = forb.clone();
                let mut earliest = cap + 1;
                while let Some(v) = frontier.pop_first() {
                    if v.series == series {
                        earliest = v.time;
                        break;
                    }
                    for c in self.children(v) {
                        if c.time <= cap && seen.insert(c) {
                            frontier.insert(c);
                        }
                    }
                }
                t_ref - earliest + 1
            }
        }
    }
}
