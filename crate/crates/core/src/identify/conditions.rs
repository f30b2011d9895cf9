// SPDX-License-Identifier: MIT
//! Residue-class conditions on candidate sets `R` and `C`.
//!
//! Write `C¹ = C \ F^obs` and `C² = F^obs`, split `R = R¹ ∪ R²` likewise,
//! and index every set by observed series (`C¹_O`, `R¹_O`, …). The checks,
//! by the name under which they are reported:
//!
//! * `partition-sizes`: `|R¹_O| = |C¹_O|` and `|R²_O| = |C²_O|` per series.
//! * `lag-separation`: some self-lag `ℓ_O` of `O` puts the members of `C¹_O`
//!   in the window `[t−τ_O−(ℓ_O−1), ∞)` into distinct residue classes.
//! * `residue-match`: each of those columns has exactly one row of `R¹_O` of
//!   the same class in `[t−τ_O−(ℓ_O−1), t−τ_O]`.
//! * `early-columns-copied`: members of `C¹_O` at or before `t−τ_O−ℓ_O` are
//!   themselves in `R¹_O`.
//! * `column-order` / `row-order`: `sup C¹_O < inf C²_O` and
//!   `sup R²_O < inf R¹_O`.
//! * `latent-link`: every series with future columns has a latent parent edge.
//! * `latent-classes`: for some choice of those edges and of a self-lag per
//!   latent series, the latent parents `P` of the future columns fall into
//!   distinct residue classes.
//! * `shifted-latent-classes`: the latent parents `Q` of `R²` match the
//!   classes of `P` one to one.
//!
//! The lag `ℓ_O` is existential and shared by the first three lag checks; the
//! latent edges and self-lags are existential and shared by the last two.
//! Whenever a choice is needed the largest passing lag is taken and edge
//! combinations are tried in lexicographic order, so the report is
//! deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Certificate, CheckRecord};
use crate::error::{Error, Result};
use crate::graph::{t_inf, t_sup, LagStructure, SeriesId, Vertex, VertexSet};

/// A split `R = R¹ ∪ R²` of the row set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub r1: VertexSet,
    pub r2: VertexSet,
}

/// The edge `U^k_{t−lag} → O_t` chosen to link an observed series with the latent side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeChoice {
    pub latent: SeriesId,
    pub lag: i64,
}

/// Evaluated conditions plus the existential choices that witness them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub checks: Vec<CheckRecord>,
    /// Chosen self-lag `ℓ_O` per observed series with nonempty `C¹_O`.
    pub obs_lags: BTreeMap<SeriesId, i64>,
    /// Chosen latent edge per observed series with nonempty `C²_O`.
    pub edges: BTreeMap<SeriesId, EdgeChoice>,
    /// Chosen self-lag per latent series with nonempty `P_U`.
    pub latent_lags: BTreeMap<SeriesId, i64>,
    /// The set `P` for the chosen edges.
    pub p_set: VertexSet,
    /// The set `Q` for the chosen edges, when a partition was given.
    pub q_set: Option<VertexSet>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Name of the first failed condition.
    pub fn first_failure(&self) -> Option<&str> {
        self.checks.iter().find(|c| !c.passed).map(|c| c.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn of_series(set: &VertexSet, s: SeriesId) -> VertexSet {
    set.iter().copied().filter(|v| v.series == s).collect()
}

fn distinct_classes<'a>(vs: impl IntoIterator<Item = &'a Vertex>, ell: i64) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    vs.into_iter().all(|v| seen.insert(v.time.rem_euclid(ell)))
}

/// Per-series data for the three observed-lag checks.
struct ObsLagCheck<'a> {
    t: i64,
    tau: i64,
    c1: &'a VertexSet,
    r1: Option<&'a VertexSet>,
}

impl ObsLagCheck<'_> {
    fn upper(&self, ell: i64) -> impl Iterator<Item = &Vertex> {
        let lo = self.t - self.tau - (ell - 1);
        self.c1.iter().filter(move |v| v.time >= lo)
    }

    fn c2(&self, ell: i64) -> bool {
        distinct_classes(self.upper(ell), ell)
    }

    fn c3(&self, ell: i64) -> bool {
        let Some(r1) = self.r1 else { return true };
        let (lo, hi) = (self.t - self.tau - (ell - 1), self.t - self.tau);
        self.upper(ell).all(|c| r1.iter().filter(|r| r.time >= lo && r.time <= hi && (r.time - c.time).rem_euclid(ell) == 0).count() == 1)
    }

    fn c4(&self, ell: i64) -> bool {
        let Some(r1) = self.r1 else { return true };
        let hi = self.t - self.tau - ell;
        self.c1.iter().filter(|c| c.time <= hi).all(|c| r1.contains(c))
    }
}

/// Evaluate every residue-class condition for the columns `c` of a certificate.
///
/// Without a partition only the partition-free conditions (`lag-separation`,
/// `column-order`, `latent-link`, `latent-classes`) are reported. The certificate must carry a τ for every observed
/// series that has members in `C \ F^obs`.
pub fn check_conditions_c(g: &LagStructure, cert: &Certificate, c: &[Vertex], partition: Option<&Partition>) -> Result<ConditionReport> {
    let t = cert.target.time;
    let f = &cert.f_obs;
    let c_set: VertexSet = c.iter().copied().collect();
    let c1_all: VertexSet = c_set.iter().copied().filter(|v| !f.contains(v)).collect();
    let c2_all: VertexSet = c_set.intersection(f).copied().collect();
    let observed: Vec<SeriesId> = (0..g.d_o()).map(SeriesId::Observed).collect();

    let mut checks = Vec::new();
    let mut obs_lags = BTreeMap::new();

    // partition-sizes
    if let Some(p) = partition {
        let mut bad = Vec::new();
        for &s in &observed {
            let (a, b) = (of_series(&p.r1, s).len(), of_series(&c1_all, s).len());
            let (x, y) = (of_series(&p.r2, s).len(), of_series(&c2_all, s).len());
            if a != b || x != y {
                bad.push(format!("{s}: |R1|={a} |C1|={b} |R2|={x} |C2|={y}"));
            }
        }
        let overlap = !p.r1.is_disjoint(&p.r2);
        checks.push(CheckRecord::new(
            "partition-sizes",
            bad.is_empty() && !overlap,
            if overlap {
                "R1 and R2 overlap".into()
            } else if bad.is_empty() {
                "sizes match per series".into()
            } else {
                bad.join("; ")
            },
        ));
    }

    // lag-separation, residue-match, early-columns-copied
    let (mut w2, mut w3, mut w4) = (Vec::new(), Vec::new(), Vec::new());
    let (mut ok2, mut ok3, mut ok4) = (true, true, true);
    for &s in &observed {
        let c1 = of_series(&c1_all, s);
        if c1.is_empty() {
            continue;
        }
        let tau = *cert.taus.get(&s).ok_or_else(|| Error::Precondition(format!("no tau recorded for series {s}")))?;
        let r1 = partition.map(|p| of_series(&p.r1, s));
        let chk = ObsLagCheck { t, tau, c1: &c1, r1: r1.as_ref() };
        let lags: Vec<i64> = g.self_lags(s).iter().rev().copied().collect();
        let full = lags.iter().copied().find(|&l| chk.c2(l) && chk.c3(l) && chk.c4(l));
        let only2 = lags.iter().copied().find(|&l| chk.c2(l));
        match full.or(only2) {
            Some(l) => {
                obs_lags.insert(s, l);
                w2.push(format!("{s}: lag {l} (tau {tau})"));
                if partition.is_some() {
                    let (p3, p4) = (chk.c3(l), chk.c4(l));
                    ok3 &= p3;
                    ok4 &= p4;
                    w3.push(format!("{s}: {}", if p3 { "matched" } else { "unmatched class" }));
                    w4.push(format!("{s}: {}", if p4 { "early columns copied" } else { "early column missing from R1" }));
                }
            }
            None => {
                ok2 = false;
                let why = if lags.is_empty() { "no self-lags" } else { "no self-lag separates the late columns" };
                w2.push(format!("{s}: {why}"));
                if partition.is_some() {
                    ok3 = false;
                    ok4 = false;
                    w3.push(format!("{s}: no lag"));
                    w4.push(format!("{s}: no lag"));
                }
            }
        }
    }
    let join = |w: Vec<String>| if w.is_empty() { "vacuous".to_string() } else { w.join("; ") };
    checks.push(CheckRecord::new("lag-separation", ok2, join(w2)));
    if partition.is_some() {
        checks.push(CheckRecord::new("residue-match", ok3, join(w3)));
        checks.push(CheckRecord::new("early-columns-copied", ok4, join(w4)));
    }

    // column-order, row-order
    let mut bad51 = Vec::new();
    let mut bad52 = Vec::new();
    for &s in &observed {
        let (c1, c2) = (of_series(&c1_all, s), of_series(&c2_all, s));
        if let (Some(hi), Some(lo)) = (t_sup(&c1), t_inf(&c2)) {
            if hi >= lo {
                bad51.push(format!("{s}: sup C1 = {hi} >= inf C2 = {lo}"));
            }
        }
        if let Some(p) = partition {
            let (r1, r2) = (of_series(&p.r1, s), of_series(&p.r2, s));
            if let (Some(hi), Some(lo)) = (t_sup(&r2), t_inf(&r1)) {
                if hi >= lo {
                    bad52.push(format!("{s}: sup R2 = {hi} >= inf R1 = {lo}"));
                }
            }
        }
    }
    checks.push(CheckRecord::new("column-order", bad51.is_empty(), if bad51.is_empty() { "ordered".into() } else { bad51.join("; ") }));
    if partition.is_some() {
        checks.push(CheckRecord::new("row-order", bad52.is_empty(), if bad52.is_empty() { "ordered".into() } else { bad52.join("; ") }));
    }

    // latent-link, latent-classes, shifted-latent-classes
    let linked: Vec<SeriesId> = observed.iter().copied().filter(|&s| !of_series(&c2_all, s).is_empty()).collect();
    let options: Vec<Vec<EdgeChoice>> = linked
        .iter()
        .map(|&s| {
            (0..g.d_u()).map(SeriesId::Latent).flat_map(|u| g.lags(s, u).iter().map(move |&w| EdgeChoice { latent: u, lag: w })).collect()
        })
        .collect();
    let missing: Vec<String> = linked.iter().zip(&options).filter(|(_, o)| o.is_empty()).map(|(s, _)| s.to_string()).collect();
    checks.push(CheckRecord::new(
        "latent-link",
        missing.is_empty(),
        if missing.is_empty() {
            "every future series has a latent parent edge".into()
        } else {
            format!("no latent edge into {}", missing.join(", "))
        },
    ));

    let mut edges = BTreeMap::new();
    let mut latent_lags = BTreeMap::new();
    let mut p_set = VertexSet::new();
    let mut q_set = partition.map(|_| VertexSet::new());
    let (mut ok61, mut ok62) = (missing.is_empty(), missing.is_empty());
    let (mut w61, mut w62) = (String::from("vacuous"), String::from("vacuous"));
    if missing.is_empty() && !linked.is_empty() {
        let mut best61: Option<Outcome> = None;
        let mut best62: Option<Outcome> = None;
        let mut idx = vec![0usize; linked.len()];
        'combos: loop {
            let combo: Vec<EdgeChoice> = idx.iter().zip(&options).map(|(&i, o)| o[i]).collect();
            let out = evaluate_combo(g, &linked, &combo, &c2_all, partition);
            if out.pass61 && best61.is_none() {
                best61 = Some(out.clone());
            }
            if out.pass61 && out.pass62 {
                best62 = Some(out);
                break 'combos;
            }
            // next combination (lexicographic, last index fastest)
            let mut k = linked.len();
            loop {
                if k == 0 {
                    break 'combos;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < options[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        let chosen = if partition.is_some() { best62.or(best61) } else { best61 };
        match chosen {
            Some(o) => {
                ok61 = true;
                ok62 = o.pass62;
                edges = linked.iter().copied().zip(o.combo.iter().copied()).collect();
                latent_lags = o.lags.clone();
                p_set = o.p.clone();
                q_set = o.q.clone();
                w61 = format!("edges {}; P = {}; latent lags {}", fmt_edges(&edges), fmt_set(&p_set), fmt_lags(&latent_lags));
                w62 = match &q_set {
                    Some(q) => format!("Q = {}{}", fmt_set(q), if o.pass62 { "" } else { " does not match the classes of P" }),
                    None => String::new(),
                };
            }
            None => {
                ok61 = false;
                ok62 = false;
                w61 = "no edge choice puts P into distinct latent residue classes".into();
                w62 = "requires latent-classes".into();
            }
        }
    }
    checks.push(CheckRecord::new("latent-classes", ok61, w61));
    if partition.is_some() {
        checks.push(CheckRecord::new("shifted-latent-classes", ok62, w62));
    }

    Ok(ConditionReport { checks, obs_lags, edges, latent_lags, p_set, q_set })
}

#[derive(Clone)]
struct Outcome {
    combo: Vec<EdgeChoice>,
    pass61: bool,
    pass62: bool,
    lags: BTreeMap<SeriesId, i64>,
    p: VertexSet,
    q: Option<VertexSet>,
}

fn evaluate_combo(
    g: &LagStructure,
    linked: &[SeriesId],
    combo: &[EdgeChoice],
    c2_all: &VertexSet,
    partition: Option<&Partition>,
) -> Outcome {
    let mut p = VertexSet::new();
    let mut q = partition.map(|_| VertexSet::new());
    for (&s, e) in linked.iter().zip(combo) {
        p.extend(g.parents_along(c2_all, s, e.latent, e.lag));
        if let (Some(q), Some(part)) = (q.as_mut(), partition) {
            q.extend(g.parents_along(&part.r2, s, e.latent, e.lag));
        }
    }
    let latents: std::collections::BTreeSet<SeriesId> = p.iter().map(|v| v.series).collect();
    let (mut pass61, mut pass62) = (true, true);
    let mut lags = BTreeMap::new();
    for u in latents {
        let pu = of_series(&p, u);
        let qu = q.as_ref().map(|q| of_series(q, u));
        let cand: Vec<i64> = g.self_lags(u).iter().rev().copied().collect();
        let ok61 = |l: i64| distinct_classes(pu.iter(), l);
        let ok62 = |l: i64| match &qu {
            None => true,
            Some(qu) => pu.iter().all(|pv| qu.iter().filter(|qv| (qv.time - pv.time).rem_euclid(l) == 0).count() == 1),
        };
        let both = cand.iter().copied().find(|&l| ok61(l) && ok62(l));
        let first = cand.iter().copied().find(|&l| ok61(l));
        match (both, first) {
            (Some(l), _) => {
                lags.insert(u, l);
            }
            (None, Some(l)) => {
                lags.insert(u, l);
                pass62 = false;
            }
            (None, None) => {
                pass61 = false;
                pass62 = false;
            }
        }
    }
    Outcome { combo: combo.to_vec(), pass61, pass62, lags, p, q }
}

fn fmt_set(s: &VertexSet) -> String {
    format!("{{{}}}", s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))
}

fn fmt_edges(e: &BTreeMap<SeriesId, EdgeChoice>) -> String {
    e.iter().map(|(s, c)| format!("{}->{} lag {}", c.latent, s, c.lag)).collect::<Vec<_>>().join(", ")
}

fn fmt_lags(l: &BTreeMap<SeriesId, i64>) -> String {
    l.iter().map(|(s, v)| format!("{s}:{v}")).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TauMode;

    const U: SeriesId = SeriesId::Latent(0);
    const Y: SeriesId = SeriesId::Y;
    const X: SeriesId = SeriesId::Observed(1);

    fn set(vs: &[Vertex]) -> VertexSet {
        vs.iter().copied().collect()
    }

    fn confounded_ar3_cert() -> (LagStructure, Certificate) {
        let g = LagStructure::new(1, 1, [(U, U, vec![1]), (Y, Y, vec![3]), (Y, U, vec![1])]).unwrap();
        let mut cert = Certificate::new(Y.at(0), set(&[U.at(-1)]), set(&[Y.at(4)]));
        cert.compute_taus(&g, TauMode::Conservative).unwrap();
        (g, cert)
    }

    #[test]
    fn confounded_ar3_partition_passes_everything() {
        let (g, cert) = confounded_ar3_cert();
        let c = cert.columns(&g);
        let part = Partition { r1: set(&[Y.at(-3), Y.at(-2)]), r2: set(&[Y.at(-4)]) };
        let rep = check_conditions_c(&g, &cert, &c, Some(&part)).unwrap();
        assert!(rep.passed(), "{:?}", rep.checks);
        assert_eq!(rep.obs_lags[&Y], 3);
        assert_eq!(rep.p_set, set(&[U.at(3)]));
        assert_eq!(rep.q_set, Some(set(&[U.at(-5)])));
    }

    #[test]
    fn partition_free_run_reports_three_conditions() {
        let (g, cert) = confounded_ar3_cert();
        let rep = check_conditions_c(&g, &cert, &cert.columns(&g), None).unwrap();
        let names: Vec<&str> = rep.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["lag-separation", "column-order", "latent-link", "latent-classes"]);
        assert!(rep.passed());
    }

    #[test]
    fn wrong_partitions_fail_the_right_conditions() {
        let (g, cert) = confounded_ar3_cert();
        let c = cert.columns(&g);
        // Y_{t−1} is in the class of Y_{t−4}/Y_{t+...}: Y_{t+1} ≡ 1 mod 3 needs Y_{t−2}.
        let part = Partition { r1: set(&[Y.at(-3), Y.at(-1)]), r2: set(&[Y.at(-4)]) };
        let rep = check_conditions_c(&g, &cert, &c, Some(&part)).unwrap();
        assert!(!rep.get("residue-match").unwrap().passed);
        let part = Partition { r1: set(&[Y.at(-3), Y.at(-2)]), r2: set(&[Y.at(-1)]) };
        let rep = check_conditions_c(&g, &cert, &c, Some(&part)).unwrap();
        assert!(!rep.get("row-order").unwrap().passed);
        let part = Partition { r1: set(&[Y.at(-3)]), r2: set(&[Y.at(-4), Y.at(-5)]) };
        let rep = check_conditions_c(&g, &cert, &c, Some(&part)).unwrap();
        assert!(!rep.get("partition-sizes").unwrap().passed);
    }

    #[test]
    fn empty_early_columns_are_vacuous() {
        let g = LagStructure::new(1, 1, [(U, U, vec![1]), (Y, U, vec![1])]).unwrap();
        let mut cert = Certificate::new(Y.at(0), set(&[U.at(-1)]), set(&[Y.at(3)]));
        cert.compute_taus(&g, TauMode::Conservative).unwrap();
        let c = cert.columns(&g);
        assert_eq!(c, vec![Y.at(3)]);
        let part = Partition { r1: VertexSet::new(), r2: set(&[Y.at(-1)]) };
        let rep = check_conditions_c(&g, &cert, &c, Some(&part)).unwrap();
        for name in ["lag-separation", "residue-match", "early-columns-copied"] {
            assert!(rep.get(name).unwrap().passed);
        }
    }

    #[test]
    fn lagged_cause_reference_partition_passes() {
        let g = LagStructure::new(
            1,
            2,
            [(U, U, vec![1, 2]), (Y, Y, vec![1]), (X, X, vec![1]), (Y, X, vec![5]), (Y, U, vec![2, 3]), (X, U, vec![1, 2])],
        )
        .unwrap();
        let mut cert = Certificate::new(Y.at(0), set(&[U.at(-3), U.at(-2)]), set(&[X.at(2), X.at(3)]));
        cert.taus = BTreeMap::from([(Y, 2), (X, 3)]);
        let c = cert.columns(&g);
        let part = Partition { r1: set(&[X.at(-5), Y.at(-2), X.at(-3)]), r2: set(&[X.at(-6), X.at(-7)]) };
        let rep = check_conditions_c(&g, &cert, &c, Some(&part)).unwrap();
        assert!(rep.passed(), "{:?}", rep.checks);
        assert_eq!(rep.latent_lags[&U], 2);
    }

    #[test]
    fn report_is_independent_of_column_order() {
        let (g, cert) = confounded_ar3_cert();
        let mut c = cert.columns(&g);
        let a = check_conditions_c(&g, &cert, &c, None).unwrap();
        c.reverse();
        let b = check_conditions_c(&g, &cert, &c, None).unwrap();
        assert_eq!(a, b);
    }
}
