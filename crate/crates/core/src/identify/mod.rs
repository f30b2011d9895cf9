// SPDX-License-Identifier: MIT
//! Identification of direct causal effects from the lag structure alone.
//!
//! The central object is an [`EstimatorSpec`]: sets `R` and `C` such that the
//! covariance system `Γ_{R,Y_t} = Γ_{R,C} · v` holds and `Γ_{R,C}` is generically
//! invertible, together with the map telling which entries of `v` are direct
//! effects on the target. A spec is justified by a [`Certificate`]: a latent
//! basis set `B_U`, an observed future set `F^obs`, and the outcome of every
//! graphical check performed on them.
//!
//! * [`construct_bu_fobs`] builds `B_U`/`F^obs` for a single latent series.
//! * [`conditions`] evaluates the residue-class conditions on candidate sets.
//! * [`construct_r`] builds `R` from those conditions.
//! * [`paths`] decides uniqueness of the basis path system on a finite graph.
//! * [`sweep`] brute-forces the offset `Δ` and the anchor series.

pub mod conditions;
pub mod paths;
pub mod sweep;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{t_inf, t_sup, KindFilter, LagStructure, SeriesId, TauMode, Vertex, VertexSet};

pub use conditions::{check_conditions_c, ConditionReport, EdgeChoice, Partition};
pub use paths::{check_upsilon_uniqueness, check_upsilon_uniqueness_with_limit, PathSystem, UpsilonReport, MAX_PATH_SYSTEMS};
pub use sweep::{default_delta_range, delta_sweep, select_spec, SweepOptions, SweepResult};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub witness: String,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, passed: bool, witness: impl Into<String>) -> Self {
        CheckRecord { name: name.into(), passed, witness: witness.into() }
    }
}

/// Which direct effect a column of `C` recovers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffEntry {
    /// Column of `C` (and entry of `v`).
    pub column: usize,
    /// Target series of the effect (the series of `Y_t`).
    pub target: SeriesId,
    /// Source series of the effect.
    pub source: SeriesId,
    /// Lag `h` of the effect `A⁽ʰ⁾_{target,source}`.
    pub lag: i64,
    /// True when the column was added as a superset member and is not an
    /// actual parent; its recovered value must then be zero.
    pub superset: bool,
}

impl CoeffEntry {
    /// Key of the form `A[h][target][source]`.
    pub fn key(&self) -> String {
        format!("A[{}][{}][{}]", self.lag, self.target, self.source)
    }
}

/// The sets of the covariance system plus the semantics of its solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    /// The target vertex `Y_t`.
    pub target: Vertex,
    /// Rows: the instrument-like set `R`.
    pub r: Vec<Vertex>,
    /// Columns: `pa^obs(Y_t)`, then `F^obs`, then the remaining `pa^obs(F^obs)`.
    pub c: Vec<Vertex>,
    /// Columns corresponding to (possibly superset) observed parents of `Y_t`.
    pub coeff_map: Vec<CoeffEntry>,
    /// Which construction produced the spec.
    pub provenance: String,
}

impl EstimatorSpec {
    /// Build a spec from explicit sets; columns in `c` that precede the target
    /// in time and belong to `y_parents` are mapped to effects.
    pub fn from_sets(
        g: &LagStructure,
        target: Vertex,
        r: Vec<Vertex>,
        c: Vec<Vertex>,
        y_parents: &VertexSet,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if r.len() != c.len() {
            return Err(Error::Precondition(format!("|R| = {} but |C| = {}", r.len(), c.len())));
        }
        for v in r.iter().chain(&c).chain(std::iter::once(&target)) {
            if !g.contains_series(v.series) || !v.series.is_observed() {
                return Err(Error::Precondition(format!("{v} is not an observed vertex of the graph")));
            }
        }
        let actual = g.parents(target, KindFilter::Observed);
        let coeff_map = c
            .iter()
            .enumerate()
            .filter(|(_, v)| y_parents.contains(v))
            .map(|(j, v)| CoeffEntry {
                column: j,
                target: target.series,
                source: v.series,
                lag: target.time - v.time,
                superset: !actual.contains(v),
            })
            .collect();
        Ok(EstimatorSpec { target, r, c, coeff_map, provenance: provenance.into() })
    }

    /// Largest time distance `|t(a) − t(b)|` over `a ∈ R`, `b ∈ C ∪ {Y_t}`: the
    /// largest covariance lag the linear system reads.
    pub fn max_lag_span(&self) -> i64 {
        self.r
            .iter()
            .flat_map(|a| self.c.iter().chain(std::iter::once(&self.target)).map(move |b| (a.time - b.time).abs()))
            .max()
            .unwrap_or(0)
    }

    /// Series touched by the spec, in sorted order.
    pub fn series(&self) -> Vec<SeriesId> {
        let mut s: Vec<SeriesId> = self.r.iter().chain(&self.c).chain(std::iter::once(&self.target)).map(|v| v.series).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Shift every vertex by `s`.
    pub fn shifted(&self, s: i64) -> Self {
        EstimatorSpec {
            target: self.target.shifted(s),
            r: self.r.iter().map(|v| v.shifted(s)).collect(),
            c: self.c.iter().map(|v| v.shifted(s)).collect(),
            coeff_map: self.coeff_map.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |vs: &[Vertex]| vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "target {}: R = {{{}}}, C = ({})", self.target, list(&self.r), list(&self.c))
    }
}

/// Observed-parent supersets: extra vertices treated as parents of `Y_t` or of
/// `F^obs` (true coefficient zero if they are not actual parents).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentSupersets {
    #[serde(default)]
    pub target: VertexSet,
    #[serde(default)]
    pub future: VertexSet,
}

/// A basis/future pair with the evidence gathered for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    /// The target vertex `Y_t`.
    pub target: Vertex,
    pub b_u: VertexSet,
    pub f_obs: VertexSet,
    /// Offset of `F^obs` relative to the target, when built by the sweep.
    pub delta: Option<i64>,
    /// Observed series carrying `F^obs`, when built by the sweep.
    pub anchor: Option<SeriesId>,
    /// Non-descendance offsets per observed series.
    pub taus: BTreeMap<SeriesId, i64>,
    #[serde(default)]
    pub supersets: ParentSupersets,
    pub checks: Vec<CheckRecord>,
}

impl Certificate {
    /// A certificate with no checks recorded yet.
    pub fn new(target: Vertex, b_u: VertexSet, f_obs: VertexSet) -> Self {
        Certificate {
            target,
            b_u,
            f_obs,
            delta: None,
            anchor: None,
            taus: BTreeMap::new(),
            supersets: ParentSupersets::default(),
            checks: Vec::new(),
        }
    }

    /// True when every recorded check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Record for a named check, if present.
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Names of failed checks.
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    /// Observed parents of the target, widened by the superset.
    pub fn target_parents(&self, g: &LagStructure) -> VertexSet {
        let mut s = g.parents(self.target, KindFilter::Observed);
        s.extend(self.supersets.target.iter().copied());
        s
    }

    /// Observed parents of `F^obs`, widened by the superset.
    pub fn future_parents(&self, g: &LagStructure) -> VertexSet {
        let mut s = g.parents_of_set(&self.f_obs, KindFilter::Observed);
        s.extend(self.supersets.future.iter().copied());
        s
    }

    /// `C` in its canonical order: observed parents of the target, `F^obs`, then
    /// the remaining observed parents of `F^obs`.
    pub fn columns(&self, g: &LagStructure) -> Vec<Vertex> {
        let yp = self.target_parents(g);
        let mut c: Vec<Vertex> = yp.iter().copied().collect();
        c.extend(self.f_obs.iter().copied().filter(|v| !yp.contains(v)));
        c.extend(self.future_parents(g).into_iter().filter(|v| !yp.contains(v) && !self.f_obs.contains(v)));
        c
    }

    /// `ForbAn` for this certificate.
    pub fn forb_an(&self, g: &LagStructure) -> Result<VertexSet> {
        g.forb_an(&self.b_u, &self.f_obs, self.target)
    }

    /// Fill `taus` for every observed series from `ForbAn`.
    pub fn compute_taus(&mut self, g: &LagStructure, mode: TauMode) -> Result<()> {
        let forb = self.forb_an(g)?;
        self.taus = (0..g.d_o()).map(SeriesId::Observed).map(|s| (s, g.valid_tau(&forb, s, self.target.time, mode))).collect();
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Basis and future sets for a single latent series: `F^obs` holds
/// `l^U_{m_U}` consecutive vertices of the anchor series starting at
/// `t + Δ`, and `B_U` the same number of consecutive latent vertices starting
/// at the earliest latent parent of `Y_t` or `F^obs`.
pub fn construct_bu_fobs(g: &LagStructure, anchor: SeriesId, delta: i64, y: Vertex) -> Result<(VertexSet, VertexSet)> {
    if g.d_u() != 1 {
        return Err(Error::Precondition(format!(
            "automatic basis construction needs exactly one latent series (found {}); use general checks",
            g.d_u()
        )));
    }
    let u = SeriesId::Latent(0);
    let span = *g.self_lags(u).last().ok_or_else(|| Error::Precondition("the latent series has no self-lags".into()))?;
    if !anchor.is_observed() || !g.contains_series(anchor) {
        return Err(Error::Precondition(format!("{anchor} is not an observed series of the graph")));
    }
    if g.lags(anchor, u).is_empty() {
        return Err(Error::Precondition(format!("no edge from {u} to {anchor}")));
    }
    let f_obs: VertexSet = (0..span).map(|k| anchor.at(y.time + delta + k)).collect();
    let mut top = f_obs.clone();
    top.insert(y);
    let t0 = t_inf(&g.parents_of_set(&top, KindFilter::Latent))
        .ok_or_else(|| Error::Precondition("neither the target nor the future set has latent parents".into()))?;
    let b_u: VertexSet = (0..span).map(|k| u.at(t0 + k)).collect();
    Ok((b_u, f_obs))
}

fn list(set: impl IntoIterator<Item = Vertex>) -> String {
    let v: Vec<String> = set.into_iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

/// Graphical checks on `B_U`/`F^obs` that do not involve `R`:
/// `target-latents-blocked`, `basis-size`, `future-latents-blocked`,
/// optionally `unique-path-system` (by enumeration), and `sides-disjoint`.
pub fn check_basis(g: &LagStructure, cert: &Certificate, enumerate_paths: bool) -> Result<Vec<CheckRecord>> {
    let y = cert.target;
    let mut out = Vec::new();
    let unblocked = |set: VertexSet| -> Result<Vec<Vertex>> {
        let mut bad = Vec::new();
        for q in set {
            if !cert.b_u.contains(&q) && !g.latent_ancestry_blocked(q, &cert.b_u)? {
                bad.push(q);
            }
        }
        Ok(bad)
    };
    let bad1 = unblocked(g.parents(y, KindFilter::Latent))?;
    out.push(CheckRecord::new(
        "target-latents-blocked",
        bad1.is_empty(),
        if bad1.is_empty() {
            "every latent parent of the target is in B_U or blocked".to_string()
        } else {
            format!("unblocked: {}", list(bad1))
        },
    ));
    out.push(CheckRecord::new(
        "basis-size",
        cert.f_obs.len() == cert.b_u.len(),
        format!("|F_obs| = {}, |B_U| = {}", cert.f_obs.len(), cert.b_u.len()),
    ));
    let bad2 = unblocked(g.parents_of_set(&cert.f_obs, KindFilter::Latent))?;
    out.push(CheckRecord::new(
        "future-latents-blocked",
        bad2.is_empty(),
        if bad2.is_empty() {
            "every latent parent of F_obs is in B_U or blocked".to_string()
        } else {
            format!("unblocked: {}", list(bad2))
        },
    ));
    if enumerate_paths {
        let rec = match check_upsilon_uniqueness(g, &cert.b_u, &cert.f_obs) {
            Ok(rep) => CheckRecord::new(
                "unique-path-system",
                rep.unique,
                format!(
                    "{} path systems enumerated; {}",
                    rep.systems,
                    rep.witness.map_or("no unique monomial".into(), |w| format!("unique: {w}"))
                ),
            ),
            Err(Error::Undecided(n)) => CheckRecord::new("unique-path-system", false, format!("undecided: more than {n} path systems")),
            Err(e) => return Err(e),
        };
        out.push(rec);
    }
    let left: VertexSet = cert.f_obs.iter().copied().chain(cert.future_parents(g)).collect();
    let right: VertexSet = std::iter::once(y).chain(cert.target_parents(g)).collect();
    let clash: Vec<Vertex> = left.intersection(&right).copied().collect();
    out.push(CheckRecord::new(
        "sides-disjoint",
        clash.is_empty(),
        if clash.is_empty() { "future side and target side are disjoint".to_string() } else { format!("shared: {}", list(clash)) },
    ));
    Ok(out)
}

/// The `row-count` and `rows-avoid-forbidden` checks on a proposed `R`.
pub fn check_rows(g: &LagStructure, cert: &Certificate, spec: &EstimatorSpec) -> Result<Vec<CheckRecord>> {
    let forb = cert.forb_an(g)?;
    let bad: Vec<Vertex> = spec.r.iter().copied().filter(|r| g.is_descendant_of_any(&forb, *r)).collect();
    let distinct: VertexSet = spec.r.iter().copied().collect();
    Ok(vec![
        CheckRecord::new(
            "row-count",
            spec.r.len() == spec.c.len() && distinct.len() == spec.r.len(),
            format!("|R| = {}, |C| = {}", spec.r.len(), spec.c.len()),
        ),
        CheckRecord::new(
            "rows-avoid-forbidden",
            bad.is_empty(),
            if bad.is_empty() {
                format!("no member of R descends from ForbAn = {}", list(forb))
            } else {
                format!("descendants of ForbAn in R: {}", list(bad))
            },
        ),
    ])
}

/// Build `R` following the residue-class construction: for every observed
/// series, members of `C \ F^obs` close to the target are matched by a vertex
/// of the same residue class in the window `[t−τ−(ℓ−1), t−τ]`, earlier ones
/// are copied, and `F^obs` is shifted into the past by the smallest positive
/// multiple of the chosen latent self-lag that places it before the matched
/// block and at or before `t − τ`.
///
/// Requires the partition-free conditions to pass; the resulting partition is
/// re-checked against all conditions and `rows-avoid-forbidden`.
pub fn construct_r(g: &LagStructure, cert: &Certificate) -> Result<(EstimatorSpec, Partition, ConditionReport)> {
    let c = cert.columns(g);
    let pre = check_conditions_c(g, cert, &c, None)?;
    if let Some(name) = pre.first_failure() {
        return Err(Error::Precondition(format!("condition {name} fails; no R can be constructed")));
    }
    let t = cert.target.time;
    let c1: VertexSet = c.iter().copied().filter(|v| !cert.f_obs.contains(v)).collect();
    let mut r1 = VertexSet::new();
    for (&series, &ell) in &pre.obs_lags {
        let tau = cert.tau(series)?;
        let lo = t - tau - (ell - 1);
        for v in c1.iter().filter(|v| v.series == series) {
            if v.time >= lo {
                let offset = (v.time - lo).rem_euclid(ell);
                r1.insert(series.at(lo + offset));
            } else {
                r1.insert(*v);
            }
        }
    }
    let mut r2 = VertexSet::new();
    for (&series, choice) in &pre.edges {
        let ell_u = pre.latent_lags[&choice.latent];
        let tau = cert.tau(series)?;
        let block: VertexSet = cert.f_obs.iter().copied().filter(|v| v.series == series).collect();
        let top = t_sup(&block).expect("nonempty future block");
        let r1_here: VertexSet = r1.iter().copied().filter(|v| v.series == series).collect();
        let ceiling = match t_inf(&r1_here) {
            Some(lo) => (lo - 1).min(t - tau),
            None => t - tau,
        };
        // smallest positive multiple of ell_u with top − shift ≤ ceiling
        let need = (top - ceiling).max(1);
        let shift = ((need + ell_u - 1) / ell_u) * ell_u;
        r2.extend(block.iter().map(|v| v.shifted(-shift)));
    }
    let partition = Partition { r1: r1.clone(), r2: r2.clone() };
    let report = check_conditions_c(g, cert, &c, Some(&partition))?;
    if let Some(name) = report.first_failure() {
        return Err(Error::Precondition(format!("constructed R violates condition {name}")));
    }
    let r: Vec<Vertex> = r1.iter().chain(r2.iter()).copied().collect();
    let provenance = match (cert.anchor, cert.delta) {
        (Some(a), Some(d)) => format!("residue-class construction (anchor {a}, delta {d})"),
        _ => "residue-class construction (manual basis)".to_string(),
    };
    let spec = EstimatorSpec::from_sets(g, cert.target, r, c, &cert.target_parents(g), provenance)?;
    let rows = check_rows(g, cert, &spec)?;
    if let Some(bad) = rows.iter().find(|r| !r.passed) {
        return Err(Error::Precondition(format!("constructed R violates condition {}: {}", bad.name, bad.witness)));
    }
    Ok((spec, partition, report))
}

impl Certificate {
    fn tau(&self, s: SeriesId) -> Result<i64> {
        self.taus.get(&s).copied().ok_or_else(|| Error::Precondition(format!("no tau recorded for series {s}")))
    }
}

/// Run every check on a manually specified basis and, when the lag-based
/// conditions allow it, construct `R`. The certificate's `taus` are filled
/// from `mode` unless already present. Returns the certificate (with all checks
/// recorded) and the spec if one was constructed.
pub fn certify_manual(
    g: &LagStructure,
    mut cert: Certificate,
    mode: TauMode,
    enumerate_paths: bool,
) -> Result<(Certificate, Option<EstimatorSpec>)> {
    let mut checks = check_basis(g, &cert, enumerate_paths)?;
    let basis_ok = checks.iter().all(|c| c.passed);
    if !basis_ok {
        cert.checks = checks;
        return Ok((cert, None));
    }
    if cert.taus.is_empty() {
        cert.compute_taus(g, mode)?;
    }
    match construct_r(g, &cert) {
        Ok((spec, _, report)) => {
            checks.extend(report.checks.iter().cloned());
            checks.extend(check_rows(g, &cert, &spec)?);
            cert.checks = checks;
            Ok((cert, Some(spec)))
        }
        Err(Error::Precondition(_)) => {
            let report = check_conditions_c(g, &cert, &cert.columns(g), None)?;
            checks.extend(report.checks.iter().cloned());
            cert.checks = checks;
            Ok((cert, None))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const U: SeriesId = SeriesId::Latent(0);
    const Y: SeriesId = SeriesId::Y;
    const X: SeriesId = SeriesId::Observed(1);

    pub(crate) fn confounded_ar3() -> LagStructure {
        LagStructure::new(1, 1, [(U, U, vec![1]), (Y, Y, vec![3]), (Y, U, vec![1])]).unwrap()
    }

    fn lagged_cause() -> LagStructure {
        LagStructure::new(
            1,
            2,
            [(U, U, vec![1, 2]), (Y, Y, vec![1]), (X, X, vec![1]), (Y, X, vec![5]), (Y, U, vec![2, 3]), (X, U, vec![1, 2])],
        )
        .unwrap()
    }

    fn feedback() -> LagStructure {
        LagStructure::new(
            1,
            2,
            [
                (U, U, vec![1]),
                (Y, Y, vec![1, 3]),
                (X, X, vec![2]),
                (Y, X, vec![3]),
                (X, Y, vec![1]),
                (Y, U, vec![1, 2]),
                (X, U, vec![4, 5]),
            ],
        )
        .unwrap()
    }

    fn set(vs: &[Vertex]) -> VertexSet {
        vs.iter().copied().collect()
    }

    #[test]
    fn basis_for_confounded_ar3() {
        let (b, f) = construct_bu_fobs(&confounded_ar3(), Y, 4, Y.at(0)).unwrap();
        assert_eq!(f, set(&[Y.at(4)]));
        assert_eq!(b, set(&[U.at(-1)]));
    }

    #[test]
    fn basis_for_lagged_cause() {
        let (b, f) = construct_bu_fobs(&lagged_cause(), X, 2, Y.at(0)).unwrap();
        assert_eq!(f, set(&[X.at(2), X.at(3)]));
        assert_eq!(b, set(&[U.at(-3), U.at(-2)]));
    }

    #[test]
    fn basis_preconditions() {
        let g = LagStructure::new(1, 1, [(U, U, vec![1])]).unwrap();
        assert!(construct_bu_fobs(&g, Y, 0, Y.at(0)).is_err());
        let g = LagStructure::new(2, 1, [(U, U, vec![1]), (Y, U, vec![1])]).unwrap();
        assert!(construct_bu_fobs(&g, Y, 0, Y.at(0)).is_err());
    }

    #[test]
    fn confounded_ar3_columns_and_r() {
        let g = confounded_ar3();
        let mut cert = Certificate::new(Y.at(0), set(&[U.at(-1)]), set(&[Y.at(4)]));
        assert_eq!(cert.columns(&g), vec![Y.at(-3), Y.at(4), Y.at(1)]);
        cert.compute_taus(&g, TauMode::Conservative).unwrap();
        assert_eq!(cert.taus[&Y], 1);
        let (spec, part, report) = construct_r(&g, &cert).unwrap();
        assert_eq!(part.r1, set(&[Y.at(-3), Y.at(-2)]));
        assert_eq!(part.r2, set(&[Y.at(-4)]));
        assert!(report.passed());
        assert_eq!(spec.coeff_map.len(), 1);
        assert_eq!(spec.coeff_map[0].key(), "A[3][O1][O1]");
        assert_eq!(spec.coeff_map[0].column, 0);
    }

    #[test]
    fn feedback_example_reproduces_reference_r() {
        let g = feedback();
        let (b, f) = construct_bu_fobs(&g, X, 2, Y.at(0)).unwrap();
        assert_eq!(b, set(&[U.at(-3)]));
        let mut cert = Certificate::new(Y.at(0), b, f);
        let forb = cert.forb_an(&g).unwrap();
        cert.taus = BTreeMap::from([(Y, g.valid_tau(&forb, Y, 0, TauMode::Conservative)), (X, g.valid_tau(&forb, X, 0, TauMode::Tight))]);
        assert_eq!(cert.taus, BTreeMap::from([(Y, 3), (X, 1)]));
        let (spec, _, _) = construct_r(&g, &cert).unwrap();
        let r: VertexSet = spec.r.iter().copied().collect();
        assert_eq!(r, set(&[X.at(-3), Y.at(-5), Y.at(-4), Y.at(-3), X.at(-2), X.at(-4)]));
        let c: VertexSet = spec.c.iter().copied().collect();
        assert_eq!(c, set(&[X.at(-3), Y.at(-1), Y.at(-3), X.at(2), X.at(0), Y.at(1)]));
        assert_eq!(spec.coeff_map.len(), 3);
    }

    #[test]
    fn manual_certification_records_all_checks() {
        let g = confounded_ar3();
        let cert = Certificate::new(Y.at(0), set(&[U.at(-1)]), set(&[Y.at(4)]));
        let (cert, spec) = certify_manual(&g, cert, TauMode::Conservative, true).unwrap();
        assert!(spec.is_some());
        assert!(cert.all_passed(), "{:?}", cert.failures());
        for name in [
            "target-latents-blocked",
            "basis-size",
            "future-latents-blocked",
            "unique-path-system",
            "sides-disjoint",
            "rows-avoid-forbidden",
            "row-count",
            "partition-sizes",
            "lag-separation",
            "residue-match",
            "early-columns-copied",
            "column-order",
            "row-order",
            "latent-link",
            "latent-classes",
            "shifted-latent-classes",
        ] {
            assert!(cert.check(name).is_some(), "missing {name}");
        }
    }

    #[test]
    fn shared_future_and_target_sides_are_detected() {
        let g = confounded_ar3();
        // F_obs = {Y_{t+3}} has Y_t as observed parent.
        let cert = Certificate::new(Y.at(0), set(&[U.at(-1)]), set(&[Y.at(3)]));
        let checks = check_basis(&g, &cert, false).unwrap();
        assert!(!checks.iter().find(|c| c.name == "sides-disjoint").unwrap().passed);
    }

    #[test]
    fn spec_json_round_trip_and_span() {
        let g = confounded_ar3();
        let spec = EstimatorSpec::from_sets(
            &g,
            Y.at(0),
            vec![Y.at(-3), Y.at(-2), Y.at(-4)],
            vec![Y.at(-3), Y.at(4), Y.at(1)],
            &set(&[Y.at(-3)]),
            "manual",
        )
        .unwrap();
        assert_eq!(EstimatorSpec::from_json(&spec.to_json()).unwrap(), spec);
        assert_eq!(spec.max_lag_span(), 8);
        assert!(spec.to_json().contains("\"series\": \"O1\""));
    }
}
