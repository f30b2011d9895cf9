// SPDX-License-Identifier: MIT
//! Brute-force search over the offset `Δ` of the future set.
//!
//! For a single latent series every `(Δ, anchor)` pair yields a basis/future
//! pair via [`construct_bu_fobs`]; the pair is kept when the target and
//! future sides are disjoint and the partition-free residue-class
//! conditions hold, in which case `R` is constructed and every condition is
//! re-checked on the result.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_basis, construct_bu_fobs, construct_r, Certificate, CheckRecord, EstimatorSpec};
use crate::error::{Error, Result};
use crate::graph::{LagStructure, SeriesId, TauMode, Vertex};

/// Knobs of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub tau_mode: TauMode,
    /// Enumerate basis path systems (the `unique-path-system` check) instead of relying on the
    /// construction's guarantee.
    pub enumerate_paths: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { tau_mode: TauMode::Conservative, enumerate_paths: false }
    }
}

/// One identifying certificate with its constructed spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepResult {
    pub certificate: Certificate,
    pub spec: EstimatorSpec,
}

/// The default search range `Δ ∈ [−3(p+1), 3(p+1)]`.
pub fn default_delta_range(g: &LagStructure) -> RangeInclusive<i64> {
    let w = 3 * (g.order() + 1);
    -w..=w
}

/// Try every `Δ` in `range` and every observed anchor series receiving a
/// latent edge; return all certificates that lead to a valid spec, sorted by
/// `(Δ, anchor)`.
pub fn delta_sweep(g: &LagStructure, range: RangeInclusive<i64>, y: Vertex, opts: SweepOptions) -> Result<Vec<SweepResult>> {
    if g.d_u() != 1 {
        return Err(Error::Precondition(format!("the sweep needs exactly one latent series (found {}); use general checks", g.d_u())));
    }
    let u = SeriesId::Latent(0);
    if g.self_lags(u).is_empty() {
        return Err(Error::Precondition("the latent series has no self-lags".into()));
    }
    let anchors: Vec<SeriesId> = (0..g.d_o()).map(SeriesId::Observed).filter(|&o| !g.lags(o, u).is_empty()).collect();
    if anchors.is_empty() {
        return Err(Error::Precondition("no edge from the latent series into an observed series".into()));
    }
    if !y.series.is_observed() || !g.contains_series(y.series) {
        return Err(Error::Precondition(format!("{y} is not an observed vertex of the graph")));
    }
    let tasks: Vec<(i64, SeriesId)> = range.flat_map(|d| anchors.iter().map(move |&a| (d, a))).collect();
    let found: Vec<Option<SweepResult>> =
        tasks.par_iter().map(|&(delta, anchor)| try_candidate(g, delta, anchor, y, opts)).collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

fn try_candidate(g: &LagStructure, delta: i64, anchor: SeriesId, y: Vertex, opts: SweepOptions) -> Result<Option<SweepResult>> {
    let (b_u, f_obs) = construct_bu_fobs(g, anchor, delta, y)?;
    let mut cert = Certificate::new(y, b_u, f_obs);
    cert.delta = Some(delta);
    cert.anchor = Some(anchor);
    let mut checks = check_basis(g, &cert, opts.enumerate_paths)?;
    if !opts.enumerate_paths {
        checks.insert(
            3,
            CheckRecord::new("unique-path-system", true, "implied by the single-latent construction (consecutive basis and future blocks)"),
        );
    }
    if checks.iter().any(|c| !c.passed) {
        return Ok(None);
    }
    match cert.compute_taus(g, opts.tau_mode) {
        Ok(()) => {}
        Err(Error::UnboundedAncestry(_) | Error::WindowExceeded { .. }) => return Ok(None),
        Err(e) => return Err(e),
    }
    match construct_r(g, &cert) {
        Ok((spec, _, report)) => {
            checks.extend(report.checks);
            checks.extend(super::check_rows(g, &cert, &spec)?);
            cert.checks = checks;
            Ok(Some(SweepResult { certificate: cert, spec }))
        }
        Err(Error::Precondition(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Preferred result: smallest covariance lag span, then fewest rows, then
/// smallest `Δ`, then anchor order.
pub fn select_spec(results: &[SweepResult]) -> Option<&SweepResult> {
    results.iter().min_by_key(|r| (r.spec.max_lag_span(), r.spec.r.len(), r.certificate.delta, r.certificate.anchor))
}
