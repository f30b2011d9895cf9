// SPDX-License-Identifier: MIT
//! Random lag structures with one latent series and two observed series
//! (`Y = O1`, `X = O2`), and the convergence study of the `X → Y` estimate.
//!
//! A draw picks the number of lags per ordered series pair, then the lags
//! themselves without replacement, checks that the graph is a valid lag
//! structure and that the offset sweep finds an identifying certificate, and
//! finally rejection-samples stable parameter sets with unit noise.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, draw_stable_params, median, LongRow, ParamDrawConfig};
use crate::error::{Error, Result};
use crate::estimate::estimate_from_data;
use crate::graph::{LagStructure, SeriesId};
use crate::identify::{default_delta_range, delta_sweep, select_spec, Certificate, EstimatorSpec, SweepOptions};
use crate::svar::{simulate, SvarParams};

const U: SeriesId = SeriesId::Latent(0);
const Y: SeriesId = SeriesId::Y;
const X: SeriesId = SeriesId::Observed(1);

/// Inclusive integer range used for lag counts and lag pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: i64,
    pub hi: i64,
}

impl IntRange {
    pub const fn new(lo: i64, hi: i64) -> Self {
        IntRange { lo, hi }
    }

    fn values(&self) -> Vec<i64> {
        (self.lo..=self.hi).collect()
    }
}

/// Configuration of the random-graph study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGraphProtocol {
    /// Range of the number of self-lags of `U`, `X`, `Y` and of the number of
    /// `U → X` and `U → Y` lags (each drawn uniformly).
    pub m_range: IntRange,
    /// Number of `X → Y` lags.
    pub m_yx: usize,
    /// Number of `Y → X` lags.
    pub m_xy: usize,
    /// Pool for lags between distinct series.
    pub cross_lags: IntRange,
    /// Pool for self-lags.
    pub self_lags: IntRange,
    pub params: ParamDrawConfig,
    /// Parameter sets per accepted graph.
    pub n_params: usize,
    /// Offset range of the sweep; `None` uses `[−3(p+1), 3(p+1)]`.
    pub delta_range: Option<IntRange>,
    pub sweep: SweepOptions,
}

impl Default for RandomGraphProtocol {
    fn default() -> Self {
        RandomGraphProtocol {
            m_range: IntRange::new(1, 5),
            m_yx: 1,
            m_xy: 0,
            cross_lags: IntRange::new(0, 5),
            self_lags: IntRange::new(1, 5),
            params: ParamDrawConfig::default(),
            n_params: 10,
            delta_range: None,
            sweep: SweepOptions::default(),
        }
    }
}

/// An identified graph with its parameter draws.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    /// Index of the graph draw that produced this instance.
    pub draw: usize,
    pub graph: LagStructure,
    pub params: Vec<SvarParams<f64>>,
    pub certificate: Certificate,
    pub spec: EstimatorSpec,
    /// Number of identifying `(Δ, anchor)` pairs found by the sweep.
    pub n_identifying: usize,
}

impl RandomInstance {
    /// Key `A[h][O1][O2]` of the `X → Y` effect.
    pub fn effect_key(&self) -> String {
        let h = self.graph.lags(Y, X)[0];
        format!("A[{h}][{Y}][{X}]")
    }

    /// True `X → Y` effect under parameter draw `j`.
    pub fn truth(&self, j: usize) -> f64 {
        self.params[j].coefficient(Y, X, self.graph.lags(Y, X)[0])
    }
}

/// Why a graph draw was not accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RejectionReason {
    /// The lag structure is invalid (e.g. contemporaneous cycle).
    InvalidGraph(String),
    /// No offset in the range yields an identifying certificate.
    NotIdentifiable,
    /// The stability retry budget ran out.
    RetryBudget { best_margin: f64 },
}

/// Outcome of one graph draw.
#[derive(Debug, Clone)]
pub enum InstanceDraw {
    Accepted(Box<RandomInstance>),
    Rejected { graph: Option<LagStructure>, reason: RejectionReason },
}

fn draw_lags<R: Rng>(pool: &IntRange, m: usize, rng: &mut R) -> Vec<i64> {
    let values = pool.values();
    let m = m.min(values.len());
    let mut lags: Vec<i64> = sample(rng, values.len(), m).into_iter().map(|i| values[i]).collect();
    lags.sort();
    lags
}

/// Draw a lag structure under the protocol.
pub fn draw_graph<R: Rng>(protocol: &RandomGraphProtocol, rng: &mut R) -> Result<LagStructure> {
    let mut m = || rng.random_range(protocol.m_range.lo..=protocol.m_range.hi).max(0) as usize;
    let (m_u, m_x, m_y, m_xu, m_yu) = (m(), m(), m(), m(), m());
    let edges = [
        (U, U, draw_lags(&protocol.self_lags, m_u, rng)),
        (X, X, draw_lags(&protocol.self_lags, m_x, rng)),
        (Y, Y, draw_lags(&protocol.self_lags, m_y, rng)),
        (X, U, draw_lags(&protocol.cross_lags, m_xu, rng)),
        (Y, U, draw_lags(&protocol.cross_lags, m_yu, rng)),
        (Y, X, draw_lags(&protocol.cross_lags, protocol.m_yx, rng)),
        (X, Y, draw_lags(&protocol.cross_lags, protocol.m_xy, rng)),
    ];
    LagStructure::new(1, 2, edges.into_iter().filter(|e| !e.2.is_empty()))
}

/// One graph draw, fully determined by `(protocol, seed)`.
pub fn draw_random_instance(protocol: &RandomGraphProtocol, seed: u64) -> Result<InstanceDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = match draw_graph(protocol, &mut rng) {
        Ok(g) => g,
        Err(Error::InvalidGraph(msg)) => return Ok(InstanceDraw::Rejected { graph: None, reason: RejectionReason::InvalidGraph(msg) }),
        Err(e) => return Err(e),
    };
    if protocol.m_yx == 0 {
        return Err(Error::Precondition("the study needs at least one X → Y lag".into()));
    }
    let range = protocol.delta_range.map(|r| r.lo..=r.hi).unwrap_or_else(|| default_delta_range(&graph));
    let results = delta_sweep(&graph, range, Y.at(0), protocol.sweep)?;
    let Some(best) = select_spec(&results) else {
        return Ok(InstanceDraw::Rejected { graph: Some(graph), reason: RejectionReason::NotIdentifiable });
    };
    let params = match draw_stable_params(&graph, protocol.n_params, &protocol.params, &mut rng) {
        Ok(p) => p,
        Err(Error::Unstable(best_margin)) => {
            return Ok(InstanceDraw::Rejected { graph: Some(graph), reason: RejectionReason::RetryBudget { best_margin } })
        }
        Err(e) => return Err(e),
    };
    Ok(InstanceDraw::Accepted(Box::new(RandomInstance {
        draw: 0,
        certificate: best.certificate.clone(),
        spec: best.spec.clone(),
        n_identifying: results.len(),
        graph,
        params,
    })))
}

/// Counts of graph draws by outcome.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub draws: usize,
    pub accepted: usize,
    pub invalid_graph: usize,
    pub not_identifiable: usize,
    pub retry_budget: usize,
}

/// Draw graphs (draw `i` uses seed `derive_seed(seed, [i])`) until `n` are
/// accepted or `max_draws` have been tried. Draws run in parallel batches; the
/// accepted instances are the first `n` in draw order.
pub fn draw_accepted_instances(
    protocol: &RandomGraphProtocol,
    n: usize,
    max_draws: usize,
    seed: u64,
) -> Result<(Vec<RandomInstance>, AcceptanceStats)> {
    let mut out = Vec::new();
    let mut stats = AcceptanceStats::default();
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut next = 0usize;
    while out.len() < n && next < max_draws {
        let ids: Vec<usize> = (next..(next + batch).min(max_draws)).collect();
        next += ids.len();
        let draws: Vec<InstanceDraw> =
            ids.par_iter().map(|&i| draw_random_instance(protocol, derive_seed(seed, &[i as u64]))).collect::<Result<_>>()?;
        for (i, d) in ids.into_iter().zip(draws) {
            if out.len() == n {
                break;
            }
            stats.draws += 1;
            match d {
                InstanceDraw::Accepted(mut inst) => {
                    inst.draw = i;
                    stats.accepted += 1;
                    out.push(*inst);
                }
                InstanceDraw::Rejected { reason, .. } => match reason {
                    RejectionReason::InvalidGraph(_) => stats.invalid_graph += 1,
                    RejectionReason::NotIdentifiable => stats.not_identifiable += 1,
                    RejectionReason::RetryBudget { .. } => stats.retry_budget += 1,
                },
            }
        }
    }
    Ok((out, stats))
}

/// Per-instance median absolute error at one series length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub instance: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub median_abs_error: f64,
    /// Estimates that failed (e.g. numerically singular sample systems).
    pub failures: usize,
}

/// Result of [`convergence_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<LongRow>,
    pub medians: Vec<MedianRow>,
    pub failures: usize,
}

impl ConvergenceReport {
    /// Fraction of instances whose median error at `t` exceeds `threshold`
    /// (instances without any successful estimate count as exceeding).
    pub fn fraction_above(&self, t: usize, threshold: f64) -> f64 {
        let at: Vec<&MedianRow> = self.medians.iter().filter(|m| m.t == t).collect();
        if at.is_empty() {
            return f64::NAN;
        }
        at.iter().filter(|m| m.median_abs_error.is_nan() || m.median_abs_error > threshold).count() as f64 / at.len() as f64
    }

    /// Number of instances whose median error at `t` exceeds `threshold`.
    pub fn count_above(&self, t: usize, threshold: f64) -> usize {
        self.medians.iter().filter(|m| m.t == t && (m.median_abs_error.is_nan() || m.median_abs_error > threshold)).count()
    }

    /// Median-error table as CSV (`instance,T,median_abs_error,failures`).
    pub fn medians_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for m in &self.medians {
            wr.serialize(m)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// For every instance, parameter draw and `T`, simulate one series (burn-in
/// 1000), estimate the `X → Y` effect and record the absolute error; then take
/// the median over parameter draws per `(instance, T)`. Output is sorted by
/// `(instance, T, param_draw)`.
pub fn convergence_study(instances: &[RandomInstance], t_grid: &[usize], seed: u64) -> Result<ConvergenceReport> {
    let tasks: Vec<(usize, usize, usize)> = instances
        .iter()
        .enumerate()
        .flat_map(|(i, inst)| (0..inst.params.len()).flat_map(move |j| t_grid.iter().map(move |&t| (i, j, t))))
        .collect();
    let mut rows: Vec<LongRow> = tasks
        .par_iter()
        .map(|&(i, j, t)| {
            let inst = &instances[i];
            let data = simulate(&inst.params[j], t, super::examples::BURNIN, derive_seed(seed, &[i as u64, j as u64, t as u64]))?;
            let key = inst.effect_key();
            let truth = inst.truth(j);
            let estimate = estimate_from_data(&data, &inst.spec, true).ok().and_then(|e| e.by_key(&key));
            Ok(LongRow {
                instance: i.to_string(),
                t,
                param_draw: j,
                coefficient: key,
                truth,
                estimate,
                abs_error: estimate.map(|v| (v - truth).abs()),
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| {
        let ka = (a.instance.parse::<usize>().unwrap_or(0), a.t, a.param_draw);
        let kb = (b.instance.parse::<usize>().unwrap_or(0), b.t, b.param_draw);
        ka.cmp(&kb)
    });
    let mut groups: BTreeMap<(usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for r in &rows {
        let e = groups.entry((r.instance.parse().unwrap_or(0), r.t)).or_default();
        match r.abs_error {
            Some(v) => e.0.push(v),
            None => e.1 += 1,
        }
    }
    let failures = groups.values().map(|g| g.1).sum();
    let medians = groups
        .into_iter()
        .map(|((instance, t), (errs, failures))| MedianRow { instance, t, median_abs_error: median(&errs), failures })
        .collect();
    Ok(ConvergenceReport { rows, medians, failures })
}
