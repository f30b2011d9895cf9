// SPDX-License-Identifier: MIT
//! Estimation of direct effects from an identified covariance system.
//!
//! An [`EstimatorSpec`] fixes sets `R` and `C`; the effects are read off the
//! solution `v` of `Γ_{R,C} · v = Γ_{R,Y_t}`. The covariances can come from
//! any [`CovarianceProvider`]: exact population autocovariances (which recover
//! the true coefficients up to rounding) or sample autocovariances (which
//! converge in probability). Uncertainty for a single realization is
//! quantified with a wrap-free moving-block bootstrap.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::error::{Error, Result};
use crate::graph::SeriesId;
use crate::identify::{CoeffEntry, EstimatorSpec};
use crate::scalar::Real;
use crate::svar::{sample_cov_table, CovarianceProvider, SeriesData};

/// Condition numbers above this make [`solve_effects`] fail instead of
/// returning a meaningless solution.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e12;

/// The square system `Γ_{R,C} · v = Γ_{R,Y_t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<T: Real> {
    /// `Γ_{R,C}`: entry `(i, j)` is `Cov(r_i, c_j)`.
    pub matrix: DMatrix<T>,
    /// `Γ_{R,Y_t}`: entry `i` is `Cov(r_i, Y_t)`.
    pub rhs: DVector<T>,
    pub spec: EstimatorSpec,
}

/// Where the covariances behind an estimate came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Population autocovariances.
    Exact,
    /// Sample autocovariances of a series of the given length.
    Sample { len: usize },
    /// Summary over bootstrap replicates.
    Bootstrap { replicates: usize, block_len: usize },
}

/// Solution of a covariance system with the effects it identifies.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimate<T: Real> {
    /// One entry per identified effect (the spec's coefficient map).
    pub entries: Vec<CoeffEntry>,
    /// Estimated value of each entry, in the same order.
    pub values: Vec<T>,
    /// The full solution vector `v`.
    pub full_solution: DVector<T>,
    /// 2-norm condition number of `Γ_{R,C}`.
    pub condition: f64,
    pub provenance: Provenance,
}

/// Serializable view of an [`EffectEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectReport {
    pub target: String,
    /// Effects keyed `A[h][target][source]`.
    pub coefficients: BTreeMap<String, f64>,
    /// Keys of columns that were added as superset members (true value zero).
    pub superset_keys: Vec<String>,
    pub full_solution: Vec<f64>,
    pub condition: f64,
    pub reciprocal_condition: f64,
    pub provenance: Provenance,
}

impl<T: Real> EffectEstimate<T> {
    /// The estimated effect of `source` at `lag` on the target, if identified.
    pub fn coefficient(&self, source: SeriesId, lag: i64) -> Option<T> {
        self.entries.iter().position(|e| e.source == source && e.lag == lag).map(|i| self.values[i])
    }

    /// Estimated effect by key `A[h][target][source]`.
    pub fn by_key(&self, key: &str) -> Option<T> {
        self.entries.iter().position(|e| e.key() == key).map(|i| self.values[i])
    }

    /// Reciprocal condition number (0 for an exactly singular matrix).
    pub fn reciprocal_condition(&self) -> f64 {
        if self.condition.is_finite() && self.condition > 0.0 {
            1.0 / self.condition
        } else {
            0.0
        }
    }

    pub fn report(&self, target: &str) -> EffectReport {
        EffectReport {
            target: target.to_string(),
            coefficients: self.entries.iter().zip(&self.values).map(|(e, v)| (e.key(), v.as_f64())).collect(),
            superset_keys: self.entries.iter().filter(|e| e.superset).map(CoeffEntry::key).collect(),
            full_solution: self.full_solution.iter().map(|v| v.as_f64()).collect(),
            condition: self.condition,
            reciprocal_condition: self.reciprocal_condition(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Fill `Γ_{R,C}` and `Γ_{R,Y_t}` from `provider`.
pub fn build_system<T: Real, P: CovarianceProvider<T>>(provider: &P, spec: &EstimatorSpec) -> Result<LinearSystem<T>> {
    let need = spec.max_lag_span();
    if need as usize > provider.max_lag() {
        return Err(Error::LagOutOfRange { lag: need, max: provider.max_lag() });
    }
    let (n, m) = (spec.r.len(), spec.c.len());
    let mut matrix = DMatrix::zeros(n, m);
    let mut rhs = DVector::zeros(n);
    for (i, &r) in spec.r.iter().enumerate() {
        for (j, &c) in spec.c.iter().enumerate() {
            matrix[(i, j)] = provider.cov(r, c)?;
        }
        rhs[i] = provider.cov(r, spec.target)?;
    }
    Ok(LinearSystem { matrix, rhs, spec: spec.clone() })
}

/// 2-norm condition number `σ_max / σ_min` (infinite when singular).
pub fn condition_number<T: Real>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(0.0f64, |a, s| a.max(s.as_f64()));
    let min = sv.iter().fold(f64::INFINITY, |a, s| a.min(s.as_f64()));
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve the system with the default condition threshold.
pub fn solve_effects<T: Real>(system: &LinearSystem<T>, provenance: Provenance) -> Result<EffectEstimate<T>> {
    solve_effects_with_threshold(system, provenance, DEFAULT_CONDITION_THRESHOLD)
}

/// Solve by LU with partial pivoting after checking the SVD condition number
/// against `threshold`.
pub fn solve_effects_with_threshold<T: Real>(
    system: &LinearSystem<T>,
    provenance: Provenance,
    threshold: f64,
) -> Result<EffectEstimate<T>> {
    let m = &system.matrix;
    if !m.is_square() || m.nrows() != system.rhs.len() {
        return Err(Error::Precondition(format!("system is {}×{} with {} right-hand sides", m.nrows(), m.ncols(), system.rhs.len())));
    }
    let condition = condition_number(m);
    if condition.is_nan() || condition > threshold {
        return Err(Error::Singular(condition));
    }
    let v = m.clone().lu().solve(&system.rhs).ok_or(Error::Singular(condition))?;
    if v.iter().any(|x| !x.as_f64().is_finite()) {
        return Err(Error::Singular(condition));
    }
    let entries = system.spec.coeff_map.clone();
    let values = entries.iter().map(|e| v[e.column]).collect();
    Ok(EffectEstimate { entries, values, full_solution: v, condition, provenance })
}

/// Sample-covariance estimate from one realization.
pub fn estimate_from_data<T: Real>(data: &SeriesData<T>, spec: &EstimatorSpec, demean: bool) -> Result<EffectEstimate<T>> {
    let need = spec.max_lag_span() as usize;
    if data.len() <= need {
        return Err(Error::InsufficientData(format!(
            "the spec needs covariances up to lag {need} but the data has {} observations",
            data.len()
        )));
    }
    let sub = data.select(&spec.series())?;
    let table = sample_cov_table(&sub, need, demean)?;
    solve_effects(&build_system(&table, spec)?, Provenance::Sample { len: data.len() })
}

/// Empirical 2.5%, 50% and 97.5% quantiles of one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
}

impl QuantileSummary {
    /// Quantiles of `values` (NaN when empty).
    pub fn of(values: &[f64]) -> Self {
        let mut d = Data::new(values.to_vec());
        QuantileSummary { q025: d.quantile(0.025), median: d.quantile(0.5), q975: d.quantile(0.975) }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.q025 <= x && x <= self.q975
    }

    pub fn width(&self) -> f64 {
        self.q975 - self.q025
    }
}

/// Result of [`block_bootstrap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    /// Coefficient keys, in coeff-map order.
    pub keys: Vec<String>,
    /// Point estimate on the original data.
    pub point: Vec<f64>,
    /// Successful replicate estimates, one row per replicate (in replicate order).
    pub replicates: Vec<Vec<f64>>,
    /// Per-coefficient quantiles over the successful replicates.
    pub quantiles: Vec<QuantileSummary>,
    /// Number of replicates whose estimation failed (excluded above).
    pub failures: usize,
    pub block_len: usize,
}

impl BootstrapSummary {
    /// Replicate estimates as CSV (`replicate,<key>...`).
    pub fn replicates_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["replicate".to_string()];
        header.extend(self.keys.iter().cloned());
        wr.write_record(&header)?;
        for (i, row) in self.replicates.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Moving-block resample: blocks of `block_len` consecutive columns with start
/// indices drawn uniformly from `0..=T−block_len` (no wrap-around),
/// concatenated and truncated to `T` columns.
pub fn resample_blocks<T: Real, R: Rng>(data: &SeriesData<T>, block_len: usize, rng: &mut R) -> SeriesData<T> {
    let t_len = data.len();
    let mut values = DMatrix::zeros(data.values.nrows(), t_len);
    let mut filled = 0;
    while filled < t_len {
        let start = rng.random_range(0..=t_len - block_len);
        let take = block_len.min(t_len - filled);
        values.columns_mut(filled, take).copy_from(&data.values.columns(start, take));
        filled += take;
    }
    SeriesData { series: data.series.clone(), values }
}

/// Moving-block bootstrap of [`estimate_from_data`]. Replicate `i` draws from
/// its own ChaCha stream `i` under `seed`, so the result does not depend on
/// scheduling.
pub fn block_bootstrap<T: Real>(
    data: &SeriesData<T>,
    spec: &EstimatorSpec,
    block_len: usize,
    replicates: usize,
    seed: u64,
    demean: bool,
) -> Result<BootstrapSummary> {
    if block_len == 0 || block_len > data.len() {
        return Err(Error::Precondition(format!("block length {block_len} must lie in 1..={}", data.len())));
    }
    let point = estimate_from_data(data, spec, demean)?;
    let sub = data.select(&spec.series())?;
    let runs: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let boot = resample_blocks(&sub, block_len, &mut rng);
            estimate_from_data(&boot, spec, demean).ok().map(|e| e.values.iter().map(|v| v.as_f64()).collect())
        })
        .collect();
    let failures = runs.iter().filter(|r| r.is_none()).count();
    let reps: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    let quantiles = (0..point.values.len()).map(|k| QuantileSummary::of(&reps.iter().map(|r| r[k]).collect::<Vec<_>>())).collect();
    Ok(BootstrapSummary {
        keys: point.entries.iter().map(CoeffEntry::key).collect(),
        point: point.values.iter().map(|v| v.as_f64()).collect(),
        replicates: reps,
        quantiles,
        failures,
        block_len,
    })
}
