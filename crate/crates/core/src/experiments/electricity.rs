// SPDX-License-Identifier: MIT
//! Electricity-market models and the estimator bank for the instantaneous
//! price effect on demand.
//!
//! Demand `D` and price `P` are observed; wind generation `W` (an
//! autoregressive exogenous driver of supply) and the demand shocks are
//! latent. With `den = β^P − γ^P` the models read (constants omitted):
//!
//! * **Model 1**: `D_t = β^P P_t + β^{D1} D_{t−1} + U^D_t`,
//!   `P_t = (γ^W W_t − β^{D1} D_{t−1} + U^S_t − U^D_t) / den`.
//! * **Model 2**: `D_t = β^P P_t + β^{B1} B_{t−1} + U^A_t + U^B_t` with the
//!   latent AR(1) `B_t = β^{B1} B_{t−1} + U^B_t`, and
//!   `P_t = (γ^W W_t − β^{B1} B_{t−1} + U^S_t − U^A_t − U^B_t) / den`.
//! * **Model 3**: `D_t = β^P P_t + β^{P1} P_{t−1} + U^D_t`,
//!   `P_t = (γ^W W_t − β^{P1} P_{t−1} + U^S_t − U^D_t) / den`.
//!
//! Each price equation is the market-clearing solution of demand against the
//! supply curve `S_t = S_0 + γ^P P_t + γ^W W_t + U^S_t`.
//!
//! Two representations are provided: [`simulate_levels`] iterates the
//! equations with intercepts (the semi-synthetic data), and
//! [`ElectricityModel::linearized`] expresses the same dynamics as an SVAR
//! (latent series `W`, the demand shock and, for model 2, `B`; observed
//! `O1 = D`, `O2 = P`) for exact population covariances.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::error::{Error, Result};
use crate::estimate::{build_system, estimate_from_data, solve_effects, Provenance, QuantileSummary};
use crate::graph::{LagStructure, SeriesId, Vertex, VertexSet};
use crate::identify::EstimatorSpec;
use crate::svar::{exact_autocov, SeriesData, SvarParams};

const W: SeriesId = SeriesId::Latent(0);
const SHOCK: SeriesId = SeriesId::Latent(1);
const B: SeriesId = SeriesId::Latent(2);
const D: SeriesId = SeriesId::Y;
const P: SeriesId = SeriesId::Observed(1);

/// Key of the instantaneous price effect on demand.
pub const PRICE_EFFECT_KEY: &str = "A[0][O1][O2]";

/// Default innovation standard deviation of the wind process. The scale of
/// the exogenous driver sets the instrument strength of every estimator in
/// the bank: large enough that the valid estimators are sharp at realistic
/// sample sizes, small enough that latent confounding still visibly biases
/// the invalid ones.
pub const DEFAULT_WIND_SD: f64 = 90_000.0;

/// Burn-in steps discarded by [`simulate_levels`].
pub const LEVEL_BURNIN: usize = 1000;

/// Which demand/price model generates the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelVariant {
    Model1,
    Model2,
    Model3,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::Model1, ModelVariant::Model2, ModelVariant::Model3];
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            ModelVariant::Model1 => 1,
            ModelVariant::Model2 => 2,
            ModelVariant::Model3 => 3,
        };
        write!(f, "model{n}")
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().trim_start_matches("model").trim() {
            "1" => Ok(ModelVariant::Model1),
            "2" => Ok(ModelVariant::Model2),
            "3" => Ok(ModelVariant::Model3),
            _ => Err(Error::Format(format!("unknown model '{s}' (expected 1, 2 or 3)"))),
        }
    }
}

/// Autoregressive wind process `W_t = Σ_i φ_i W_{t−i} + σ ε_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindProcess {
    /// `φ_1, φ_2, …` (zeros allowed; trailing zeros are ignored).
    pub ar: Vec<f64>,
    /// Innovation standard deviation.
    pub sd: f64,
}

impl Default for WindProcess {
    /// AR(2) with coefficients `(0.7, 0.2)` and innovation sd [`DEFAULT_WIND_SD`].
    fn default() -> Self {
        WindProcess { ar: vec![0.7, 0.2], sd: DEFAULT_WIND_SD }
    }
}

impl WindProcess {
    /// AR(4) with a nonzero coefficient at every lag `1..=4`, so every
    /// estimator of the bank finds the wind lag it relies on.
    pub fn ar4() -> Self {
        WindProcess { ar: vec![0.5, 0.2, 0.1, 0.1], sd: DEFAULT_WIND_SD }
    }

    /// Read AR coefficients from a CSV with one coefficient per row (first
    /// column; an optional non-numeric header is skipped).
    pub fn from_coefficients_csv<R: std::io::Read>(r: R, sd: f64) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut ar = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let field = rec.get(0).unwrap_or("").trim();
            match field.parse::<f64>() {
                Ok(v) => ar.push(v),
                Err(_) if i == 0 => continue,
                Err(_) => return Err(Error::Format(format!("non-numeric wind coefficient '{field}'"))),
            }
        }
        Ok(WindProcess { ar, sd })
    }

    /// Lags with nonzero coefficients.
    pub fn lags(&self) -> Vec<i64> {
        self.ar.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(i, _)| i as i64 + 1).collect()
    }
}

/// Parameters of one electricity-market model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricityModel {
    pub variant: ModelVariant,
    pub beta_p: f64,
    pub beta_p1: f64,
    pub beta_d1: f64,
    pub beta_b1: f64,
    pub gamma_p: f64,
    pub gamma_w: f64,
    pub s0: f64,
    pub d0: f64,
    pub b0: f64,
    /// Standard deviations of the demand, supply and the two model-2 shocks.
    pub sd_ud: f64,
    pub sd_us: f64,
    pub sd_ua: f64,
    pub sd_ub: f64,
    pub wind: WindProcess,
}

impl ElectricityModel {
    /// The default parameter set for a variant.
    pub fn new(variant: ModelVariant) -> Self {
        ElectricityModel {
            variant,
            beta_p: -100.0,
            beta_p1: 50.0,
            beta_d1: 0.7,
            beta_b1: 0.9,
            gamma_p: 500.0,
            gamma_w: 1.0,
            s0: 25_000.0,
            d0: 50_000.0,
            b0: 0.0,
            sd_ud: 2000.0,
            sd_us: 1.0,
            sd_ua: 2000.0 / 2f64.sqrt(),
            sd_ub: 2000.0 / 2f64.sqrt(),
            wind: WindProcess::default(),
        }
    }

    pub fn with_wind(mut self, wind: WindProcess) -> Self {
        self.wind = wind;
        self
    }

    fn den(&self) -> Result<f64> {
        let den = self.beta_p - self.gamma_p;
        if den == 0.0 || !den.is_finite() {
            return Err(Error::InvalidParams("β^P − γ^P must be nonzero".into()));
        }
        Ok(den)
    }

    /// The model as an SVAR over `(W, shock, [B], D, P)`.
    pub fn linearized(&self) -> Result<SvarParams<f64>> {
        let den = self.den()?;
        let model2 = self.variant == ModelVariant::Model2;
        let d_u = if model2 { 3 } else { 2 };
        // (target, source, lag, coefficient); zero coefficients drop the edge.
        let mut terms: Vec<(SeriesId, SeriesId, i64, f64)> = Vec::new();
        for (i, &a) in self.wind.ar.iter().enumerate() {
            terms.push((W, W, i as i64 + 1, a));
        }
        terms.push((D, P, 0, self.beta_p));
        terms.push((D, SHOCK, 0, 1.0));
        terms.push((P, W, 0, self.gamma_w / den));
        terms.push((P, SHOCK, 0, -1.0 / den));
        match self.variant {
            ModelVariant::Model1 => {
                terms.push((D, D, 1, self.beta_d1));
                terms.push((P, D, 1, -self.beta_d1 / den));
            }
            ModelVariant::Model2 => {
                terms.push((B, B, 1, self.beta_b1));
                terms.push((D, B, 0, 1.0));
                terms.push((P, B, 0, -1.0 / den));
            }
            ModelVariant::Model3 => {
                terms.push((D, P, 1, self.beta_p1));
                terms.push((P, P, 1, -self.beta_p1 / den));
            }
        }
        terms.retain(|t| t.3 != 0.0);
        let mut edges: Vec<(SeriesId, SeriesId, Vec<i64>)> = Vec::new();
        for &(t, s, h, _) in &terms {
            match edges.iter_mut().find(|e| e.0 == t && e.1 == s) {
                Some(e) => e.2.push(h),
                None => edges.push((t, s, vec![h])),
            }
        }
        let g = LagStructure::new(d_u, 2, edges)?;
        let dim = g.d();
        let mut coeffs = vec![DMatrix::zeros(dim, dim); g.order() as usize + 1];
        for &(t, s, h, a) in &terms {
            coeffs[h as usize][(g.index(t), g.index(s))] = a;
        }
        let shock_sd = if model2 { self.sd_ua } else { self.sd_ud };
        let mut noise = vec![self.wind.sd.powi(2), shock_sd.powi(2)];
        if model2 {
            noise.push(self.sd_ub.powi(2));
        }
        noise.push(0.0);
        noise.push((self.sd_us / den).powi(2));
        SvarParams::new(g, coeffs, DVector::from_vec(noise))
    }
}

/// Simulate `(D, P)` in levels (with intercepts) from the model equations,
/// after [`LEVEL_BURNIN`] discarded steps. Rows: `O1 = D`, `O2 = P`.
pub fn simulate_levels(model: &ElectricityModel, t_len: usize, seed: u64) -> Result<SeriesData<f64>> {
    let den = model.den()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = || -> f64 { StandardNormal.sample(&mut rng) };
    let q = model.wind.ar.len();
    let mut w_hist = vec![0.0; q.max(1)];
    let (mut d_prev, mut p_prev, mut b_prev) = (0.0f64, 0.0f64, 0.0f64);
    let total = LEVEL_BURNIN + t_len;
    let mut out = DMatrix::zeros(2, t_len);
    for step in 0..total {
        let mut w = model.wind.sd * n();
        for (i, a) in model.wind.ar.iter().enumerate() {
            w += a * w_hist[(step + w_hist.len() - 1 - i) % w_hist.len()];
        }
        if !w_hist.is_empty() {
            let len = w_hist.len();
            w_hist[step % len] = w;
        }
        let base = model.s0 - model.d0 + model.gamma_w * w;
        let (d, p) = match model.variant {
            ModelVariant::Model1 => {
                let (ud, us) = (model.sd_ud * n(), model.sd_us * n());
                let p = (base - model.beta_d1 * d_prev + us - ud) / den;
                (model.d0 + model.beta_p * p + model.beta_d1 * d_prev + ud, p)
            }
            ModelVariant::Model2 => {
                let (ua, ub, us) = (model.sd_ua * n(), model.sd_ub * n(), model.sd_us * n());
                let b = model.b0 + model.beta_b1 * b_prev + ub;
                let p = (base - model.beta_b1 * b_prev + us - ua - ub) / den;
                let d = model.d0 + model.beta_p * p + model.beta_b1 * b_prev + ua + ub;
                b_prev = b;
                (d, p)
            }
            ModelVariant::Model3 => {
                let (ud, us) = (model.sd_ud * n(), model.sd_us * n());
                let p = (base - model.beta_p1 * p_prev + us - ud) / den;
                (model.d0 + model.beta_p * p + model.beta_p1 * p_prev + ud, p)
            }
        };
        d_prev = d;
        p_prev = p;
        if step >= LEVEL_BURNIN {
            out[(0, step - LEVEL_BURNIN)] = d;
            out[(1, step - LEVEL_BURNIN)] = p;
        }
    }
    SeriesData::new(vec![D, P], out)
}

/// The five estimators of the bank (rows of the validity table).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorRow {
    Row1,
    Row2,
    Row3,
    Row4,
    Row5,
}

impl EstimatorRow {
    pub const ALL: [EstimatorRow; 5] = [EstimatorRow::Row1, EstimatorRow::Row2, EstimatorRow::Row3, EstimatorRow::Row4, EstimatorRow::Row5];

    /// `R` and `C` relative to the target `D_0`. Free parameters: wind lag 1
    /// and multiplier 3 for row 3, wind lag 2 and multiplier 2 for row 4, wind
    /// lag 4 for row 5.
    pub fn sets(self) -> (Vec<Vertex>, Vec<Vertex>) {
        match self {
            EstimatorRow::Row1 => (vec![P.at(-1), P.at(-2)], vec![P.at(0), D.at(-1)]),
            EstimatorRow::Row2 => (vec![P.at(-1), P.at(-2)], vec![P.at(-1), P.at(0)]),
            EstimatorRow::Row3 => (vec![P.at(-1), P.at(-2), P.at(-3)], vec![P.at(-1), P.at(0), D.at(-1)]),
            EstimatorRow::Row4 => (vec![P.at(-1), P.at(-3), P.at(-4)], vec![P.at(0), D.at(1), P.at(1)]),
            EstimatorRow::Row5 => {
                (vec![P.at(-1), P.at(-2), P.at(-3), P.at(-4), P.at(-5)], vec![P.at(-1), D.at(-1), P.at(0), D.at(2), P.at(2)])
            }
        }
    }

    /// Whether the estimator is valid for a model.
    pub fn valid_for(self, v: ModelVariant) -> bool {
        use ModelVariant::*;
        matches!(
            (self, v),
            (EstimatorRow::Row1, Model1)
                | (EstimatorRow::Row2, Model3)
                | (EstimatorRow::Row3, Model1 | Model3)
                | (EstimatorRow::Row4, Model2)
                | (EstimatorRow::Row5, _)
        )
    }

    /// The spec of this row against the lag structure of `model`.
    pub fn spec(self, model: &ElectricityModel) -> Result<EstimatorSpec> {
        let g = model.linearized()?.graph().clone();
        let (r, c) = self.sets();
        let candidates: VertexSet = [P.at(0), P.at(-1), D.at(-1)].into_iter().collect();
        EstimatorSpec::from_sets(&g, D.at(0), r, c, &candidates, format!("estimator bank {self}"))
    }
}

impl fmt::Display for EstimatorRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row{}", *self as usize + 1)
    }
}

impl FromStr for EstimatorRow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().trim_start_matches("row").trim() {
            "1" => Ok(EstimatorRow::Row1),
            "2" => Ok(EstimatorRow::Row2),
            "3" => Ok(EstimatorRow::Row3),
            "4" => Ok(EstimatorRow::Row4),
            "5" => Ok(EstimatorRow::Row5),
            _ => Err(Error::Format(format!("unknown estimator row '{s}' (expected 1..5)"))),
        }
    }
}

/// Population value of a row's estimate of `β^P` under a model (exact
/// covariances of the linearized system).
pub fn population_estimate(model: &ElectricityModel, row: EstimatorRow) -> Result<f64> {
    let params = model.linearized()?;
    let spec = row.spec(model)?;
    let table = exact_autocov(&params, spec.max_lag_span() as usize)?;
    let est = solve_effects(&build_system(&table, &spec)?, Provenance::Exact)?;
    est.by_key(PRICE_EFFECT_KEY).ok_or_else(|| Error::Precondition("price column missing from spec".into()))
}

/// One cell of the population validity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCell {
    pub row: EstimatorRow,
    pub model: ModelVariant,
    pub marked_valid: bool,
    /// Population estimate, or the error message when the system is singular.
    pub estimate: std::result::Result<f64, String>,
    pub truth: f64,
}

impl ValidityCell {
    pub fn bias(&self) -> Option<f64> {
        self.estimate.as_ref().ok().map(|e| (e - self.truth).abs())
    }
}

/// Evaluate every (row, model) pair with the default parameters and `wind`.
pub fn validity_table(wind: &WindProcess) -> Vec<ValidityCell> {
    let mut out = Vec::new();
    for row in EstimatorRow::ALL {
        for v in ModelVariant::ALL {
            let model = ElectricityModel::new(v).with_wind(wind.clone());
            out.push(ValidityCell {
                row,
                model: v,
                marked_valid: row.valid_for(v),
                estimate: population_estimate(&model, row).map_err(|e| e.to_string()),
                truth: model.beta_p,
            });
        }
    }
    out
}

/// Result of [`electricity_semisynth`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiSynthReport {
    pub model: ModelVariant,
    pub row: EstimatorRow,
    #[serde(rename = "T")]
    pub t: usize,
    pub truth: f64,
    /// Successful repetition estimates in repetition order.
    pub estimates: Vec<f64>,
    pub failures: usize,
    pub quantiles: QuantileSummary,
}

/// Repeated-simulation study: `repetitions` independent series of length
/// `t_len` (repetition `i` uses seed `derive_seed(seed, [i])`), each demeaned
/// and estimated with the row's spec; reports 2.5%/97.5% quantiles.
pub fn electricity_semisynth(
    model: &ElectricityModel,
    row: EstimatorRow,
    t_len: usize,
    repetitions: usize,
    seed: u64,
) -> Result<SemiSynthReport> {
    let spec = row.spec(model)?;
    let runs: Vec<Option<f64>> = (0..repetitions)
        .into_par_iter()
        .map(|i| {
            let data = simulate_levels(model, t_len, derive_seed(seed, &[i as u64]))?;
            Ok(estimate_from_data(&data, &spec, true).ok().and_then(|e| e.by_key(PRICE_EFFECT_KEY)))
        })
        .collect::<Result<_>>()?;
    let failures = runs.iter().filter(|r| r.is_none()).count();
    let estimates: Vec<f64> = runs.into_iter().flatten().collect();
    Ok(SemiSynthReport {
        model: model.variant,
        row,
        t: t_len,
        truth: model.beta_p,
        quantiles: QuantileSummary::of(&estimates),
        estimates,
        failures,
    })
}
