// SPDX-License-Identifier: MIT
//! SVAR parameters, stability, simulation and autocovariances.
//!
//! The process is `S_t = A⁽⁰⁾S_t + A⁽¹⁾S_{t−1} + … + A⁽ᵖ⁾S_{t−p} + ε_t` with
//! independent noise of diagonal covariance `Σ`. Its reduced form
//! `S_t = B⁽¹⁾S_{t−1} + … + B⁽ᵖ⁾S_{t−p} + B⁽⁰⁾ε_t` with `B⁽⁰⁾ = (I − A⁽⁰⁾)⁻¹`
//! and `B⁽ʰ⁾ = B⁽⁰⁾A⁽ʰ⁾` drives the companion matrix, the exact
//! autocovariance solver and the simulator.
//!
//! Autocovariances follow the convention `Γ(h) = E[S_t S_{t−h}ᵀ]`, so
//! `Γ(−h) = Γ(h)ᵀ` and `Cov(S^i_{t₁}, S^j_{t₂}) = Γ(t₁ − t₂)_{ij}`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LagStructure, SeriesId, Vertex, VertexSet};
use crate::scalar::Real;

/// Dense companion-form size up to which the Lyapunov equation is solved
/// through the Kronecker/vec identity; larger systems use doubling.
pub const DENSE_LYAPUNOV_MAX_DIM: usize = 40;

/// Coefficient matrices `A⁽⁰⁾..A⁽ᵖ⁾` and noise variances of an SVAR process
/// whose sparsity follows a [`LagStructure`].
#[derive(Debug, Clone, PartialEq)]
pub struct SvarParams<T: Real> {
    graph: LagStructure,
    coeffs: Vec<DMatrix<T>>,
    noise_var: DVector<T>,
}

/// Serialized form of [`SvarParams`]: coefficient matrices keyed by lag as
/// row-major nested arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub graph: LagStructure,
    pub coeffs: BTreeMap<String, Vec<Vec<f64>>>,
    pub noise_var: Vec<f64>,
}

impl<T: Real> SvarParams<T> {
    /// Build parameters and check that the coefficient support matches the
    /// declared edges exactly.
    pub fn new(graph: LagStructure, coeffs: Vec<DMatrix<T>>, noise_var: DVector<T>) -> Result<Self> {
        let d = graph.d();
        let p = graph.order() as usize;
        if coeffs.len() != p + 1 {
            return Err(Error::InvalidParams(format!("expected {} coefficient matrices, got {}", p + 1, coeffs.len())));
        }
        if noise_var.len() != d {
            return Err(Error::InvalidParams(format!("expected {d} noise variances, got {}", noise_var.len())));
        }
        if noise_var.iter().any(|v| *v < T::zero() || !v.is_finite()) {
            return Err(Error::InvalidParams("noise variances must be finite and nonnegative".into()));
        }
        for (h, a) in coeffs.iter().enumerate() {
            if a.nrows() != d || a.ncols() != d {
                return Err(Error::InvalidParams(format!("A[{h}] must be {d}x{d}")));
            }
            for j in 0..d {
                for k in 0..d {
                    let declared = graph.has_edge(graph.series_at(j), graph.series_at(k), h as i64);
                    let v = a[(j, k)];
                    if !v.is_finite() {
                        return Err(Error::InvalidParams(format!("A[{h}][{j}][{k}] is not finite")));
                    }
                    if declared && v == T::zero() {
                        return Err(Error::InvalidParams(format!(
                            "declared edge {} -> {} at lag {h} has a zero coefficient",
                            graph.series_at(k),
                            graph.series_at(j)
                        )));
                    }
                    if !declared && v != T::zero() {
                        return Err(Error::InvalidParams(format!(
                            "undeclared edge {} -> {} at lag {h} has a nonzero coefficient",
                            graph.series_at(k),
                            graph.series_at(j)
                        )));
                    }
                }
            }
        }
        Ok(SvarParams { graph, coeffs, noise_var })
    }

    /// Build parameters from one value per declared edge, given in the order of
    /// [`edge_list`] (target, source, lag).
    pub fn from_edge_values(graph: LagStructure, values: &[T], noise_var: DVector<T>) -> Result<Self> {
        let edges = edge_list(&graph);
        if edges.len() != values.len() {
            return Err(Error::InvalidParams(format!("expected {} edge values, got {}", edges.len(), values.len())));
        }
        let d = graph.d();
        let mut coeffs = vec![DMatrix::zeros(d, d); graph.order() as usize + 1];
        for (&(target, source, h), &v) in edges.iter().zip(values) {
            coeffs[h as usize][(graph.index(target), graph.index(source))] = v;
        }
        Self::new(graph, coeffs, noise_var)
    }

    pub fn graph(&self) -> &LagStructure {
        &self.graph
    }

    /// `A⁽ʰ⁾` for `h ∈ 0..=p`.
    pub fn coeffs(&self) -> &[DMatrix<T>] {
        &self.coeffs
    }

    /// Diagonal of `Σ`.
    pub fn noise_var(&self) -> &DVector<T> {
        &self.noise_var
    }

    /// Coefficient of the edge `source_{t−lag} → target_t` (zero if undeclared).
    pub fn coefficient(&self, target: SeriesId, source: SeriesId, lag: i64) -> T {
        if lag < 0 || lag > self.graph.order() {
            return T::zero();
        }
        self.coeffs[lag as usize][(self.graph.index(target), self.graph.index(source))]
    }

    /// Coefficient of the edge `from → to` between two vertices (zero if absent).
    pub fn edge_coefficient(&self, from: Vertex, to: Vertex) -> T {
        self.coefficient(to.series, from.series, to.time - from.time)
    }

    /// Multiply every noise variance by `c`.
    pub fn scale_noise(&self, c: T) -> Self {
        SvarParams { graph: self.graph.clone(), coeffs: self.coeffs.clone(), noise_var: self.noise_var.scale(c) }
    }

    /// Convert to the serialized form.
    pub fn to_file(&self) -> ParamsFile {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(h, a)| {
                let rows = (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)].as_f64()).collect()).collect();
                (h.to_string(), rows)
            })
            .collect();
        ParamsFile { graph: self.graph.clone(), coeffs, noise_var: self.noise_var.iter().map(|v| v.as_f64()).collect() }
    }

    /// Build from the serialized form. Missing lags are treated as zero matrices.
    pub fn from_file(f: ParamsFile) -> Result<Self> {
        let d = f.graph.d();
        let p = f.graph.order() as usize;
        let mut coeffs = vec![DMatrix::zeros(d, d); p + 1];
        for (key, rows) in &f.coeffs {
            let h: usize = key.parse().map_err(|_| Error::Format(format!("bad lag key '{key}'")))?;
            if h > p {
                return Err(Error::InvalidParams(format!("lag {h} exceeds order {p}")));
            }
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidParams(format!("A[{h}] must be {d}x{d}")));
            }
            for (i, r) in rows.iter().enumerate() {
                for (j, v) in r.iter().enumerate() {
                    coeffs[h][(i, j)] = T::of(*v);
                }
            }
        }
        let noise = DVector::from_iterator(f.noise_var.len(), f.noise_var.iter().map(|v| T::of(*v)));
        Self::new(f.graph, coeffs, noise)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("parameters serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }
}

/// Declared edges as `(target, source, lag)` triples in a fixed order
/// (ordered by target, source, lag).
pub fn edge_list(graph: &LagStructure) -> Vec<(SeriesId, SeriesId, i64)> {
    graph.edge_specs().into_iter().flat_map(|e| e.lags.into_iter().map(move |h| (e.target, e.source, h))).collect()
}

/// Reduced-form matrices and the companion matrix of a process.
#[derive(Debug, Clone)]
pub struct CompanionForm<T: Real> {
    /// `(d·p) × (d·p)` companion matrix: top block row `B⁽¹⁾..B⁽ᵖ⁾`, identities below.
    pub big_b: DMatrix<T>,
    /// `B⁽⁰⁾ = (I − A⁽⁰⁾)⁻¹` at index 0 and `B⁽ʰ⁾ = B⁽⁰⁾A⁽ʰ⁾` at index `h`.
    pub reduced: Vec<DMatrix<T>>,
}

impl<T: Real> CompanionForm<T> {
    pub fn new(params: &SvarParams<T>) -> Result<Self> {
        let d = params.graph.d();
        let p = params.graph.order() as usize;
        let b0 = (DMatrix::<T>::identity(d, d) - &params.coeffs[0])
            .try_inverse()
            .ok_or_else(|| Error::InvalidParams("I − A⁽⁰⁾ is singular".into()))?;
        let mut reduced = vec![b0.clone()];
        for h in 1..=p {
            reduced.push(&b0 * &params.coeffs[h]);
        }
        let n = d * p;
        let mut big_b = DMatrix::zeros(n, n);
        for (h, block) in reduced.iter().enumerate().skip(1) {
            big_b.view_mut((0, (h - 1) * d), (d, d)).copy_from(block);
        }
        for i in d..n {
            big_b[(i, i - d)] = T::one();
        }
        Ok(CompanionForm { big_b, reduced })
    }
}

/// Largest eigenvalue modulus of the companion matrix. The process is stable
/// iff this is below one.
pub fn spectral_margin<T: Real>(params: &SvarParams<T>) -> Result<T> {
    let comp = CompanionForm::new(params)?;
    if comp.big_b.nrows() == 0 {
        return Ok(T::zero());
    }
    Ok(comp.big_b.complex_eigenvalues().iter().map(|z| (z.re * z.re + z.im * z.im).sqrt()).fold(T::zero(), |a, b| a.max(b)))
}

/// Time-indexed data: one row per series, one column per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData<T: Real> {
    pub series: Vec<SeriesId>,
    pub values: DMatrix<T>,
}

impl<T: Real> SeriesData<T> {
    pub fn new(series: Vec<SeriesId>, values: DMatrix<T>) -> Result<Self> {
        if series.len() != values.nrows() {
            return Err(Error::Format(format!("{} series names for {} rows", series.len(), values.nrows())));
        }
        let mut sorted = series.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != series.len() {
            return Err(Error::Format("duplicate series names".into()));
        }
        Ok(SeriesData { series, values })
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    /// Row holding a series.
    pub fn row_of(&self, s: SeriesId) -> Option<usize> {
        self.series.iter().position(|x| *x == s)
    }

    /// Keep only the listed series (in the given order).
    pub fn select(&self, keep: &[SeriesId]) -> Result<Self> {
        let rows: Vec<usize> = keep
            .iter()
            .map(|s| self.row_of(*s).ok_or_else(|| Error::Format(format!("series {s} missing from data"))))
            .collect::<Result<_>>()?;
        let values = DMatrix::from_fn(rows.len(), self.len(), |i, j| self.values[(rows[i], j)]);
        SeriesData::new(keep.to_vec(), values)
    }

    /// CSV with a header of series names and one row per time step.
    pub fn to_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(self.series.iter().map(|s| s.to_string()))?;
        for t in 0..self.len() {
            wr.write_record(self.values.column(t).iter().map(|v| format!("{:e}", v.as_f64())))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Parse the CSV layout written by [`SeriesData::to_csv`]. Columns whose
    /// header is not a series name (e.g. a time index) are ignored.
    pub fn from_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        let cols: Vec<(usize, SeriesId)> =
            headers.iter().enumerate().filter_map(|(i, h)| h.parse::<SeriesId>().ok().map(|s| (i, s))).collect();
        if cols.is_empty() {
            return Err(Error::Format("no series columns (U1.., O1.., Y) in CSV header".into()));
        }
        let mut buf: Vec<T> = Vec::new();
        let mut n = 0;
        for rec in rd.records() {
            let rec = rec?;
            for &(i, _) in &cols {
                let field = rec.get(i).ok_or_else(|| Error::Format(format!("short CSV row {}", n + 1)))?;
                let v: f64 =
                    field.trim().parse().map_err(|_| Error::Format(format!("non-numeric CSV value '{field}' in row {}", n + 1)))?;
                buf.push(T::of(v));
            }
            n += 1;
        }
        let values = DMatrix::from_column_slice(cols.len(), n, &buf);
        SeriesData::new(cols.into_iter().map(|(_, s)| s).collect(), values)
    }
}

/// Simulate `t_len` steps after discarding `burnin` steps, with Gaussian noise.
/// Deterministic given `seed`.
pub fn simulate<T: Real>(params: &SvarParams<T>, t_len: usize, burnin: usize, seed: u64) -> Result<SeriesData<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_noise(params, t_len, burnin, &mut rng, |r| StandardNormal.sample(r))
}

/// Simulate with an arbitrary unit-variance i.i.d. noise sampler; each draw is
/// scaled by the noise standard deviation of its series.
///
/// The process starts from zero; each step draws the noise for all series in
/// state order and then solves the contemporaneous equations in a topological
/// order of the lag-0 edges.
pub fn simulate_with_noise<T, R, F>(
    params: &SvarParams<T>,
    t_len: usize,
    burnin: usize,
    rng: &mut R,
    mut unit_noise: F,
) -> Result<SeriesData<T>>
where
    T: Real,
    R: rand::Rng,
    F: FnMut(&mut R) -> f64,
{
    let margin = spectral_margin(params)?;
    if margin >= T::one() {
        return Err(Error::Unstable(margin.as_f64()));
    }
    let g = &params.graph;
    let d = g.d();
    let p = g.order() as usize;
    let sd: Vec<T> = params.noise_var.iter().map(|v| v.sqrt()).collect();
    // Per target: (source row, lag, coefficient).
    let terms: Vec<Vec<(usize, usize, T)>> = (0..d)
        .map(|j| {
            let s = g.series_at(j);
            g.incoming(s).iter().map(|&(src, h)| (g.index(src), h as usize, params.coefficient(s, src, h))).collect()
        })
        .collect();
    let order: Vec<usize> = g.topological_order().iter().map(|s| g.index(*s)).collect();

    let total = burnin + t_len;
    let ring = p + 1;
    let mut hist = DMatrix::<T>::zeros(d, ring);
    let mut out = DMatrix::<T>::zeros(d, t_len);
    let mut eps = vec![T::zero(); d];
    for step in 0..total {
        let col = step % ring;
        for (j, e) in eps.iter_mut().enumerate() {
            *e = T::of(unit_noise(rng)) * sd[j];
        }
        for &j in &order {
            let mut v = eps[j];
            for &(k, h, a) in &terms[j] {
                if h <= step {
                    v += a * hist[(k, (step - h) % ring)];
                }
            }
            hist[(j, col)] = v;
        }
        if step >= burnin {
            out.set_column(step - burnin, &hist.column(col));
        }
    }
    SeriesData::new(g.series(), out)
}

/// Uniform access to covariances between vertices, whether exact or estimated.
pub trait CovarianceProvider<T: Real> {
    /// `Cov(a, b)`.
    fn cov(&self, a: Vertex, b: Vertex) -> Result<T>;
    /// Largest lag available.
    fn max_lag(&self) -> usize;
}

/// Autocovariance matrices `Γ(0..=h_max)` over a list of series.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTable<T: Real> {
    /// Series indexing the rows/columns of every matrix.
    pub series: Vec<SeriesId>,
    /// `gamma[h] = Γ(h) = E[S_t S_{t−h}ᵀ]`.
    pub gamma: Vec<DMatrix<T>>,
    /// Population (`true`) or sample (`false`) covariances.
    pub exact: bool,
    /// Series length the sample covariances were computed from.
    pub sample_len: Option<usize>,
}

impl<T: Real> CovarianceTable<T> {
    pub fn h_max(&self) -> usize {
        self.gamma.len().saturating_sub(1)
    }

    /// `Γ(h)` for any integer lag, using `Γ(−h) = Γ(h)ᵀ`.
    pub fn at_lag(&self, h: i64) -> Result<DMatrix<T>> {
        let a = h.unsigned_abs() as usize;
        let g = self.gamma.get(a).ok_or(Error::LagOutOfRange { lag: h, max: self.h_max() })?;
        Ok(if h >= 0 { g.clone() } else { g.transpose() })
    }

    fn pos(&self, s: SeriesId) -> Result<usize> {
        self.series
            .iter()
            .position(|x| *x == s)
            .ok_or_else(|| Error::Precondition(format!("series {s} not covered by the covariance table")))
    }
}

impl<T: Real> CovarianceProvider<T> for CovarianceTable<T> {
    fn cov(&self, a: Vertex, b: Vertex) -> Result<T> {
        let (i, j) = (self.pos(a.series)?, self.pos(b.series)?);
        let h = a.time - b.time;
        let m = self.gamma.get(h.unsigned_abs() as usize).ok_or(Error::LagOutOfRange { lag: h, max: self.h_max() })?;
        Ok(if h >= 0 { m[(i, j)] } else { m[(j, i)] })
    }

    fn max_lag(&self) -> usize {
        self.h_max()
    }
}

/// Solve `X = B X Bᵀ + Q` for the stationary companion covariance.
fn solve_discrete_lyapunov<T: Real>(b: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = b.nrows();
    let x = if n <= DENSE_LYAPUNOV_MAX_DIM {
        // vec(B X Bᵀ) = (B ⊗ B) vec(X) for column-major vec.
        let kron = b.kronecker(b);
        let lhs = DMatrix::<T>::identity(n * n, n * n) - kron;
        let rhs = DVector::from_column_slice(q.as_slice());
        let lu = lhs.lu();
        let sol = lu.solve(&rhs).ok_or(Error::Singular(f64::INFINITY))?;
        DMatrix::from_column_slice(n, n, sol.as_slice())
    } else {
        // Doubling: X_{k+1} = X_k + A_k X_k A_kᵀ, A_{k+1} = A_k².
        let mut x = q.clone();
        let mut a = b.clone();
        let tol = T::of(1e-15);
        let mut converged = false;
        for _ in 0..128 {
            let inc = &a * &x * a.transpose();
            x += &inc;
            a = &a * &a;
            if inc.norm() <= tol * x.norm().max(T::one()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Unstable(f64::NAN));
        }
        x
    };
    Ok((&x + x.transpose()) * T::of(0.5))
}

/// Exact autocovariances `Γ(0..=h_max)` of a stable process.
///
/// The companion covariance solves the discrete Lyapunov equation
/// `Γ̃ = 𝐁Γ̃𝐁ᵀ + Σ̃`, with `Σ̃` holding `B⁽⁰⁾ΣB⁽⁰⁾ᵀ` in its upper-left block;
/// its first block row is `Γ(0..p−1)`. Larger lags follow the Yule–Walker
/// recursion `Γ(h) = Σₖ B⁽ᵏ⁾Γ(h−k)`.
pub fn exact_autocov<T: Real>(params: &SvarParams<T>, h_max: usize) -> Result<CovarianceTable<T>> {
    let margin = spectral_margin(params)?;
    if margin >= T::one() {
        return Err(Error::Unstable(margin.as_f64()));
    }
    let comp = CompanionForm::new(params)?;
    let d = params.graph.d();
    let p = params.graph.order() as usize;
    let b0 = &comp.reduced[0];
    let sigma = DMatrix::from_diagonal(&params.noise_var);
    let innov = b0 * sigma * b0.transpose();

    let mut gamma: Vec<DMatrix<T>> = Vec::with_capacity(h_max + 1);
    if p == 0 {
        gamma.push(innov);
        gamma.extend((1..=h_max).map(|_| DMatrix::zeros(d, d)));
    } else {
        let n = d * p;
        let mut q = DMatrix::zeros(n, n);
        q.view_mut((0, 0), (d, d)).copy_from(&innov);
        let x = solve_discrete_lyapunov(&comp.big_b, &q)?;
        for h in 0..p.min(h_max + 1) {
            gamma.push(x.view((0, h * d), (d, d)).into_owned());
        }
        for h in p..=h_max {
            let mut g = DMatrix::zeros(d, d);
            for k in 1..=p {
                g += &comp.reduced[k] * &gamma[h - k];
            }
            gamma.push(g);
        }
    }
    Ok(CovarianceTable { series: params.graph.series(), gamma, exact: true, sample_len: None })
}

/// The sample autocovariance `(1/(T−h)) Σ_{j=h+1}^{T} S_{j−h} S_jᵀ`; entry
/// `(a, b)` estimates `Cov(S^a_{t−h}, S^b_t)`. With `demean` the series means
/// are subtracted first.
pub fn sample_autocov<T: Real>(data: &DMatrix<T>, h: usize, demean: bool) -> Result<DMatrix<T>> {
    let t_len = data.ncols();
    if h >= t_len {
        return Err(Error::InsufficientData(format!("lag {h} needs more than {t_len} observations")));
    }
    let centered;
    let x = if demean {
        let means = data.column_mean();
        let mut c = data.clone();
        for mut col in c.column_iter_mut() {
            col -= &means;
        }
        centered = c;
        &centered
    } else {
        data
    };
    let n = t_len - h;
    let early = x.columns(0, n);
    let late = x.columns(h, n);
    Ok(early * late.transpose() / T::of(n as f64))
}

/// Sample covariance table `Γ̂(0..=h_max)` over the series of `data`.
pub fn sample_cov_table<T: Real>(data: &SeriesData<T>, h_max: usize, demean: bool) -> Result<CovarianceTable<T>> {
    let mut gamma = Vec::with_capacity(h_max + 1);
    let centered;
    let x = if demean {
        let means = data.values.column_mean();
        let mut c = data.values.clone();
        for mut col in c.column_iter_mut() {
            col -= &means;
        }
        centered = c;
        &centered
    } else {
        &data.values
    };
    for h in 0..=h_max {
        // Γ̂(h) estimates E[S_t S_{t−h}ᵀ], the transpose of the lag-h estimator.
        gamma.push(sample_autocov(x, h, false)?.transpose());
    }
    Ok(CovarianceTable { series: data.series.clone(), gamma, exact: false, sample_len: Some(data.len()) })
}

/// Total directed-path weights `W(x → target)` for every vertex `x` at time
/// `≥ floor`, memoised by vertex.
fn path_weights<T: Real>(params: &SvarParams<T>, target: Vertex, floor: i64) -> BTreeMap<(i64, usize), (Vertex, T)> {
    let g = &params.graph;
    let topo_pos: Vec<usize> = {
        let mut pos = vec![0; g.d()];
        for (i, s) in g.topological_order().iter().enumerate() {
            pos[g.index(*s)] = i;
        }
        pos
    };
    let key = |v: Vertex| (v.time, topo_pos[g.index(v.series)]);
    let mut pending: BTreeMap<(i64, usize), (Vertex, T)> = BTreeMap::new();
    let mut done: BTreeMap<(i64, usize), (Vertex, T)> = BTreeMap::new();
    pending.insert(key(target), (target, T::one()));
    // Children of a vertex are later in time or later in topological order, so
    // popping the largest key finalises each weight before it is propagated.
    while let Some((k, (v, w))) = pending.pop_last() {
        for &(src, h) in g.incoming(v.series) {
            let u = src.at(v.time - h);
            if u.time < floor {
                continue;
            }
            let a = params.coefficient(v.series, src, h);
            pending.entry(key(u)).or_insert((u, T::zero())).1 += a * w;
        }
        done.insert(k, (v, w));
    }
    done
}

/// Sum of trek monomials between `v1` and `v2` over all treks whose top lies no
/// earlier than `min(t(v1), t(v2)) − depth`.
///
/// Every such trek factors into its top `x`, a directed path `x → v1` and a
/// directed path `x → v2`, so the sum equals `Σ_x σ²_x · W(x→v1) · W(x→v2)`.
pub fn trek_sum_truncated<T: Real>(params: &SvarParams<T>, v1: Vertex, v2: Vertex, depth: i64) -> Result<T> {
    let floor = v1.time.min(v2.time) - depth.max(0);
    let w1 = path_weights(params, v1, floor);
    let w2 = path_weights(params, v2, floor);
    let g = &params.graph;
    let mut total = T::zero();
    for (k, (x, a)) in &w1 {
        if let Some((_, b)) = w2.get(k) {
            total += params.noise_var[g.index(x.series)] * *a * *b;
        }
    }
    Ok(total)
}

/// `|Γ_{ab} − Σ_{q ∈ pa(b) ∪ extra} A_{b←q} Γ_{aq}|`, which vanishes whenever
/// `a` is not a descendant of `b`. Members of `extra` that are not parents of
/// `b` enter with coefficient zero.
pub fn parent_decomposition_residual<T: Real, P: CovarianceProvider<T>>(
    params: &SvarParams<T>,
    a: Vertex,
    b: Vertex,
    cov: &P,
    extra: &VertexSet,
) -> Result<T> {
    if params.graph.is_descendant(b, a) {
        return Err(Error::Precondition(format!("{a} is a descendant of {b}")));
    }
    let mut parents = params.graph.parents(b, crate::graph::KindFilter::All);
    parents.extend(extra.iter().copied());
    let mut acc = cov.cov(a, b)?;
    for q in parents {
        let c = params.edge_coefficient(q, b);
        if c != T::zero() {
            acc -= c * cov.cov(a, q)?;
        }
    }
    Ok(acc.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::KindFilter;
    use approx::assert_relative_eq;

    const U: SeriesId = SeriesId::Latent(0);
    const Y: SeriesId = SeriesId::Y;

    fn ar1(a: f64, var: f64) -> SvarParams<f64> {
        let g = LagStructure::new(0, 1, [(Y, Y, vec![1])]).unwrap();
        SvarParams::from_edge_values(g, &[a], DVector::from_element(1, var)).unwrap()
    }

    fn confounded_ar3(u: f64, y: f64, yu: f64) -> SvarParams<f64> {
        let g = LagStructure::new(1, 1, [(U, U, vec![1]), (Y, Y, vec![3]), (Y, U, vec![1])]).unwrap();
        // edge order: (U,U,1), (Y,U,1), (Y,Y,3)
        SvarParams::from_edge_values(g, &[u, yu, y], DVector::from_element(2, 1.0)).unwrap()
    }

    #[test]
    fn support_is_enforced() {
        let g = LagStructure::new(0, 1, [(Y, Y, vec![1])]).unwrap();
        let zero = vec![DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)];
        assert!(SvarParams::new(g.clone(), zero, DVector::from_element(1, 1.0)).is_err());
        let extra = vec![DMatrix::from_element(1, 1, 0.1), DMatrix::from_element(1, 1, 0.5)];
        assert!(SvarParams::new(g, extra, DVector::from_element(1, 1.0)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = confounded_ar3(0.5, 0.3, -0.7);
        let back = SvarParams::<f64>::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn margins_of_reference_processes() {
        assert_eq!(spectral_margin(&ar1(0.5, 1.0)).unwrap(), 0.5);
        let g = LagStructure::new(0, 2, []).unwrap();
        let zero = SvarParams::new(g, vec![DMatrix::zeros(2, 2)], DVector::from_element(2, 1.0)).unwrap();
        assert_eq!(spectral_margin(&zero).unwrap(), 0.0);
    }

    #[test]
    fn unstable_counterexample() {
        let o2 = SeriesId::Observed(1);
        let g = LagStructure::new(0, 2, [(Y, Y, vec![1]), (Y, o2, vec![1])]).unwrap();
        let a1 = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.0]);
        let p = SvarParams::new(g, vec![DMatrix::zeros(2, 2), a1], DVector::from_element(2, 1.0)).unwrap();
        assert_relative_eq!(spectral_margin(&p).unwrap(), 2.0, epsilon = 1e-12);
        assert!(matches!(simulate(&p, 10, 0, 1), Err(Error::Unstable(_))));
        assert!(matches!(exact_autocov(&p, 3), Err(Error::Unstable(_))));
    }

    #[test]
    fn ar1_exact_autocovariance() {
        let cov = exact_autocov(&ar1(0.5, 1.0), 6).unwrap();
        for h in 0..=6 {
            assert_relative_eq!(cov.gamma[h][(0, 0)], 4.0 / 3.0 * 0.5f64.powi(h as i32), epsilon = 1e-12);
        }
    }

    #[test]
    fn lyapunov_routes_agree() {
        // A process of order 7 with d = 6 forces the doubling route (dp = 42);
        // compare with the dense route on a truncated covariance check.
        let s: Vec<SeriesId> = (0..6).map(SeriesId::Observed).collect();
        let mut edges = vec![];
        for i in 0..6 {
            edges.push((s[i], s[i], vec![1, 7]));
            if i > 0 {
                edges.push((s[i], s[i - 1], vec![0, 2]));
            }
        }
        let g = LagStructure::new(0, 6, edges).unwrap();
        let vals: Vec<f64> = (0..g.edge_count()).map(|i| if i % 2 == 0 { 0.2 } else { -0.15 }).collect();
        let p = SvarParams::from_edge_values(g, &vals, DVector::from_element(6, 1.0)).unwrap();
        let comp = CompanionForm::new(&p).unwrap();
        assert!(comp.big_b.nrows() > DENSE_LYAPUNOV_MAX_DIM);
        let cov = exact_autocov(&p, 10).unwrap();
        // Lyapunov identity on the companion form.
        let n = comp.big_b.nrows();
        let d = 6;
        let mut x = DMatrix::zeros(n, n);
        for i in 0..7 {
            for j in 0..7 {
                let blk = cov.at_lag(j as i64 - i as i64).unwrap();
                x.view_mut((i * d, j * d), (d, d)).copy_from(&blk);
            }
        }
        let b0 = &comp.reduced[0];
        let mut q = DMatrix::zeros(n, n);
        q.view_mut((0, 0), (d, d)).copy_from(&(b0 * b0.transpose()));
        let resid = &x - &comp.big_b * &x * comp.big_b.transpose() - q;
        assert!(resid.amax() < 1e-9, "residual {}", resid.amax());
    }

    #[test]
    fn yule_walker_residuals_vanish() {
        let p = confounded_ar3(0.6, 0.4, 0.8);
        let cov = exact_autocov(&p, 12).unwrap();
        let comp = CompanionForm::new(&p).unwrap();
        for h in 1..=12i64 {
            let mut rhs = DMatrix::zeros(2, 2);
            for k in 1..=3 {
                rhs += &comp.reduced[k] * cov.at_lag(h - k as i64).unwrap();
            }
            assert!((cov.at_lag(h).unwrap() - rhs).amax() < 1e-10);
        }
        let g0 = &cov.gamma[0];
        assert!((g0 - g0.transpose()).amax() < 1e-12);
    }

    #[test]
    fn simulation_is_deterministic_and_empty_when_requested() {
        let p = confounded_ar3(0.5, 0.3, 0.7);
        assert_eq!(simulate(&p, 200, 50, 9).unwrap(), simulate(&p, 200, 50, 9).unwrap());
        assert_ne!(simulate(&p, 200, 50, 9).unwrap(), simulate(&p, 200, 50, 10).unwrap());
        assert_eq!(simulate(&p, 0, 10, 1).unwrap().len(), 0);
    }

    #[test]
    fn ar1_sample_variance() {
        let data = simulate(&ar1(0.5, 1.0), 1_000_000, 1000, 42).unwrap();
        let v = sample_autocov(&data.values, 0, false).unwrap()[(0, 0)];
        assert!((v - 4.0 / 3.0).abs() < 0.02 * 4.0 / 3.0, "sample variance {v}");
    }

    #[test]
    fn sample_autocov_conventions() {
        let zeros = DMatrix::<f64>::zeros(2, 50);
        assert_eq!(sample_autocov(&zeros, 3, true).unwrap(), DMatrix::zeros(2, 2));
        assert!(sample_autocov(&zeros, 50, false).is_err());
        // Orientation: entry (a, b) pairs S^a at the earlier time with S^b later.
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 10.0, 20.0, 30.0]);
        let g1 = sample_autocov(&x, 1, false).unwrap();
        assert_relative_eq!(g1[(0, 1)], (1.0 * 20.0 + 2.0 * 30.0) / 2.0);
        assert_relative_eq!(g1[(1, 0)], (10.0 * 2.0 + 20.0 * 3.0) / 2.0);
    }

    #[test]
    fn iid_sample_covariance_near_identity() {
        let g = LagStructure::new(0, 3, []).unwrap();
        let p = SvarParams::new(g, vec![DMatrix::zeros(3, 3)], DVector::from_element(3, 1.0)).unwrap();
        let data = simulate(&p, 100_000, 0, 3).unwrap();
        let c = sample_autocov(&data.values, 0, true).unwrap();
        assert!((c - DMatrix::identity(3, 3)).amax() < 0.05);
    }

    #[test]
    fn trek_sums_on_ar1_are_geometric() {
        let p = ar1(0.6, 2.0);
        for depth in [0, 1, 5, 10] {
            let s = trek_sum_truncated(&p, Y.at(0), Y.at(0), depth).unwrap();
            let expect: f64 = (0..=depth).map(|m| 2.0 * 0.36f64.powi(m as i32)).sum();
            assert_relative_eq!(s, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn trek_sum_contains_expected_monomials_for_confounded_ar3() {
        // With A_UU = 0 and A_YY = 0 only the one-edge trek U_{t−1} → Y_t
        // remains between U_{t−1} and Y_t.
        let g = LagStructure::new(1, 1, [(Y, U, vec![1])]).unwrap();
        let p = SvarParams::from_edge_values(g, &[0.7], DVector::from_element(2, 1.5)).unwrap();
        assert_relative_eq!(trek_sum_truncated(&p, U.at(-1), Y.at(0), 5).unwrap(), 1.5 * 0.7);
        // The full graph converges to the exact covariance.
        let p = confounded_ar3(0.5, 0.4, 0.8);
        let cov = exact_autocov(&p, 10).unwrap();
        let exact = cov.cov(U.at(-1), Y.at(0)).unwrap();
        let s = trek_sum_truncated(&p, U.at(-1), Y.at(0), 60).unwrap();
        assert_relative_eq!(s, exact, epsilon = 1e-9);
        // No common ancestor at depth 0 between two unrelated i.i.d. series.
        let g = LagStructure::new(0, 2, []).unwrap();
        let q = SvarParams::new(g, vec![DMatrix::zeros(2, 2)], DVector::from_element(2, 1.0)).unwrap();
        assert_eq!(trek_sum_truncated(&q, Y.at(0), SeriesId::Observed(1).at(0), 0).unwrap(), 0.0);
    }

    #[test]
    fn parent_decomposition_on_confounded_ar3() {
        let p = confounded_ar3(0.5, 0.4, 0.8);
        let cov = exact_autocov(&p, 12).unwrap();
        let r = parent_decomposition_residual(&p, Y.at(-1), Y.at(0), &cov, &VertexSet::new()).unwrap();
        assert!(r < 1e-12);
        let extra = VertexSet::from([Y.at(-2), U.at(0)]);
        let r = parent_decomposition_residual(&p, Y.at(-1), Y.at(0), &cov, &extra).unwrap();
        assert!(r < 1e-12);
        assert!(parent_decomposition_residual(&p, Y.at(3), Y.at(0), &cov, &VertexSet::new()).is_err());
        assert_eq!(p.graph().parents(Y.at(0), KindFilter::All).len(), 2);
    }

    #[test]
    fn works_in_single_precision() {
        let g = LagStructure::new(0, 1, [(Y, Y, vec![1])]).unwrap();
        let p = SvarParams::<f32>::from_edge_values(g, &[0.5], DVector::from_element(1, 1.0)).unwrap();
        let cov = exact_autocov(&p, 2).unwrap();
        assert!((cov.gamma[0][(0, 0)] - 4.0 / 3.0).abs() < 1e-5);
    }
}
