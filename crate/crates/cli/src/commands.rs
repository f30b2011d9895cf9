// SPDX-License-Identifier: MIT
//! One function per subcommand. Each reads its inputs, calls into the
//! library and writes deterministic artifacts into the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use svarid::estimate::{block_bootstrap, build_system, estimate_from_data, solve_effects, Provenance, QuantileSummary};
use svarid::experiments::electricity::{electricity_semisynth, validity_table, ElectricityModel, EstimatorRow, ModelVariant, WindProcess};
use svarid::experiments::examples::{replicate_example, ExampleName};
use svarid::experiments::random::{convergence_study, draw_accepted_instances, AcceptanceStats, RandomGraphProtocol};
use svarid::experiments::{median, write_long_csv, ParamDrawConfig};
use svarid::graph::{LagStructure, SeriesId};
use svarid::identify::{default_delta_range, delta_sweep, select_spec, EstimatorSpec, SweepOptions};
use svarid::svar::{exact_autocov, simulate, SeriesData, SvarParams};
use svarid::{Error, Result};

use crate::args::{BootstrapArgs, ElectricityArgs, EstimateArgs, ExactCovArgs, ExampleArgs, IdentifyArgs, RandomArgs, SimulateArgs};
use crate::output::OutDir;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))
}

fn read_params(path: &Path) -> Result<SvarParams<f64>> {
    SvarParams::from_json(&read(path)?)
}

fn read_spec(path: &Path) -> Result<EstimatorSpec> {
    EstimatorSpec::from_json(&read(path)?)
}

fn read_data(path: &Path) -> Result<SeriesData<f64>> {
    let f = fs::File::open(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    SeriesData::from_csv(f)
}

pub fn simulate_cmd(a: &SimulateArgs, seed: u64, out: &mut OutDir) -> Result<()> {
    let params = read_params(&a.params)?;
    let data = simulate(&params, a.t_len, a.burnin, seed)?;
    data.to_csv(out.file("data.csv")?)
}

#[derive(Serialize)]
struct AutocovFile {
    series: Vec<String>,
    exact: bool,
    /// `gamma[h][i][j] = Cov(S^i_t, S^j_{t−h})`, row-major.
    gamma: BTreeMap<String, Vec<Vec<f64>>>,
}

pub fn exact_cov_cmd(a: &ExactCovArgs, out: &mut OutDir) -> Result<()> {
    let params = read_params(&a.params)?;
    let table = exact_autocov(&params, a.h_max)?;
    let gamma = table
        .gamma
        .iter()
        .enumerate()
        .map(|(h, m)| (h.to_string(), (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()))
        .collect();
    let file = AutocovFile { series: table.series.iter().map(ToString::to_string).collect(), exact: true, gamma };
    out.json("autocov.json", &file)
}

pub fn identify_cmd(a: &IdentifyArgs, out: &mut OutDir) -> Result<()> {
    let g = LagStructure::from_json(&read(&a.graph)?)?;
    let range = a.delta.clone().unwrap_or_else(|| default_delta_range(&g));
    let opts = SweepOptions { enumerate_paths: a.enumerate_paths, ..SweepOptions::default() };
    let results = delta_sweep(&g, range, SeriesId::Y.at(0), opts)?;
    out.json("sweep.json", &results)?;
    if let Some(best) = select_spec(&results) {
        out.json("spec.json", &best.spec)?;
        out.json("certificate.json", &best.certificate)?;
    }
    Ok(())
}

pub fn estimate_cmd(a: &EstimateArgs, out: &mut OutDir) -> Result<()> {
    let spec = read_spec(&a.spec)?;
    let est = match (&a.data, &a.params) {
        (Some(d), _) => estimate_from_data(&read_data(d)?, &spec, a.demean)?,
        (None, Some(p)) => {
            let params = read_params(p)?;
            let table = exact_autocov(&params, spec.max_lag_span() as usize)?;
            solve_effects(&build_system(&table, &spec)?, Provenance::Exact)?
        }
        (None, None) => return Err(Error::Format("either --data or --params is required".into())),
    };
    out.json("estimate.json", &est.report(&spec.target.to_string()))
}

#[derive(Serialize)]
struct BootstrapFile {
    keys: Vec<String>,
    point: Vec<f64>,
    quantiles: Vec<QuantileSummary>,
    replicates: usize,
    failures: usize,
    block_len: usize,
}

pub fn bootstrap_cmd(a: &BootstrapArgs, seed: u64, out: &mut OutDir) -> Result<()> {
    let spec = read_spec(&a.spec)?;
    let data = read_data(&a.data)?;
    let b = block_bootstrap(&data, &spec, a.block_len, a.reps, seed, a.demean)?;
    out.json(
        "bootstrap.json",
        &BootstrapFile {
            keys: b.keys.clone(),
            point: b.point.clone(),
            quantiles: b.quantiles.clone(),
            replicates: b.replicates.len(),
            failures: b.failures,
            block_len: b.block_len,
        },
    )?;
    b.replicates_csv(out.file("replicates.csv")?)
}

#[derive(Serialize)]
struct ThresholdCount {
    #[serde(rename = "T")]
    t: usize,
    above_one: usize,
    fraction_above_one: f64,
}

#[derive(Serialize)]
struct RandomSummary {
    protocol: RandomGraphProtocol,
    requested: usize,
    acceptance: AcceptanceStats,
    estimation_failures: usize,
    median_error_above_one: Vec<ThresholdCount>,
}

pub fn experiment_random_cmd(a: &RandomArgs, seed: u64, out: &mut OutDir) -> Result<()> {
    let mut protocol = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => RandomGraphProtocol::default(),
    };
    if let Some(n) = a.n_params {
        protocol.n_params = n;
    }
    let (instances, acceptance) = draw_accepted_instances(&protocol, a.n_graphs, a.max_draws, seed)?;
    let report = convergence_study(&instances, &a.t_grid, seed)?;
    write_long_csv(&report.rows, out.file("convergence.csv")?)?;
    report.medians_csv(out.file("medians.csv")?)?;
    let counts = a
        .t_grid
        .iter()
        .map(|&t| ThresholdCount { t, above_one: report.count_above(t, 1.0), fraction_above_one: report.fraction_above(t, 1.0) })
        .collect();
    out.json(
        "summary.json",
        &RandomSummary {
            protocol,
            requested: a.n_graphs,
            acceptance,
            estimation_failures: report.failures,
            median_error_above_one: counts,
        },
    )
}

#[derive(Serialize)]
struct ExampleSummaryRow {
    coefficient: String,
    #[serde(rename = "T")]
    t: usize,
    median_abs_error: f64,
    failures: usize,
}

pub fn replicate_example_cmd(a: &ExampleArgs, seed: u64, out: &mut OutDir) -> Result<()> {
    let name: ExampleName = a.example.parse()?;
    let rows = replicate_example(name, &a.t_grid, a.n_params, &ParamDrawConfig::default(), seed)?;
    write_long_csv(&rows, out.file("errors.csv")?)?;
    let mut groups: BTreeMap<(String, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for r in &rows {
        let g = groups.entry((r.coefficient.clone(), r.t)).or_default();
        match r.abs_error {
            Some(e) => g.0.push(e),
            None => g.1 += 1,
        }
    }
    let summary: Vec<ExampleSummaryRow> = groups
        .into_iter()
        .map(|((coefficient, t), (errs, failures))| ExampleSummaryRow { coefficient, t, median_abs_error: median(&errs), failures })
        .collect();
    out.json("summary.json", &summary)
}

#[derive(Serialize)]
struct SemiSynthFile<'a> {
    model: &'a ElectricityModel,
    row: EstimatorRow,
    #[serde(rename = "T")]
    t: usize,
    repetitions: usize,
    truth: f64,
    failures: usize,
    quantiles: QuantileSummary,
    contains_truth: bool,
}

pub fn electricity_cmd(a: &ElectricityArgs, seed: u64, out: &mut OutDir) -> Result<()> {
    let mut model = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => ElectricityModel::new(a.model.parse::<ModelVariant>()?),
    };
    if let Some(p) = &a.wind_csv {
        let f = fs::File::open(p).map_err(|e| Error::Format(format!("cannot read {}: {e}", p.display())))?;
        model.wind = WindProcess::from_coefficients_csv(f, a.wind_sd.unwrap_or(model.wind.sd))?;
    } else if let Some(sd) = a.wind_sd {
        model.wind.sd = sd;
    }
    let row: EstimatorRow = a.row.parse()?;
    let rep = electricity_semisynth(&model, row, a.t_len, a.reps, seed)?;
    out.json(
        "semisynth.json",
        &SemiSynthFile {
            model: &model,
            row,
            t: rep.t,
            repetitions: a.reps,
            truth: rep.truth,
            failures: rep.failures,
            quantiles: rep.quantiles,
            contains_truth: rep.quantiles.contains(rep.truth),
        },
    )?;
    let mut w = csv::Writer::from_writer(out.file("estimates.csv")?);
    w.write_record(["repetition", "estimate"])?;
    for (i, e) in rep.estimates.iter().enumerate() {
        w.write_record([i.to_string(), format!("{e:e}")])?;
    }
    w.flush()?;
    out.json("validity.json", &validity_table(&model.wind))
}
