// SPDX-License-Identifier: MIT
//! Command-line grammar.
//!
//! Every argument struct is also serialized into the run manifest, so the
//! manifest echoes the fully resolved configuration (defaults included).

use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Identification and estimation of direct effects in latently confounded
/// SVAR processes.
#[derive(Debug, Parser, Serialize)]
#[command(name = "svarid", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Master seed of every random draw.
    #[arg(long, global = true, env = "SVARID_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Simulate a series from parameters; writes data.csv.
    Simulate(SimulateArgs),
    /// Exact autocovariances from parameters; writes autocov.json.
    ExactCov(ExactCovArgs),
    /// Sweep the future-set offset for identifying certificates; writes
    /// sweep.json (all results) and spec.json (the preferred one).
    Identify(IdentifyArgs),
    /// Estimate effects from data (or exactly from parameters); writes estimate.json.
    Estimate(EstimateArgs),
    /// Moving-block bootstrap; writes bootstrap.json and replicates.csv.
    Bootstrap(BootstrapArgs),
    /// Random-graph convergence study; writes convergence.csv, medians.csv and summary.json.
    ExperimentRandom(RandomArgs),
    /// Convergence study of a worked example; writes errors.csv and summary.json.
    ReplicateExample(ExampleArgs),
    /// Electricity-market study; writes semisynth.json, estimates.csv and validity.json.
    Electricity(ElectricityArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::ExactCov(_) => "exact-cov",
            Command::Identify(_) => "identify",
            Command::Estimate(_) => "estimate",
            Command::Bootstrap(_) => "bootstrap",
            Command::ExperimentRandom(_) => "experiment-random",
            Command::ReplicateExample(_) => "replicate-example",
            Command::Electricity(_) => "electricity",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Parameter JSON.
    #[arg(long)]
    pub params: PathBuf,
    /// Series length.
    #[arg(long = "t-len", default_value_t = 1000)]
    pub t_len: usize,
    /// Discarded initial steps.
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactCovArgs {
    /// Parameter JSON.
    #[arg(long)]
    pub params: PathBuf,
    /// Largest lag.
    #[arg(long = "h-max", default_value_t = 10)]
    pub h_max: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct IdentifyArgs {
    /// Lag-structure JSON.
    #[arg(long)]
    pub graph: PathBuf,
    /// Inclusive offset range `a..b`; defaults to `−3(p+1)..3(p+1)`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
    #[serde(serialize_with = "ser_range")]
    pub delta: Option<RangeInclusive<i64>>,
    /// Enumerate basis path systems instead of relying on the construction.
    #[arg(long)]
    pub enumerate_paths: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Estimator spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Data CSV (sample covariances).
    #[arg(long, conflicts_with = "params", required_unless_present = "params")]
    pub data: Option<PathBuf>,
    /// Parameter JSON (exact covariances instead of data).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Subtract sample means before computing covariances.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub demean: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct BootstrapArgs {
    /// Estimator spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Data CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Block length.
    #[arg(long = "block-len", default_value_t = 500)]
    pub block_len: usize,
    /// Number of bootstrap replicates.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Subtract sample means before computing covariances.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub demean: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct RandomArgs {
    /// Protocol JSON; defaults to the standard protocol.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Accepted graphs to study.
    #[arg(long = "n-graphs", default_value_t = 100)]
    pub n_graphs: usize,
    /// Give up after this many graph draws.
    #[arg(long = "max-draws", default_value_t = 100_000)]
    pub max_draws: usize,
    /// Override the protocol's parameter sets per graph.
    #[arg(long = "n-params")]
    pub n_params: Option<usize>,
    /// Comma-separated series lengths.
    #[arg(long = "t-grid", value_delimiter = ',', default_value = "100,1000,10000,100000")]
    pub t_grid: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExampleArgs {
    /// One of confounded-ar3, lagged-cause, feedback, two-latents.
    #[arg(long)]
    pub example: String,
    /// Comma-separated series lengths.
    #[arg(long = "t-grid", value_delimiter = ',', default_value = "100,1000,10000,100000")]
    pub t_grid: Vec<usize>,
    /// Parameter draws.
    #[arg(long = "n-params", default_value_t = 100)]
    pub n_params: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ElectricityArgs {
    /// Model variant 1, 2 or 3.
    #[arg(long, default_value = "1")]
    pub model: String,
    /// Estimator row 1..5.
    #[arg(long, default_value = "1")]
    pub row: String,
    /// Full model JSON (overrides --model and the defaults).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV of wind AR coefficients (one per row).
    #[arg(long = "wind-csv")]
    pub wind_csv: Option<PathBuf>,
    /// Wind innovation standard deviation (with --wind-csv).
    #[arg(long = "wind-sd")]
    pub wind_sd: Option<f64>,
    /// Series length.
    #[arg(long = "t-len", default_value_t = 27072)]
    pub t_len: usize,
    /// Repetitions.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
}

/// Parse an inclusive range `a..b` (also accepts `a..=b` and a single integer).
pub fn parse_range(s: &str) -> Result<RangeInclusive<i64>, String> {
    let s = s.trim();
    let parse = |x: &str| x.trim().parse::<i64>().map_err(|_| format!("'{x}' is not an integer"));
    match s.split_once("..") {
        Some((a, b)) => Ok(parse(a)?..=parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = parse(s)?;
            Ok(v..=v)
        }
    }
}

fn ser_range<S: serde::Serializer>(r: &Option<RangeInclusive<i64>>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&[*r.start(), *r.end()]),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_range("-10..10").unwrap(), -10..=10);
        assert_eq!(parse_range("2..=5").unwrap(), 2..=5);
        assert_eq!(parse_range("3").unwrap(), 3..=3);
        assert!(parse_range("5..4").unwrap().is_empty());
        assert!(parse_range("a..4").is_err());
    }

    #[test]
    fn grammar_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
