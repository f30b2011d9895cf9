// SPDX-License-Identifier: MIT
//! `svarid`: batch front-end for simulation, identification, estimation and
//! the Monte Carlo studies.
//!
//! Every run writes its artifacts plus `manifest.json` into `--out`. Failures
//! additionally write `error.json` and exit with status 2 (configuration or
//! input problems) or 3 (numerical problems such as unstable parameters or a
//! singular covariance system).

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use svarid::{Error, Result};

use args::{Cli, Command};
use output::{ErrorRecord, Manifest, OutDir};

fn dispatch(cli: &Cli, out: &mut OutDir) -> Result<()> {
    let seed = cli.global.seed;
    match &cli.command {
        Command::Simulate(a) => commands::simulate_cmd(a, seed, out),
        Command::ExactCov(a) => commands::exact_cov_cmd(a, out),
        Command::Identify(a) => commands::identify_cmd(a, out),
        Command::Estimate(a) => commands::estimate_cmd(a, out),
        Command::Bootstrap(a) => commands::bootstrap_cmd(a, seed, out),
        Command::ExperimentRandom(a) => commands::experiment_random_cmd(a, seed, out),
        Command::ReplicateExample(a) => commands::replicate_example_cmd(a, seed, out),
        Command::Electricity(a) => commands::electricity_cmd(a, seed, out),
    }
}

fn write_manifest(cli: &Cli, out: &mut OutDir, threads: usize, status: &'static str) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        tool_version: env!("CARGO_PKG_VERSION"),
        library_version: svarid::VERSION,
        command: cli.command.name(),
        config: cli,
        threads,
        status,
        outputs: out.written().to_vec(),
        created: chrono::Utc::now().to_rfc3339(),
    };
    out.json("manifest.json", &manifest)
}

fn fail(command: &str, out: Option<&mut OutDir>, e: &Error) -> ExitCode {
    let record = ErrorRecord::new(command, e);
    let json = serde_json::to_string(&record).unwrap_or_else(|_| format!("{{\"message\":{:?}}}", record.message));
    eprintln!("{json}");
    if let Some(out) = out {
        // Best effort: the error is already on stderr.
        let _ = out.json("error.json", &record);
    }
    ExitCode::from(record.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build_global();
    if let Err(e) = pool {
        return fail(command, None, &Error::Precondition(format!("cannot start thread pool: {e}")));
    }
    let threads = rayon::current_num_threads();
    let mut out = match OutDir::create(&cli.global.out) {
        Ok(o) => o,
        Err(e) => return fail(command, None, &e),
    };
    let result = dispatch(&cli, &mut out);
    let status = if result.is_ok() { "ok" } else { "error" };
    if let Err(e) = write_manifest(&cli, &mut out, threads, status) {
        return fail(command, Some(&mut out), &e);
    }
    match result {
        Ok(()) => {
            println!("{}", out.path("manifest.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(command, Some(&mut out), &e),
    }
}
