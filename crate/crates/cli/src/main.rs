// Copyright 2026 The opt-manifold authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! `opt-manifold <experiment>`: runs one experiment and writes its CSV/JSON
//! outputs plus a manifest into the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 convergence / degeneracy abort.

mod config;
mod experiments;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::Config;
use experiments::{run_experiment, AppError};
use manifest::OutDir;

#[derive(Parser, Debug)]
#[command(
    name = "opt-manifold",
    about = "Derivative-free optimization and effective-dynamics experiments",
    version
)]
struct Cli {
    /// Experiment name: fig1-density, swissroll, ridge, baseline, cylinder,
    /// grid-linear2d, chaos-additive, chaos-multiplicative.  Aliases:
    /// ridge-run, grid-run, baseline-run, chaos-run.
    experiment: String,

    /// Config file (INI-style key = value; sections prefix keys).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed; overrides the `seed` config key.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory root (default: $OPT_MANIFOLD_OUT or ./runs).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Rayon thread count (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Config override, repeatable: --set sampler.T=0.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Noise coupling for chaos-run: additive or multiplicative.
    #[arg(long)]
    mode: Option<String>,

    /// Observation transform for chaos-run: none or semicircle.
    #[arg(long)]
    transform: Option<String>,
}

fn run(cli: &Cli) -> Result<(), AppError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(AppError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| AppError::Config(format!("cannot configure thread pool: {}", e)))?;
    }

    // Subcommand aliases map onto the canonical experiment names.
    let experiment = match cli.experiment.as_str() {
        "ridge-run" => "ridge".to_string(),
        "baseline-run" => "baseline".to_string(),
        "grid-run" => "cylinder".to_string(),
        "chaos-run" => "chaos".to_string(),
        other => other.to_string(),
    };

    let mut sets: Vec<(String, String)> = Vec::new();
    for s in &cli.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| AppError::Config(format!("--set expects KEY=VALUE, got `{}`", s)))?;
        sets.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(mode) = &cli.mode {
        if experiment != "chaos" {
            return Err(AppError::Config("--mode only applies to chaos-run".into()));
        }
        sets.push(("chaos.mode".to_string(), mode.clone()));
    }
    if let Some(tr) = &cli.transform {
        if experiment != "chaos" {
            return Err(AppError::Config("--transform only applies to chaos-run".into()));
        }
        sets.push(("chaos.transform".to_string(), tr.clone()));
    }

    let cfg = Config::resolve(&experiment, cli.config.as_deref(), &sets, cli.seed)?;
    let seed = cfg.get_u64("seed")?;

    let root = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("OPT_MANIFOLD_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let dir = root.join(&experiment);
    let mut out = OutDir::create(&dir)?;

    let summary = run_experiment(&experiment, &cfg, &mut out)?;
    let manifest = out.finish(&experiment, seed, cfg.values().clone(), summary)?;
    println!("{}: wrote {} files to {}", experiment, manifest.outputs.len() + 1, dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
