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

//! Flat key-value configuration with layered resolution: experiment defaults
//! < config file < `--set` flags.  Unknown keys are rejected by name, so a
//! resolved config is always a complete, validated snapshot.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

/// Default key set per experiment.  Every key an experiment understands is
/// listed here; anything else is an unknown-key error.
pub fn defaults_for(experiment: &str) -> Option<BTreeMap<String, String>> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: &str| {
        m.insert(k.to_string(), v.to_string());
    };
    put("seed", "0");
    match experiment {
        "fig1-density" => {
            put("sampler.T", "0.5");
            put("sampler.dt", "1e-3");
            put("fig1.n_real", "10000");
            put("fig1.n_steps", "100");
            put("fig1.x0", "1.0");
        }
        "swissroll" => {
            put("swissroll.n", "2000");
            put("dmaps.k", "5");
            put("dmaps.alpha", "1.0");
            put("dmaps.epsilon", "auto");
            // Median-heuristic epsilon shortcuts across the roll's sheets;
            // 0.15x keeps the kernel within one winding.
            put("dmaps.epsilon_scale", "0.15");
        }
        "ridge" => {
            put("objective", "bayes_ridge");
            put("sampler.T", "0.05");
            put("sampler.dt", "0.01");
            put("sampler.n_accept", "1000");
            put("outer.n_iters", "6");
            put("outer.delta_scale", "1.0");
            put("outer.ambiguous_rho", "0.2");
            put("gh.delta", "1e-8");
            put("gh.epsilon_scale", "3.0");
            put("ridge.start", "-1.0,-1.0");
        }
        "baseline" => {
            put("objective", "bayes_ridge");
            put("sampler.T", "0.05");
            put("sampler.dt", "0.01");
            put("baseline.budget", "20000");
            put("baseline.maximize", "true");
            put("baseline.start", "-1.0,-1.0");
        }
        "cylinder" => {
            put("objective", "cylinder_well");
            put("cyl.k1", "1e4");
            put("cyl.k2", "20");
            put("cyl.R", "1.5915494309189535");
            put("sampler.T", "0.2");
            put("sampler.dt", "1e-3");
            put("sampler.n_traj", "40");
            put("sampler.burst_duration", "0.01");
            put("grid.nx", "8");
            put("grid.ny", "10");
            put("grid.extent_x", "0.6");
            put("grid.extent_y", "0.6");
            put("outer.n_iters", "15");
            put("outer.t_ode", "1.0");
            put("outer.drift_tol", "1e-3");
            put("outer.hull_margin", "0.10");
            put("outer.surface_degree", "1");
            put("gh.delta", "1e-8");
            put("gh.epsilon_scale", "1.0");
            put("cylinder.start_theta", "-0.7853981633974483");
            put("cylinder.start_z", "0.0");
        }
        "grid-linear2d" => {
            put("lin2d.variant", "all");
            put("lin2d.nx", "8");
            put("lin2d.ny", "10");
            put("lin2d.n_traj", "150");
            put("lin2d.duration", "0.01");
            put("lin2d.dt", "1e-3");
            put("lin2d.mu", "-1.0");
            put("lin2d.nu", "-2.0");
            put("sampler.T", "0.05");
            put("lin2d.deriv_offset_frac", "0.05");
            put("lin2d.n_cov_bursts", "1000");
            put("lin2d.dt_cov", "1e-4");
            put("lin2d.sphere_rho", "1.2");
            put("dmaps.epsilon", "auto");
            put("dmaps.epsilon_scale", "0.25");
            put("sde.mask_frac", "0.05");
            put("sde.surface_degree", "1");
        }
        "chaos-additive" | "chaos-multiplicative" | "chaos" => {
            put("chaos.mode", if experiment == "chaos-multiplicative" { "multiplicative" } else { "additive" });
            put("chaos.transform", "none");
            put("chaos.n_starts", "20");
            put("chaos.n_traj", "500");
            put("chaos.n_cov_bursts", "100");
            put("chaos.dt_cov", "1e-4");
            put("chaos.deriv_offset", "0.02");
            put("chaos.dt_int", "1e-5");
            put("dmaps.epsilon", "auto");
            put("dmaps.epsilon_scale", "0.1");
            put("psifit.degree", "9");
        }
        _ => return None,
    }
    Some(m)
}

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Layered resolution for one experiment.
    pub fn resolve(
        experiment: &str,
        file: Option<&Path>,
        sets: &[(String, String)],
        seed: Option<u64>,
    ) -> CResult<Config> {
        let mut values = defaults_for(experiment)
            .ok_or_else(|| ConfigError(format!("unknown experiment `{}`", experiment)))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config file {}: {}", path.display(), e)))?;
            for (key, value) in parse_ini(&text)? {
                if !values.contains_key(&key) {
                    return Err(ConfigError(format!(
                        "unknown config key `{}` for experiment `{}`",
                        key, experiment
                    )));
                }
                values.insert(key, value);
            }
        }
        for (key, value) in sets {
            if !values.contains_key(key) {
                return Err(ConfigError(format!(
                    "unknown config key `{}` for experiment `{}`",
                    key, experiment
                )));
            }
            values.insert(key.clone(), value.clone());
        }
        if let Some(s) = seed {
            values.insert("seed".to_string(), s.to_string());
        }
        Ok(Config { values })
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw(&self, key: &str) -> CResult<&str> {
        self.values
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| ConfigError(format!("missing config key `{}`", key)))
    }

    pub fn get_str(&self, key: &str) -> CResult<String> {
        Ok(self.raw(key)?.to_string())
    }

    pub fn get_f64(&self, key: &str) -> CResult<f64> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| ConfigError(format!("config key `{}`: not a number: `{}`", key, raw)))
    }

    pub fn get_pos_f64(&self, key: &str) -> CResult<f64> {
        let v = self.get_f64(key)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError(format!("config key `{}`: must be positive, got {}", key, v)))
        }
    }

    pub fn get_usize(&self, key: &str) -> CResult<usize> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| ConfigError(format!("config key `{}`: not a non-negative integer: `{}`", key, raw)))
    }

    pub fn get_u64(&self, key: &str) -> CResult<u64> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| ConfigError(format!("config key `{}`: not a non-negative integer: `{}`", key, raw)))
    }

    pub fn get_bool(&self, key: &str) -> CResult<bool> {
        let raw = self.raw(key)?;
        match raw {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(ConfigError(format!("config key `{}`: not a boolean: `{}`", key, raw))),
        }
    }

    /// `auto` maps to None, anything else must parse as a positive number.
    pub fn get_auto_f64(&self, key: &str) -> CResult<Option<f64>> {
        let raw = self.raw(key)?;
        if raw == "auto" {
            Ok(None)
        } else {
            self.get_pos_f64(key).map(Some)
        }
    }

    /// Comma-separated float list.
    pub fn get_f64_list(&self, key: &str) -> CResult<Vec<f64>> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| ConfigError(format!("config key `{}`: not a number list: `{}`", key, raw)))
            })
            .collect()
    }
}

/// Parses flat INI-ish text: `key = value` lines, optional `[section]`
/// headers that prefix subsequent keys with `section.`, `#`/`;` comments.
pub fn parse_ini(text: &str) -> CResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut section = String::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected `key = value`: `{}`", lineno + 1, line)))?;
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{}.{}", section, k.trim())
        };
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}
