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

//! Run manifests: the resolved config, seed, per-stage timings, and a
//! content-hashed inventory of every output file, written as
//! `manifest.json`.  The manifest is the reproduction recipe for a run.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub timings_ms: Vec<(String, f64)>,
    pub outputs: Vec<OutputFile>,
    /// Experiment-specific summary numbers (fitted coefficients, medians...).
    pub summary: serde_json::Value,
}

/// Output directory handle that records hashes and timings as files are
/// written.
pub struct OutDir {
    dir: PathBuf,
    outputs: Vec<OutputFile>,
    timings: Vec<(String, f64)>,
}

impl OutDir {
    pub fn create(dir: &Path) -> io::Result<OutDir> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf(), outputs: Vec::new(), timings: Vec::new() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.outputs.push(OutputFile { file: name.to_string(), sha256: format!("{:x}", hasher.finalize()) });
        Ok(())
    }

    /// CSV writer: header plus one formatted line per row.
    pub fn write_csv<I: IntoIterator<Item = String>>(
        &mut self,
        name: &str,
        header: &str,
        rows: I,
    ) -> io::Result<()> {
        let mut text = String::with_capacity(4096);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let text = serde_json::to_string_pretty(value).expect("serializable");
        self.write_bytes(name, text.as_bytes())
    }

    /// Runs a stage closure and records its wall time under `label`.
    pub fn stage<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.push((label.to_string(), t0.elapsed().as_secs_f64() * 1e3));
        out
    }

    /// Writes `manifest.json` last, covering everything written so far.
    pub fn finish(
        mut self,
        experiment: &str,
        seed: u64,
        config: BTreeMap<String, String>,
        summary: serde_json::Value,
    ) -> io::Result<RunManifest> {
        let manifest = RunManifest {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            timings_ms: std::mem::take(&mut self.timings),
            outputs: self.outputs.clone(),
            summary,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("serializable");
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

/// Formats a float for CSV with enough digits to round-trip.
pub fn fmt(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{:.1}", v)
    } else {
        format!("{:.17e}", v)
    }
}
