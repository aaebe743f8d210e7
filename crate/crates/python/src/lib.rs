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

//! Python bindings: benchmark objectives, the RWMH/Langevin samplers,
//! diffusion-map embeddings, geometric-harmonics lifting, SDE coefficient
//! estimation, and the two coarse optimization drivers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use opt_manifold_core::dmaps::{
    dmaps_embed, epsilon_from_sq_dists, make_swiss_roll, pairwise_sq_dists, KernelSpec, Metric,
};
use opt_manifold_core::harmonics::{gh_fit, GHModel};
use opt_manifold_core::objectives::{Objective as CoreObjective, ObjectiveId};
use opt_manifold_core::outer::{
    run_baseline, run_grid, run_ridge, GridChart, GridConfig, RidgeConfig, RunHistory, RunStatus,
};
use opt_manifold_core::points::Points;
use opt_manifold_core::rng::substream;
use opt_manifold_core::sampler::{
    langevin_em_burst, rwmh_burst, RecordMode, SamplerParams, StopRule,
};
use opt_manifold_core::sde::estimate_gmm_increments;
use opt_manifold_core::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParam { .. } | Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn points_from_rows(rows: &[Vec<f64>], what: &str) -> PyResult<Points> {
    let dim = rows
        .first()
        .map(|r| r.len())
        .ok_or_else(|| PyValueError::new_err(format!("{}: need at least one row", what)))?;
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err(format!("{}: ragged rows", what)));
    }
    Ok(Points::from_rows(dim, rows))
}

/// A benchmark objective: `quad1d`, `linear2d`, `bayes_ridge`, or
/// `cylinder_well`.
#[pyclass(name = "Objective", from_py_object)]
#[derive(Clone)]
struct PyObjective {
    inner: CoreObjective,
}

#[pymethods]
impl PyObjective {
    #[new]
    fn new(tag: &str) -> PyResult<Self> {
        let id = ObjectiveId::parse(tag)
            .ok_or_else(|| PyValueError::new_err(format!("unknown objective `{}`", tag)))?;
        Ok(PyObjective { inner: CoreObjective::new(id) })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn tag(&self) -> &'static str {
        self.inner.id.tag()
    }

    fn eval(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "objective {} expects dimension {}, got {}",
                self.inner.id.tag(),
                self.inner.dim(),
                x.len()
            )));
        }
        Ok(self.inner.eval(&x))
    }

    fn __repr__(&self) -> String {
        format!("Objective('{}')", self.inner.id.tag())
    }
}

/// Accepted-state trajectory of a constant-temperature RWMH burst.
#[pyfunction]
#[pyo3(signature = (objective, start, temperature, dt, n_steps, seed=0))]
fn rwmh_trajectory(
    objective: &PyObjective,
    start: Vec<f64>,
    temperature: f64,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let params = SamplerParams::new(temperature, dt);
    let mut rng = substream(seed, "py-rwmh", 0);
    let obj = objective.inner;
    let traj = rwmh_burst(
        &start,
        &params,
        StopRule::Steps(n_steps),
        |x| obj.eval(x),
        RecordMode::AcceptedOnly,
        &mut rng,
    )
    .map_err(to_py_err)?;
    Ok(traj.states().map(|s| s.to_vec()).collect())
}

/// Euler-Maruyama Langevin trajectory on the same Gibbs target, using a
/// finite-difference gradient of the objective.
#[pyfunction]
#[pyo3(signature = (objective, start, temperature, dt, duration, seed=0))]
fn langevin_trajectory(
    objective: &PyObjective,
    start: Vec<f64>,
    temperature: f64,
    dt: f64,
    duration: f64,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let mut rng = substream(seed, "py-langevin", 0);
    let obj = objective.inner;
    let traj = langevin_em_burst(
        &start,
        temperature,
        dt,
        duration,
        |x| opt_manifold_core::objectives::fd_gradient(&obj, x, 1e-6),
        &mut rng,
    );
    Ok(traj.states().map(|s| s.to_vec()).collect())
}

/// Swiss-roll point cloud: (points, arclength, height).
#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn swiss_roll(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let roll = make_swiss_roll(n, seed);
    let pts = roll.points.rows().map(|r| r.to_vec()).collect();
    (pts, roll.arclength, roll.height)
}

/// Euclidean diffusion-map embedding: (eigenvalues, coords, harmonic_flags)
/// with `coords[j]` the j-th nontrivial eigenvector.
#[pyfunction]
#[pyo3(signature = (points, k, alpha=1.0, epsilon_scale=1.0))]
fn dmaps(
    points: Vec<Vec<f64>>,
    k: usize,
    alpha: f64,
    epsilon_scale: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<bool>)> {
    let data = points_from_rows(&points, "points")?;
    let mut d2 = pairwise_sq_dists(&data, Metric::Euclidean, None).map_err(to_py_err)?;
    let eps = epsilon_scale * epsilon_from_sq_dists(&d2).map_err(to_py_err)?;
    let spec = KernelSpec::new(eps, alpha, Metric::Euclidean);
    let inv_eps2 = 1.0 / (eps * eps);
    d2.map_inplace(|v| (-v * inv_eps2).exp());
    let emb = dmaps_embed(d2, &spec, k).map_err(to_py_err)?;
    let coords = (0..k).map(|j| emb.psi(j).to_vec()).collect();
    Ok((emb.eigenvalues.clone(), coords, emb.harmonic_flags.clone()))
}

/// Geometric-harmonics interpolant from scattered samples.
#[pyclass(name = "GeometricHarmonics")]
struct PyGeometricHarmonics {
    model: GHModel,
}

#[pymethods]
impl PyGeometricHarmonics {
    #[new]
    #[pyo3(signature = (centers, values, epsilon, delta=1e-8))]
    fn new(
        centers: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
        epsilon: f64,
        delta: f64,
    ) -> PyResult<Self> {
        let c = points_from_rows(&centers, "centers")?;
        let v = points_from_rows(&values, "values")?;
        let model = gh_fit(&c, &v, epsilon, delta).map_err(to_py_err)?;
        Ok(PyGeometricHarmonics { model })
    }

    /// Nystrom extension at `x`; returns (values, extrapolating) where the
    /// flag warns that `x` is beyond the trusted kernel range.
    fn extend(&self, x: Vec<f64>) -> (Vec<f64>, bool) {
        self.model.extend(&x)
    }
}

/// Drift and diffusion per coordinate from one-step increments:
/// (drift, diffusion, drift_stderr).
#[pyfunction]
fn estimate_coefficients(
    deltas: Vec<Vec<f64>>,
    dt: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let d = points_from_rows(&deltas, "deltas")?;
    let est = estimate_gmm_increments(&d, dt).map_err(to_py_err)?;
    let se = est.stderr.clone().unwrap_or_default();
    Ok((est.drift, est.diffusion, se))
}

fn history_to_dict(py: Python<'_>, h: &RunHistory) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("best_f", h.best_f)?;
    d.set_item("best_point", h.best_point.clone())?;
    d.set_item("cum_evals", h.cum_evals)?;
    d.set_item("n_iterations", h.iterations.len())?;
    d.set_item(
        "status",
        match h.status {
            RunStatus::Converged => "converged",
            RunStatus::IterLimit => "iter-limit",
        },
    )?;
    d.set_item("curve", h.curve.clone())?;
    d.set_item(
        "iterates",
        h.iterations.iter().map(|it| it.new_point.clone()).collect::<Vec<_>>(),
    )?;
    Ok(d.into())
}

/// Coarse ridge-following maximization (burst, embed, step, lift).
#[pyfunction]
#[pyo3(signature = (objective, start, seed=0, n_accepted=1000, n_coarse_iters=6,
                    temperature=0.05, dt=0.01))]
#[allow(clippy::too_many_arguments)]
fn ridge_run(
    py: Python<'_>,
    objective: &PyObjective,
    start: Vec<f64>,
    seed: u64,
    n_accepted: usize,
    n_coarse_iters: usize,
    temperature: f64,
    dt: f64,
) -> PyResult<Py<PyDict>> {
    let cfg = RidgeConfig {
        n_accepted,
        n_coarse_iters,
        temperature,
        dt,
        ..RidgeConfig::default()
    };
    let h = run_ridge(&cfg, &objective.inner, &start, seed).map_err(to_py_err)?;
    history_to_dict(py, &h)
}

/// Plain constant-temperature RWMH baseline under an evaluation budget.
#[pyfunction]
#[pyo3(signature = (objective, start, budget, seed=0, temperature=0.05, dt=0.01, maximize=true))]
#[allow(clippy::too_many_arguments)]
fn baseline_run(
    py: Python<'_>,
    objective: &PyObjective,
    start: Vec<f64>,
    budget: usize,
    seed: u64,
    temperature: f64,
    dt: f64,
    maximize: bool,
) -> PyResult<Py<PyDict>> {
    let params = SamplerParams::new(temperature, dt);
    let h = run_baseline(&objective.inner, budget, &params, maximize, &start, seed)
        .map_err(to_py_err)?;
    history_to_dict(py, &h)
}

/// Coarse grid minimization on the cylinder chart; `start` is ambient
/// (x, y, z).
#[pyfunction]
#[pyo3(signature = (objective, start, radius, seed=0, n_coarse_iters=15))]
fn grid_run(
    py: Python<'_>,
    objective: &PyObjective,
    start: Vec<f64>,
    radius: f64,
    seed: u64,
    n_coarse_iters: usize,
) -> PyResult<Py<PyDict>> {
    let cfg = GridConfig {
        chart: GridChart::Cylinder { radius },
        n_coarse_iters,
        ..GridConfig::default()
    };
    let h = run_grid(&cfg, &objective.inner, &start, seed).map_err(to_py_err)?;
    history_to_dict(py, &h)
}

#[pymodule]
fn opt_manifold(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObjective>()?;
    m.add_class::<PyGeometricHarmonics>()?;
    m.add_function(wrap_pyfunction!(rwmh_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(langevin_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(swiss_roll, m)?)?;
    m.add_function(wrap_pyfunction!(dmaps, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(ridge_run, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_run, m)?)?;
    m.add_function(wrap_pyfunction!(grid_run, m)?)?;
    Ok(())
}
