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

//! Coarse optimization drivers.
//!
//! Two outer loops: ridge following (burst, embed in one diffusion
//! coordinate, extrapolate along the objective-increasing direction, lift)
//! and grid descent (local grid of burst ensembles, 2D embedding, drift
//! surface fit, Euler integration of the drift ODE, lift).  Both audit their
//! objective-evaluation budget through the sampler's counters.

use serde::{Deserialize, Serialize};

use crate::dmaps::{dmaps_embed, epsilon_from_sq_dists, pairwise_sq_dists, pairwise_weights, KernelSpec, Metric};
use crate::error::{Error, Result};
use crate::harmonics::gh_fit;
use crate::objectives::Objective;
use crate::points::{sq_dist, Points};
use crate::rng::substream;
use crate::sampler::{ensemble_bursts, rwmh_burst, RecordMode, SamplerParams, StopRule};
use crate::sde::{estimate_stat_increments, fit_coeff_surface, MaskRule};
use crate::stats::{mad, median, spearman};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    /// Drift tolerance met (grid) or objective direction became ambiguous
    /// near an extremum (ridge).
    Converged,
    IterLimit,
}

/// One coarse iteration: where it started, what the burst saw, where the
/// lift landed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub start: Vec<f64>,
    pub cloud_size: usize,
    pub epsilon: f64,
    pub new_point: Vec<f64>,
    pub f_new: f64,
    pub best_f: f64,
    pub cum_evals: u64,
    /// Geometric-harmonics extrapolation flag at the lifted point.
    pub lift_extrapolated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunHistory {
    pub iterations: Vec<IterationRecord>,
    pub status: RunStatus,
    pub best_point: Vec<f64>,
    pub best_f: f64,
    pub cum_evals: u64,
    /// true if larger objective values are better for this run
    pub maximize: bool,
    /// Running best objective against cumulative evaluation count.
    pub curve: Vec<(u64, f64)>,
}

impl RunHistory {
    fn new(maximize: bool, start: &[f64], f0: f64) -> Self {
        RunHistory {
            iterations: Vec::new(),
            status: RunStatus::IterLimit,
            best_point: start.to_vec(),
            best_f: f0,
            cum_evals: 0,
            maximize,
            curve: vec![(1, f0)],
        }
    }

    fn better(&self, a: f64, b: f64) -> bool {
        if self.maximize {
            a > b
        } else {
            a < b
        }
    }

    fn observe(&mut self, evals: u64, f: f64, x: &[f64]) {
        if f.is_finite() && self.better(f, self.best_f) {
            self.best_f = f;
            self.best_point = x.to_vec();
            self.curve.push((evals, f));
        }
    }

    /// Evaluations needed to first reach the target (`>=` when maximizing).
    pub fn evals_to_reach(&self, target: f64) -> Option<u64> {
        for &(e, f) in &self.curve {
            if (self.maximize && f >= target) || (!self.maximize && f <= target) {
                return Some(e);
            }
        }
        None
    }
}

/// Geometric median by Weiszfeld iteration (deterministic).
pub fn geometric_median(cloud: &Points) -> Vec<f64> {
    let dim = cloud.dim();
    let n = cloud.len();
    let mut m = vec![0.0; dim];
    for r in cloud.rows() {
        for (a, v) in m.iter_mut().zip(r) {
            *a += v / n as f64;
        }
    }
    for _ in 0..200 {
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        for r in cloud.rows() {
            let d = sq_dist(&m, r).sqrt().max(1e-12);
            for (a, v) in num.iter_mut().zip(r) {
                *a += v / d;
            }
            den += 1.0 / d;
        }
        let next: Vec<f64> = num.iter().map(|v| v / den).collect();
        let shift = sq_dist(&m, &next).sqrt();
        m = next;
        if shift < 1e-12 {
            break;
        }
    }
    m
}

/// Removes burst-cloud outliers: first points whose robust z-score of the
/// objective value (median/MAD) is below -3, then points farther than
/// `median + 3 MAD` in distance from the cloud's geometric median.
/// Objective values are in maximization sense (low f = off-ridge).
pub fn outlier_filter(cloud: &Points, fvals: &[f64]) -> Result<(Points, Vec<f64>)> {
    let n = cloud.len();
    assert_eq!(fvals.len(), n);
    if n < 10 {
        return Err(Error::Degenerate(format!("outlier filter needs >= 10 points, got {}", n)));
    }
    // MAD scaled to be sigma-consistent for normal data
    const MAD_SCALE: f64 = 1.4826;
    let fmed = median(fvals);
    let fmad = MAD_SCALE * mad(fvals);
    let mut keep: Vec<bool> = fvals
        .iter()
        .map(|&f| fmad == 0.0 || (f - fmed) / fmad >= -3.0)
        .collect();
    // distance pass on the f-survivors
    let mut survivors = Points::with_capacity(cloud.dim(), n);
    for (i, r) in cloud.rows().enumerate() {
        if keep[i] {
            survivors.push(r);
        }
    }
    let center = geometric_median(&survivors);
    let dists: Vec<f64> = cloud.rows().map(|r| sq_dist(r, &center).sqrt()).collect();
    let kept_dists: Vec<f64> = dists
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(d, _)| *d)
        .collect();
    let dmed = median(&kept_dists);
    let dmad = MAD_SCALE * mad(&kept_dists);
    let cut = dmed + 3.0 * dmad;
    for (i, d) in dists.iter().enumerate() {
        if dmad > 0.0 && *d > cut {
            keep[i] = false;
        }
    }
    let kept = keep.iter().filter(|&&k| k).count();
    if kept * 2 < n {
        return Err(Error::Degenerate(format!(
            "outlier filter would remove {} of {} points; cloud degenerate",
            n - kept,
            n
        )));
    }
    let mut out = Points::with_capacity(cloud.dim(), kept);
    let mut out_f = Vec::with_capacity(kept);
    for (i, r) in cloud.rows().enumerate() {
        if keep[i] {
            out.push(r);
            out_f.push(fvals[i]);
        }
    }
    Ok((out, out_f))
}

// ---------------------------------------------------------------------------
// ridge following
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub n_accepted: usize,
    pub n_coarse_iters: usize,
    pub temperature: f64,
    pub dt: f64,
    /// Extrapolation distance as a multiple of the filtered cloud's psi span.
    pub delta_scale: f64,
    /// |Spearman(psi1, f)| below this means the improving direction is
    /// undefined (at/near the extremum).
    pub ambiguous_rho: f64,
    pub gh_delta: f64,
    /// Kernel scale for the lift, as a multiple of the psi-cloud median
    /// pairwise distance.
    pub gh_epsilon_scale: f64,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig {
            n_accepted: 1000,
            n_coarse_iters: 6,
            temperature: 0.05,
            dt: 0.01,
            delta_scale: 1.0,
            ambiguous_rho: 0.2,
            gh_delta: 1e-8,
            // Wide lift kernel: the target sits up to ~2 cloud spans from the
            // cloud center, and a median-distance kernel decays to zero there.
            gh_epsilon_scale: 3.0,
        }
    }
}

/// Ridge-following coarse optimization (maximization).
///
/// Each coarse iteration: RWMH burst until `n_accepted` acceptances, outlier
/// filter, 1D diffusion-map embedding, improving direction from the sign of
/// Spearman(psi1, f), extrapolation `delta_scale * span` beyond the extreme
/// cloud point, geometric-harmonics lift psi -> ambient.
pub fn run_ridge(cfg: &RidgeConfig, obj: &Objective, start: &[f64], master_seed: u64) -> Result<RunHistory> {
    let params = SamplerParams::new(cfg.temperature, cfg.dt);
    // maximization via the sampler's minimization convention
    let f_int = |x: &[f64]| -obj.eval(x);
    let mut current = start.to_vec();
    let mut history = RunHistory::new(true, start, obj.eval(start));
    for iter in 0..cfg.n_coarse_iters {
        let mut rng = substream(master_seed, "ridge-burst", iter as u64);
        let traj = rwmh_burst(
            &current,
            &params,
            StopRule::Accepted(cfg.n_accepted),
            f_int,
            RecordMode::AcceptedOnly,
            &mut rng,
        )?;
        let evals_before = history.cum_evals;
        for (i, s) in traj.states().enumerate() {
            // recorded time = proposals * dt, so proposals + initial eval
            let e = evals_before + (traj.times[i] / cfg.dt).round() as u64 + 1;
            history.observe(e, -traj.fvals[i], s);
        }
        history.cum_evals += traj.eval_count;

        let cloud = traj.to_points();
        let fv: Vec<f64> = traj.fvals.iter().map(|v| -v).collect();
        let (cloud, fv) = outlier_filter(&cloud, &fv)?;

        let d2 = pairwise_sq_dists(&cloud, Metric::Euclidean, None)?;
        let eps = epsilon_from_sq_dists(&d2)?;
        let spec = KernelSpec::new(eps, 1.0, Metric::Euclidean);
        let w = pairwise_weights(&cloud, &spec, None)?;
        let emb = dmaps_embed(w, &spec, 2)?;
        if emb.degenerate {
            return Err(Error::EmbeddingFailure("degenerate kernel in ridge embedding".into()));
        }
        let psi1 = emb.psi(0);

        let rho = spearman(psi1, &fv);
        if !rho.is_finite() {
            return Err(Error::Degenerate(
                "objective constant over the burst cloud; ridge lost".into(),
            ));
        }
        if rho.abs() < cfg.ambiguous_rho {
            // direction undefined: we are at/near the extremum
            history.status = RunStatus::Converged;
            return Ok(history);
        }
        let sign = rho.signum();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in psi1 {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        let span = hi - lo;
        let extreme = if sign > 0.0 { hi } else { lo };

        // lift psi -> ambient on this iteration's cloud only
        let psi_pts = Points::from_rows(1, &psi1.iter().map(|&p| vec![p]).collect::<Vec<_>>());
        let psi_d2 = pairwise_sq_dists(&psi_pts, Metric::Euclidean, None)?;
        let gh_eps = cfg.gh_epsilon_scale * epsilon_from_sq_dists(&psi_d2)?;
        let model = gh_fit(&psi_pts, &cloud, gh_eps, cfg.gh_delta)?;

        // The lift is trusted only near the cloud; an extrapolated point that
        // falls off the ridge (objective collapsing relative to the cloud
        // median) means the step was too greedy, so halve it and retry.  The
        // loose factor tolerates small transverse wobble in the lift.
        let f_floor = 0.1 * median(&fv);
        let mut delta = cfg.delta_scale * span;
        let (new_point, f_new, extrapolated) = loop {
            let target = extreme + sign * delta;
            let (cand, extrapolated) = model.extend(&[target]);
            let f_cand = obj.eval(&cand);
            if cand.iter().all(|v| v.is_finite()) && f_cand.is_finite() && f_cand >= f_floor {
                break (cand, f_cand, extrapolated);
            }
            delta *= 0.5;
            if delta < 1e-3 * span {
                return Err(Error::Degenerate(
                    "ridge lift keeps landing below the cloud median objective".into(),
                ));
            }
            history.cum_evals += 1;
        };
        history.cum_evals += 1;
        history.observe(history.cum_evals, f_new, &new_point);

        history.iterations.push(IterationRecord {
            start: current.clone(),
            cloud_size: cloud.len(),
            epsilon: eps,
            new_point: new_point.clone(),
            f_new,
            best_f: history.best_f,
            cum_evals: history.cum_evals,
            lift_extrapolated: extrapolated,
        });
        current = new_point;
    }
    history.status = RunStatus::IterLimit;
    Ok(history)
}

// ---------------------------------------------------------------------------
// grid descent
// ---------------------------------------------------------------------------

/// Chart from local 2D grid coordinates to ambient space.  Grid-mode bursts
/// happen in ambient coordinates; the chart only places the grid (and, for
/// constrained problems, snaps lifted points back onto the known surface).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum GridChart {
    /// Identity: ambient space is the 2D plane.
    Plane,
    /// Cylinder surface r = radius; chart coordinates are (theta, z).
    Cylinder { radius: f64 },
}

impl GridChart {
    pub fn ambient_dim(&self) -> usize {
        match self {
            GridChart::Plane => 2,
            GridChart::Cylinder { .. } => 3,
        }
    }

    pub fn to_ambient(&self, u: f64, v: f64) -> Vec<f64> {
        match self {
            GridChart::Plane => vec![u, v],
            GridChart::Cylinder { radius } => vec![radius * u.cos(), radius * u.sin(), v],
        }
    }

    pub fn from_ambient(&self, x: &[f64]) -> (f64, f64) {
        match self {
            GridChart::Plane => (x[0], x[1]),
            GridChart::Cylinder { .. } => (x[1].atan2(x[0]), x[2]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub chart: GridChart,
    pub shape: (usize, usize),
    /// Grid extent in chart coordinates.
    pub extent: (f64, f64),
    pub n_traj: usize,
    /// Burst duration Delta t.
    pub duration: f64,
    pub temperature: f64,
    pub dt: f64,
    pub n_coarse_iters: usize,
    pub t_ode: f64,
    pub drift_tol: f64,
    pub surface_degree: usize,
    pub mask_rule: MaskRule,
    pub gh_delta: f64,
    pub gh_epsilon_scale: f64,
    /// Convex-hull margin for trusting the fitted coefficients.
    pub hull_margin: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            chart: GridChart::Plane,
            shape: (8, 10),
            extent: (0.6, 0.6),
            n_traj: 40,
            duration: 0.01,
            temperature: 0.2,
            dt: 1e-3,
            n_coarse_iters: 15,
            t_ode: 1.0,
            drift_tol: 1e-3,
            surface_degree: 1,
            mask_rule: MaskRule::KeepAll,
            gh_delta: 1e-8,
            gh_epsilon_scale: 1.0,
            hull_margin: 0.10,
        }
    }
}

/// Convex hull (counter-clockwise) of 2D points by monotone chain.
pub fn convex_hull(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = pts.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    let n = p.len();
    if n < 3 {
        return p;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::with_capacity(n);
    for pt in &p {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], pt) <= 0.0 {
            lower.pop();
        }
        lower.push(*pt);
    }
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(n);
    for pt in p.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], pt) <= 0.0 {
            upper.pop();
        }
        upper.push(*pt);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Membership test against a hull inflated by `margin` about its centroid.
pub fn in_hull_with_margin(hull: &[[f64; 2]], q: [f64; 2], margin: f64) -> bool {
    if hull.len() < 3 {
        return false;
    }
    let mut c = [0.0, 0.0];
    for h in hull {
        c[0] += h[0] / hull.len() as f64;
        c[1] += h[1] / hull.len() as f64;
    }
    let s = 1.0 + margin;
    let inflated: Vec<[f64; 2]> =
        hull.iter().map(|h| [c[0] + s * (h[0] - c[0]), c[1] + s * (h[1] - c[1])]).collect();
    for i in 0..inflated.len() {
        let a = inflated[i];
        let b = inflated[(i + 1) % inflated.len()];
        let cross = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]);
        if cross < 0.0 {
            return false;
        }
    }
    true
}

/// Grid-based coarse descent (minimization).
///
/// Each coarse iteration: local grid of burst ensembles around the current
/// point, 2D diffusion-map embedding of grid + endpoints, per-grid-point
/// drift/diffusion estimates, polynomial drift surface, explicit-Euler
/// integration of `dpsi = theta(psi) dt` until the horizon or the embedding
/// hull boundary, geometric-harmonics lift back to ambient space.
pub fn run_grid(cfg: &GridConfig, obj: &Objective, start: &[f64], master_seed: u64) -> Result<RunHistory> {
    assert_eq!(start.len(), cfg.chart.ambient_dim());
    let params = SamplerParams::new(cfg.temperature, cfg.dt);
    let mut current = start.to_vec();
    let mut history = RunHistory::new(false, start, obj.eval(start));
    let (nu, nv) = cfg.shape;
    let n_grid = nu * nv;
    let f = |x: &[f64]| obj.eval(x);

    for iter in 0..cfg.n_coarse_iters {
        let (u0, v0) = cfg.chart.from_ambient(&current);
        let mut grid = Points::with_capacity(cfg.chart.ambient_dim(), n_grid);
        for i in 0..nu {
            for j in 0..nv {
                let u = u0 + (i as f64 / (nu - 1) as f64 - 0.5) * cfg.extent.0;
                let v = v0 + (j as f64 / (nv - 1) as f64 - 0.5) * cfg.extent.1;
                grid.push(&cfg.chart.to_ambient(u, v));
            }
        }
        let label = format!("grid-burst-{}", iter);
        let ensembles = ensemble_bursts(
            &grid,
            cfg.n_traj,
            cfg.duration,
            &params,
            &f,
            RecordMode::AcceptedOnly,
            master_seed,
            &label,
        )?;
        let mut evals = 0u64;
        for ens in &ensembles {
            evals += ens.total_evals();
            for t in &ens.trajectories {
                for (i, s) in t.states().enumerate() {
                    if t.fvals[i].is_finite() {
                        history.observe(history.cum_evals + evals, t.fvals[i], s);
                    }
                }
            }
        }
        history.cum_evals += evals;

        // dataset: current point, grid, all endpoints
        let mut data = Points::with_capacity(current.len(), 1 + n_grid * (1 + cfg.n_traj));
        data.push(&current);
        data.extend(&grid);
        for ens in &ensembles {
            let ep = ens.endpoints();
            data.extend(&ep);
        }
        let d2 = pairwise_sq_dists(&data, Metric::Euclidean, None)?;
        let eps = epsilon_from_sq_dists(&d2)?;
        let spec = KernelSpec::new(eps, 1.0, Metric::Euclidean);
        let w = pairwise_weights(&data, &spec, None)?;
        let emb = dmaps_embed(w, &spec, 2)?;
        if emb.degenerate {
            return Err(Error::EmbeddingFailure("degenerate kernel in grid embedding".into()));
        }
        let psi = |idx: usize| [emb.psi(0)[idx], emb.psi(1)[idx]];
        let psi_current = psi(0);
        let psi_grid: Vec<[f64; 2]> = (0..n_grid).map(|g| psi(1 + g)).collect();

        // per-grid-point estimates in psi coordinates
        let mut grid_coords = Points::with_capacity(2, n_grid);
        let mut estimates = Vec::with_capacity(n_grid);
        let mut idx = 1 + n_grid;
        for g in 0..n_grid {
            let pg = psi_grid[g];
            grid_coords.push(&pg);
            let mut deltas = Points::with_capacity(2, cfg.n_traj);
            for _ in 0..cfg.n_traj {
                let pe = psi(idx);
                deltas.push(&[pe[0] - pg[0], pe[1] - pg[1]]);
                idx += 1;
            }
            estimates.push(estimate_stat_increments(&deltas, cfg.duration, false)?);
        }
        let field = fit_coeff_surface(&grid_coords, &estimates, cfg.surface_degree, cfg.mask_rule)?;

        // converged when the fitted drift vanishes at the current point
        let drift_at = |p: [f64; 2]| [field.fits[0].eval(p[0], p[1]), field.fits[1].eval(p[0], p[1])];
        let d0 = drift_at(psi_current);
        if (d0[0] * d0[0] + d0[1] * d0[1]).sqrt() < cfg.drift_tol {
            history.status = RunStatus::Converged;
            return Ok(history);
        }

        // Euler in psi space until horizon or hull exit; shrink on immediate exit
        let hull = convex_hull(&psi_grid);
        let mut t_ode = cfg.t_ode;
        let mut endpoint = None;
        for _shrink in 0..=5 {
            let h = t_ode / 50.0;
            let mut p = psi_current;
            let mut steps = 0;
            for _ in 0..50 {
                let d = drift_at(p);
                let q = [p[0] + h * d[0], p[1] + h * d[1]];
                if !in_hull_with_margin(&hull, q, cfg.hull_margin) {
                    break;
                }
                p = q;
                steps += 1;
            }
            if steps > 0 {
                endpoint = Some(p);
                break;
            }
            t_ode *= 0.5;
        }
        let p_end = endpoint.ok_or_else(|| {
            Error::Degenerate("drift ODE exits the embedding hull immediately even after shrinking".into())
        })?;

        // lift: psi grid -> ambient grid
        let psi_grid_pts = Points::from_rows(2, &psi_grid.iter().map(|p| p.to_vec()).collect::<Vec<_>>());
        let psi_d2 = pairwise_sq_dists(&psi_grid_pts, Metric::Euclidean, None)?;
        let gh_eps = cfg.gh_epsilon_scale * epsilon_from_sq_dists(&psi_d2)?;
        let model = gh_fit(&psi_grid_pts, &grid, gh_eps, cfg.gh_delta)?;
        let (lifted, extrapolated) = model.extend(&p_end);
        // snap back onto the constraint surface through the chart
        let (u, v) = cfg.chart.from_ambient(&lifted);
        let new_point = cfg.chart.to_ambient(u, v);
        let f_new = obj.eval(&new_point);

        history.iterations.push(IterationRecord {
            start: current.clone(),
            cloud_size: data.len(),
            epsilon: eps,
            new_point: new_point.clone(),
            f_new,
            best_f: history.best_f,
            cum_evals: history.cum_evals,
            lift_extrapolated: extrapolated,
        });
        current = new_point;
    }
    history.status = RunStatus::IterLimit;
    Ok(history)
}

/// Plain RWMH with a fixed proposal budget; the efficiency baseline.
pub fn run_baseline(
    obj: &Objective,
    eval_budget: usize,
    params: &SamplerParams,
    maximize: bool,
    start: &[f64],
    master_seed: u64,
) -> Result<RunHistory> {
    let mut history = RunHistory::new(maximize, start, obj.eval(start));
    history.cum_evals = 1;
    if eval_budget == 0 {
        history.status = RunStatus::IterLimit;
        return Ok(history);
    }
    let f_int = |x: &[f64]| if maximize { -obj.eval(x) } else { obj.eval(x) };
    let mut rng = substream(master_seed, "baseline", 0);
    let traj = rwmh_burst(start, params, StopRule::Steps(eval_budget), f_int, RecordMode::AcceptedOnly, &mut rng)?;
    for (i, s) in traj.states().enumerate() {
        let e = (traj.times[i] / params.dt).round() as u64 + 1;
        let fv = if maximize { -traj.fvals[i] } else { traj.fvals[i] };
        history.observe(e, fv, s);
    }
    history.cum_evals = traj.eval_count;
    history.iterations.push(IterationRecord {
        start: start.to_vec(),
        cloud_size: traj.len(),
        epsilon: 0.0,
        new_point: history.best_point.clone(),
        f_new: history.best_f,
        best_f: history.best_f,
        cum_evals: history.cum_evals,
        lift_extrapolated: false,
    });
    history.status = RunStatus::IterLimit;
    Ok(history)
}
