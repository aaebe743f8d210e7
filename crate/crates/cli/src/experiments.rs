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

//! One runner per experiment.  Each takes the resolved config and an output
//! directory, executes the corresponding library pipeline, writes CSVs, and
//! returns the summary embedded in the manifest.

use rayon::prelude::*;
use serde_json::{json, Value};

use opt_manifold_core::chaos::{run_chaos_experiment, ChaosSpec, LorenzParams, NoiseMode};
use opt_manifold_core::dmaps::{
    dmaps_embed, epsilon_from_sq_dists, make_swiss_roll, pairwise_sq_dists, KernelSpec, Metric,
};
use opt_manifold_core::error::Error as CoreError;
use opt_manifold_core::linear2d::{run_linear2d_study, Linear2dSpec, Linear2dVariant};
use opt_manifold_core::objectives::{CylinderParams, Objective, ObjectiveId};
use opt_manifold_core::outer::{
    run_baseline, run_grid, run_ridge, GridChart, GridConfig, RidgeConfig, RunHistory, RunStatus,
};
use opt_manifold_core::rng::substream;
use opt_manifold_core::sampler::{langevin_em_burst, rwmh_burst, RecordMode, SamplerParams, StopRule};
use opt_manifold_core::sde::MaskRule;
use opt_manifold_core::stats::{mean, spearman, variance};

use crate::config::{Config, ConfigError};
use crate::manifest::{fmt, OutDir};

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Core(CoreError),
    Io(std::io::Error),
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "config error: {}", m),
            AppError::Core(e) => write!(f, "{}", e),
            AppError::Io(e) => write!(f, "io error: {}", e),
        }
    }
}

impl AppError {
    /// 2 = config, 3 = numerical failure, 4 = convergence/degeneracy abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Core(e) => match e {
                CoreError::InvalidParam { .. } | CoreError::DimensionMismatch { .. } => 2,
                CoreError::Degenerate(_)
                | CoreError::SafetyCap { .. }
                | CoreError::EmbeddingFailure(_) => 4,
                _ => 3,
            },
            AppError::Io(_) => 1,
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.0)
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        AppError::Core(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

type AResult<T> = std::result::Result<T, AppError>;

pub fn run_experiment(name: &str, cfg: &Config, out: &mut OutDir) -> AResult<Value> {
    match name {
        "fig1-density" => fig1_density(cfg, out),
        "swissroll" => swissroll(cfg, out),
        "ridge" => ridge(cfg, out),
        "baseline" => baseline(cfg, out),
        "cylinder" => cylinder(cfg, out),
        "grid-linear2d" => grid_linear2d(cfg, out),
        "chaos" | "chaos-additive" | "chaos-multiplicative" => chaos(cfg, out),
        _ => Err(AppError::Config(format!("unknown experiment `{}`", name))),
    }
}

// ---------------------------------------------------------------------------
// fig1-density: RWMH vs Langevin endpoint densities on the 1D quadratic
// ---------------------------------------------------------------------------

fn fig1_density(cfg: &Config, out: &mut OutDir) -> AResult<Value> {
    let t = cfg.get_pos_f64("sampler.T")?;
    let dt = cfg.get_pos_f64("sampler.dt")?;
    let n_real = cfg.get_usize("fig1.n_real")?;
    let n_steps = cfg.get_usize("fig1.n_steps")?;
    let x0 = cfg.get_f64("fig1.x0")?;
    let seed = cfg.get_u64("seed")?;
    if n_real == 0 || n_steps == 0 {
        return Err(AppError::Config("fig1.n_real and fig1.n_steps must be positive".into()));
    }

    let obj = Objective::new(ObjectiveId::Quad1D);
    let params = SamplerParams::new(t, dt);
    let rwmh: Vec<f64> = out.stage("rwmh", || {
        (0..n_real)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, "fig1-rwmh", i as u64);
                rwmh_burst(
                    &[x0],
                    &params,
                    StopRule::Steps(n_steps),
                    |x| obj.eval(x),
                    RecordMode::EveryStep,
                    &mut rng,
                )
                .map(|tr| tr.last_state()[0])
            })
            .collect::<Result<_, _>>()
    })?;
    let duration = n_steps as f64 * dt;
    let langevin: Vec<f64> = out.stage("langevin", || {
        (0..n_real)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, "fig1-langevin", i as u64);
                langevin_em_burst(&[x0], t, dt, duration, |x| vec![x[0]], &mut rng).last_state()[0]
            })
            .collect()
    });

    out.write_csv(
        "rwmh_endpoints.csv",
        "sample_id,x",
        rwmh.iter().enumerate().map(|(i, v)| format!("{},{}", i, fmt(*v))),
    )?;
    out.write_csv(
        "langevin_endpoints.csv",
        "sample_id,x",
        langevin.iter().enumerate().map(|(i, v)| format!("{},{}", i, fmt(*v))),
    )?;

    let tau = duration;
    Ok(json!({
        "rwmh_mean": mean(&rwmh),
        "rwmh_var": variance(&rwmh),
        "langevin_mean": mean(&langevin),
        "langevin_var": variance(&langevin),
        "ou_mean": x0 * (-tau).exp(),
        "ou_var": t * (1.0 - (-2.0 * tau).exp()),
    }))
}

// ---------------------------------------------------------------------------
// swissroll: Euclidean diffusion maps on the classic surface
// ---------------------------------------------------------------------------

fn swissroll(cfg: &Config, out: &mut OutDir) -> AResult<Value> {
    let n = cfg.get_usize("swissroll.n")?;
    let k = cfg.get_usize("dmaps.k")?;
    let alpha = cfg.get_f64("dmaps.alpha")?;
    let seed = cfg.get_u64("seed")?;
    if n < 10 || k == 0 {
        return Err(AppError::Config("swissroll.n must be >= 10 and dmaps.k >= 1".into()));
    }

    let roll = make_swiss_roll(n, seed);
    let mut d2 = out.stage("distances", || pairwise_sq_dists(&roll.points, Metric::Euclidean, None))?;
    let eps = match cfg.get_auto_f64("dmaps.epsilon")? {
        Some(e) => e,
        None => cfg.get_pos_f64("dmaps.epsilon_scale")? * epsilon_from_sq_dists(&d2)?,
    };
    let spec = KernelSpec::new(eps, alpha, Metric::Euclidean);
    let inv_eps2 = 1.0 / (eps * eps);
    d2.map_inplace(|v| (-v * inv_eps2).exp());
    let emb = out.stage("embed", || dmaps_embed(d2, &spec, k))?;

    let mut header = String::from("sample_id");
    for j in 1..=k {
        header.push_str(&format!(",psi{}", j));
    }
    header.push_str(",arclength,height");
    out.write_csv(
        "embedding.csv",
        &header,
        (0..n).map(|i| {
            let mut row = i.to_string();
            for j in 0..k {
                row.push(',');
                row.push_str(&fmt(emb.psi(j)[i]));
            }
            format!("{},{},{}", row, fmt(roll.arclength[i]), fmt(roll.height[i]))
        }),
    )?;
    out.write_csv(
        "spectrum.csv",
        "index,lambda",
        emb.eigenvalues.iter().enumerate().map(|(j, l)| format!("{},{}", j + 1, fmt(*l))),
    )?;

    let rho_arc: Vec<f64> = (0..k).map(|j| spearman(emb.psi(j), &roll.arclength)).collect();
    let rho_height: Vec<f64> = (0..k).map(|j| spearman(emb.psi(j), &roll.height)).collect();
    Ok(json!({
        "epsilon": eps,
        "eigenvalues": emb.eigenvalues,
        "harmonic_flags": emb.harmonic_flags,
        "spearman_arclength": rho_arc,
        "spearman_height": rho_height,
    }))
}

// ---------------------------------------------------------------------------
// outer-loop experiments
// ---------------------------------------------------------------------------

fn objective_from(cfg: &Config) -> AResult<Objective> {
    let tag = cfg.get_str("objective")?;
    let id = ObjectiveId::parse(&tag)
        .ok_or_else(|| AppError::Config(format!("config key `objective`: unknown tag `{}`", tag)))?;
    let mut obj = Objective::new(id);
    if cfg.values().contains_key("cyl.k1") {
        obj.cyl = CylinderParams {
            k1: cfg.get_pos_f64("cyl.k1")?,
            k2: cfg.get_pos_f64("cyl.k2")?,
            radius: cfg.get_pos_f64("cyl.R")?,
        };
    }
    Ok(obj)
}

fn write_history(out: &mut OutDir, history: &RunHistory) -> AResult<()> {
    let dim = history.best_point.len();
    let mut header = String::from("iter,evals,best_f");
    for j in 1..=dim {
        header.push_str(&format!(",x{}", j));
    }
    out.write_csv(
        "history.csv",
        &header,
        history.iterations.iter().enumerate().map(|(i, it)| {
            let mut row = format!("{},{},{}", i + 1, it.cum_evals, fmt(it.best_f));
            for v in &it.new_point {
                row.push(',');
                row.push_str(&fmt(*v));
            }
            row
        }),
    )?;
    out.write_csv(
        "curve.csv",
        "evals,best_f",
        history.curve.iter().map(|(e, f)| format!("{},{}", e, fmt(*f))),
    )?;
    Ok(())
}

fn history_summary(history: &RunHistory) -> Value {
    json!({
        "status": match history.status { RunStatus::Converged => "converged", RunStatus::IterLimit => "iter-limit" },
        "best_f": history.best_f,
        "best_point": history.best_point,
        "cum_evals": history.cum_evals,
        "n_iterations": history.iterations.len(),
        "epsilons": history.iterations.iter().map(|it| it.epsilon).collect::<Vec<_>>(),
    })
}

fn ridge(cfg: &Config, out: &mut OutDir) -> AResult<Value> {
    let rcfg = RidgeConfig {
        n_accepted: cfg.get_usize("sampler.n_accept")?,
        n_coarse_iters: cfg.get_usize("outer.n_iters")?,
        temperature: cfg.get_pos_f64("sampler.T")?,
        dt: cfg.get_pos_f64("sampler.dt")?,
        delta_scale: cfg.get_pos_f64("outer.delta_scale")?,
        ambiguous_rho: cfg.get_pos_f64("outer.ambiguous_rho")?,
        gh_delta: cfg.get_pos_f64("gh.delta")?,
        gh_epsilon_scale: cfg.get_pos_f64("gh.epsilon_scale")?,
    };
    let obj = objective_from(cfg)?;
    let start = cfg.get_f64_list("ridge.start")?;
    if start.len() != obj.dim() {
        return Err(AppError::Config(format!(
            "config key `ridge.start`: expected {} coordinates, got {}",
            obj.dim(),
            start.len()
        )));
    }
    let seed = cfg.get_u64("seed")?;
    let history = out.stage("run", || run_ridge(&rcfg, &obj, &start, seed))?;
    write_history(out, &history)?;
    let summary = history_summary(&history);
    out.write_json("history.json", &json!({ "config": cfg.values(), "seed": seed, "run": summary }))?;
    Ok(summary)
}

fn baseline(cfg: &Config, out: &mut OutDir) -> AResult<Value> {
    let params = SamplerParams::new(cfg.get_pos_f64("sampler.T")?, cfg.get_pos_f64("sampler.dt")?);
    let obj = objective_from(cfg)?;
    let start = cfg.get_f64_list("baseline.start")?;
    if start.len() != obj.dim() {
        return Err(AppError::Config(format!(
            "config key `baseline.start`: expected {} coordinates, got {}",
            obj.dim(),
            start.len()
        )));
    }
    let budget = cfg.get_usize("baseline.budget")?;
    let maximize = cfg.get_bool("baseline.maximize")?;
    let seed = cfg.get_u64("seed")?;
    let history = out.stage("run", || run_baseline(&obj, budget, &params, maximize, &start, seed))?;
    write_history(out, &history)?;
    let summary = history_summary(&history);
    out.write_json("history.json", &json!({ "config": cfg.values(), "seed": seed, "run": summary }))?;
    Ok(summary)
}

fn cylinder(cfg: &Config, out: &mut OutDir) -> AResult<Value> {
    let radius = cfg.get_pos_f64("cyl.R")?;
    let degree = cfg.get_usize("outer.surface_degree")?;
    if degree != 1 && degree != 2 {
        return Err(AppError::Config(format!(
            "config key `outer.surface_degree`: must be 1 or 2, got {}",
            degree
        )));
    }
    let gcfg = GridConfig {
        chart: GridChart::Cylinder { radius },
        shape: (cfg.get_usize("grid.nx")?, cfg.get_usize("grid.ny")?),
        extent: (cfg.get_pos_f64("grid.extent_x")?, cfg.get_pos_f64("grid.extent_y")?),
        n_traj: cfg.get_usize("sampler.n_traj")?,
        duration: cfg.get_pos_f64("sampler.burst_duration")?,
        temperature: cfg.get_pos_f64("sampler.T")?,
        dt: cfg.get_pos_f64("sampler.dt")?,
        n_coarse_iters: cfg.get_usize("outer.n_iters")?,
        t_ode: cfg.get_pos_f64("outer.t_ode")?,
        drift_tol: cfg.get_pos_f64("outer.drift_tol")?,
        surface_degree: degree,
        mask_rule: MaskRule::KeepAll,
        gh_delta: cfg.get_pos_f64("gh.delta")?,
        gh_epsilon_scale: cfg.get_pos_f64("gh.epsilon_scale")?,
        hull_margin: cfg.get_pos_f64("outer.hull_margin")?,
    };
    let obj = objective_from(cfg)?;
    let theta0 = cfg.get_f64("cylinder.start_theta")?;
    let z0 = cfg.get_f64("cylinder.start_z")?;
    let start = [radius * theta0.cos(), radius * theta0.sin(), z0];
    let seed = cfg.get_u64("seed")?;
    let history = out.stage("run", || run_grid(&gcfg, &obj, &start, seed))?;
    write_history(out, &history)?;
    let p = &history.best_point;
    let theta_final = p[1].atan2(p[0]);
    let r_final = (p[0] * p[0] + p[1] * p[1]).sqrt();
    let mut summary = history_summary(&history);
    summary["theta_final"] = json!(theta_final);
    summary["r_final"] = json!(r_final);
    summary["z_final"] = json!(p[2]);
    out.write_json("history.json", &json!({ "config": cfg.values(), "seed": seed, "run": summary }))?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// grid-linear2d: constant-gradient coefficient recovery
// ---------------------------------------------------------------------------

fn variant_tag(v: Linear2dVariant) -> &'static str {
    match v {
        Linear2dVariant::Euclidean => "euclidean",
        Linear2dVariant::MahalanobisSphere => "mahalanobis-sphere",
        Linear2dVariant::EuclideanTransformed => "euclidean-transformed",
    }
}

fn grid_linear2d(cfg: &Config, out: &mut OutDir) -> AResult<Value> {
    let degree = cfg.get_usize("sde.surface_degree")?;
    if degree != 1 && degree != 2 {
        return Err(AppError::Config(format!(
            "config key `sde.surface_degree`: must be 1 or 2, got {}",
            degree
        )));
    }
    let spec = Linear2dSpec {
        nx: cfg.get_usize("lin2d.nx")?,
        ny: cfg.get_usize("lin2d.ny")?,
        n_traj: cfg.get_usize("lin2d.n_traj")?,
        duration: cfg.get_pos_f64("lin2d.duration")?,
        dt: cfg.get_pos_f64("lin2d.dt")?,
        mu: cfg.get_f64("lin2d.mu")?,
        nu: cfg.get_f64("lin2d.nu")?,
        temperature: cfg.get_pos_f64("sampler.T")?,
        deriv_offset_frac: cfg.get_pos_f64("lin2d.deriv_offset_frac")?,
        n_cov_bursts: cfg.get_usize("lin2d.n_cov_bursts")?,
        dt_cov: cfg.get_pos_f64("lin2d.dt_cov")?,
        sphere_rho: cfg.get_pos_f64("lin2d.sphere_rho")?,
        kernel_epsilon: cfg.get_auto_f64("dmaps.epsilon")?,
        kernel_epsilon_scale: cfg.get_pos_f64("dmaps.epsilon_scale")?,
        mask_rule: MaskRule::RelativeMedian(cfg.get_pos_f64("sde.mask_frac")?),
        surface_degree: degree,
        ..Linear2dSpec::default()
    };
    let variant_key = cfg.get_str("lin2d.variant")?;
    let variants: Vec<Linear2dVariant> = match variant_key.as_str() {
        "euclidean" => vec![Linear2dVariant::Euclidean],
        "mahalanobis-sphere" => vec![Linear2dVariant::MahalanobisSphere],
        "euclidean-transformed" => vec![Linear2dVariant::EuclideanTransformed],
        "all" => vec![
            Linear2dVariant::Euclidean,
            Linear2dVariant::MahalanobisSphere,
            Linear2dVariant::EuclideanTransformed,
        ],
        other => {
            return Err(AppError::Config(format!(
                "config key `lin2d.variant`: unknown variant `{}`",
                other
            )))
        }
    };
    let seed = cfg.get_u64("seed")?;
    let study = out.stage("run", || run_linear2d_study(&spec, &variants, seed))?;

    let m = study.grid_xy.len();
    let mut fits = serde_json::Map::new();
    for rep in &study.reports {
        let tag = variant_tag(rep.variant);
        out.write_csv(
            &format!("coeff_field_{}.csv", tag),
            "grid_id,c1,c2,theta1,theta2,theta3,theta4,mask",
            (0..m).map(|g| {
                let c = rep.grid_psi.row(g);
                format!(
                    "{},{},{},{},{},{},{},{}",
                    g,
                    fmt(c[0]),
                    fmt(c[1]),
                    fmt(rep.theta_est[g][0]),
                    fmt(rep.theta_est[g][1]),
                    fmt(rep.theta_est[g][2]),
                    fmt(rep.theta_est[g][3]),
                    rep.mask[g] as u8
                )
            }),
        )?;
        for ch in 0..4 {
            out.write_csv(
                &format!("compare_theta{}_{}.csv", ch + 1, tag),
                "point_id,x_or_psi,theoretical,estimated_direct,estimated_pluggedin",
                (0..m).map(|g| {
                    let c = rep.grid_psi.row(g);
                    format!(
                        "{},{},{},{},{}",
                        g,
                        fmt(c[0]),
                        fmt(study.theta_theo[g][ch]),
                        fmt(rep.theta_est[g][ch]),
                        fmt(rep.field.fits[ch].eval(c[0], c[1]))
                    )
                }),
            )?;
        }
        fits.insert(
            tag.to_string(),
            json!({
                "median_rel_err": rep.median_rel_err,
                "kernel_epsilon": rep.kernel_epsilon,
                "alignment": rep.alignment,
                "surface_coeffs": rep.field.fits.iter().map(|f| f.coeffs.to_vec()).collect::<Vec<_>>(),
                "kept": rep.mask.iter().filter(|&&b| b).count(),
            }),
        );
    }
    let summary = json!({ "variants": fits, "eigenvalues": study.eigenvalues });
    out.write_json("fits.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// chaos: fast Lorenz driver, additive or multiplicative coupling
// ---------------------------------------------------------------------------

fn chaos(cfg: &Config, out: &mut OutDir) -> AResult<Value> {
    let mode = match cfg.get_str("chaos.mode")?.as_str() {
        "additive" => NoiseMode::Additive,
        "multiplicative" => NoiseMode::Multiplicative,
        other => {
            return Err(AppError::Config(format!(
                "config key `chaos.mode`: expected additive|multiplicative, got `{}`",
                other
            )))
        }
    };
    let transform = match cfg.get_str("chaos.transform")?.as_str() {
        "none" => false,
        "semicircle" => true,
        other => {
            return Err(AppError::Config(format!(
                "config key `chaos.transform`: expected none|semicircle, got `{}`",
                other
            )))
        }
    };
    let spec = ChaosSpec {
        n_starts: cfg.get_usize("chaos.n_starts")?,
        n_traj: cfg.get_usize("chaos.n_traj")?,
        n_cov_bursts: cfg.get_usize("chaos.n_cov_bursts")?,
        dt_cov: cfg.get_pos_f64("chaos.dt_cov")?,
        deriv_offset: cfg.get_pos_f64("chaos.deriv_offset")?,
        transform,
        kernel_epsilon: cfg.get_auto_f64("dmaps.epsilon")?,
        kernel_epsilon_scale: cfg.get_pos_f64("dmaps.epsilon_scale")?,
        psi_fit_degree: cfg.get_usize("psifit.degree")? as u32,
        ..ChaosSpec::default()
    };
    if spec.n_starts < 2 || spec.n_traj < 2 {
        return Err(AppError::Config(
            "chaos.n_starts and chaos.n_traj must both be at least 2".into(),
        ));
    }
    let params = LorenzParams {
        dt_int: cfg.get_pos_f64("chaos.dt_int")?,
        ..LorenzParams::for_mode(mode)
    };
    let seed = cfg.get_u64("seed")?;
    let report = out.stage("run", || run_chaos_experiment(&spec, &params, mode, seed))?;

    out.write_csv(
        "coeff_compare_drift.csv",
        "point_id,x_or_psi,theoretical,estimated_direct,estimated_pluggedin",
        (0..report.x0.len()).map(|s| {
            format!(
                "{},{},{},{},{}",
                s,
                fmt(report.x0[s]),
                fmt(report.xi1_plugin_global[s]),
                fmt(report.xi1_direct[s]),
                fmt(report.xi1_plugin_point[s])
            )
        }),
    )?;
    out.write_csv(
        "coeff_compare_diff.csv",
        "point_id,x_or_psi,theoretical,estimated_direct,estimated_pluggedin",
        (0..report.x0.len()).map(|s| {
            format!(
                "{},{},{},{},{}",
                s,
                fmt(report.x0[s]),
                fmt(report.xi2_plugin_global[s]),
                fmt(report.xi2_direct[s]),
                fmt(report.xi2_plugin_point[s])
            )
        }),
    )?;
    let header = if transform { "sample_id,x,psi1,psi1_transformed" } else { "sample_id,x,psi1" };
    out.write_csv(
        "embedding.csv",
        header,
        (0..report.embedding_x.len()).map(|i| {
            let mut row = format!("{},{},{}", i, fmt(report.embedding_x[i]), fmt(report.embedding_psi[i]));
            if let Some(tr) = &report.embedding_psi_transformed {
                row.push(',');
                row.push_str(&fmt(tr[i]));
            }
            row
        }),
    )?;

    let summary = json!({
        "mode": match mode { NoiseMode::Additive => "additive", NoiseMode::Multiplicative => "multiplicative" },
        "a_hat": report.a_hat,
        "a_se": report.a_se,
        "sigma_hat": report.sigma_hat,
        "drift_coeffs": report.drift_coeffs,
        "drift_se": report.drift_se,
        "diff2_coeffs": report.diff2_coeffs,
        "diff2_se": report.diff2_se,
        "drift_full_coeffs": report.drift_full_coeffs,
        "drift_full_se": report.drift_full_se,
        "spearman_psi_x": report.spearman_psi_x,
        "transform_correlation": report.transform_correlation,
        "kernel_epsilon": report.kernel_epsilon,
        "psi_fit_coeffs": report.psi_fit_coeffs,
        "theta1": report.theta1,
        "theta2": report.theta2,
        "x0": report.x0,
        "psi_at_start": report.psi_at_start,
        "dpsi": report.dpsi,
        "d2psi": report.d2psi,
    });
    out.write_json("fits.json", &summary)?;
    Ok(summary)
}
