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

//! Inner optimizer: constant-temperature random-walk Metropolis-Hastings.
//!
//! An Euler-Maruyama integrator of the Langevin equation is included as the
//! equivalence oracle; it needs gradients and is test/diagnostic machinery,
//! not part of the derivative-free path.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::Points;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplerParams {
    /// Temperature, in objective units.
    pub temperature: f64,
    /// Proposal time step; the isotropic normal proposal has variance
    /// `2 T dt` per coordinate.
    pub dt: f64,
    /// Hard cap on proposals per burst before the run is declared degenerate.
    pub safety_cap: u64,
}

impl SamplerParams {
    pub fn new(temperature: f64, dt: f64) -> Self {
        assert!(temperature > 0.0 && dt > 0.0);
        SamplerParams { temperature, dt, safety_cap: 1_000_000 }
    }

    pub fn proposal_std(&self) -> f64 {
        (2.0 * self.temperature * self.dt).sqrt()
    }
}

/// Time-stamped state sequence from a single burst.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    dim: usize,
    pub times: Vec<f64>,
    states: Vec<f64>,
    /// Objective value at each recorded state (NaN where unavailable, e.g.
    /// gradient-driven integration).
    pub fvals: Vec<f64>,
    pub accepted_count: u64,
    pub eval_count: u64,
    /// Proposals with a non-finite objective value (rejected, diagnosed).
    pub nonfinite_count: u64,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Trajectory {
            dim,
            times: Vec::new(),
            states: Vec::new(),
            fvals: Vec::new(),
            accepted_count: 0,
            eval_count: 0,
            nonfinite_count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, state: &[f64]) {
        self.push_with_f(t, state, f64::NAN);
    }

    pub fn push_with_f(&mut self, t: f64, state: &[f64], f: f64) {
        debug_assert_eq!(state.len(), self.dim);
        if let Some(&last) = self.times.last() {
            debug_assert!(t > last, "times must be strictly increasing");
        }
        self.times.push(t);
        self.states.extend_from_slice(state);
        self.fvals.push(f);
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn to_points(&self) -> Points {
        let mut p = Points::with_capacity(self.dim, self.len());
        for s in self.states() {
            p.push(s);
        }
        p
    }
}

/// Ensemble of bursts sharing one start point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BurstEnsemble {
    pub start: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub dt_burst: f64,
}

impl BurstEnsemble {
    pub fn endpoints(&self) -> Points {
        let dim = self.start.len();
        let mut p = Points::with_capacity(dim, self.trajectories.len());
        for t in &self.trajectories {
            p.push(t.last_state());
        }
        p
    }

    pub fn total_evals(&self) -> u64 {
        self.trajectories.iter().map(|t| t.eval_count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Stop once this many proposals have been accepted.
    Accepted(usize),
    /// Stop after exactly this many proposals.
    Steps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordMode {
    /// Record accepted states only (rejections collapse).
    AcceptedOnly,
    /// Record the current state after every proposal, repeats included.
    /// Required by fixed-step increment estimators.
    EveryStep,
}

/// Metropolis acceptance probability for an objective increase of `delta_f`.
pub fn acceptance_probability(delta_f: f64, temperature: f64) -> f64 {
    if !delta_f.is_finite() {
        return 0.0;
    }
    (-delta_f / temperature).exp().min(1.0)
}

/// One RWMH step.  Proposes `y ~ N(x, 2 T dt I)` and accepts with probability
/// `min(1, exp(-(f(y) - f(x)) / T))`.
pub fn rwmh_step(
    x: &[f64],
    params: &SamplerParams,
    f: impl Fn(&[f64]) -> f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, bool) {
    let fx = f(x);
    let std = params.proposal_std();
    let y: Vec<f64> = x
        .iter()
        .map(|&xi| xi + std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let fy = f(&y);
    let a = acceptance_probability(fy - fx, params.temperature);
    if rng.gen::<f64>() < a {
        (y, true)
    } else {
        (x.to_vec(), false)
    }
}

/// A burst of RWMH steps from `start` until the stop rule fires.
pub fn rwmh_burst(
    start: &[f64],
    params: &SamplerParams,
    stop: StopRule,
    f: impl Fn(&[f64]) -> f64,
    record: RecordMode,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    if let StopRule::Accepted(n) = stop {
        if n < 1 {
            return Err(Error::InvalidParam { name: "stop.n_accepted", reason: "must be >= 1".into() });
        }
    }
    let dim = start.len();
    let std = params.proposal_std();
    let mut traj = Trajectory::new(dim);
    let mut x = start.to_vec();
    let mut fx = f(&x);
    traj.push_with_f(0.0, start, fx);
    traj.eval_count = 1;

    let mut proposals: u64 = 0;
    let mut y = vec![0.0; dim];
    loop {
        match stop {
            StopRule::Accepted(n) => {
                if traj.accepted_count as usize >= n {
                    break;
                }
            }
            StopRule::Steps(n) => {
                if proposals as usize >= n {
                    break;
                }
            }
        }
        if proposals >= params.safety_cap {
            return Err(Error::SafetyCap { cap: params.safety_cap, accepted: traj.accepted_count });
        }
        proposals += 1;
        for i in 0..dim {
            y[i] = x[i] + std * rng.sample::<f64, _>(StandardNormal);
        }
        let fy = f(&y);
        traj.eval_count += 1;
        let accepted = if !fy.is_finite() {
            traj.nonfinite_count += 1;
            // still consume the uniform so the stream does not depend on f
            let _ = rng.gen::<f64>();
            false
        } else {
            rng.gen::<f64>() < acceptance_probability(fy - fx, params.temperature)
        };
        if accepted {
            x.copy_from_slice(&y);
            fx = fy;
            traj.accepted_count += 1;
        }
        let t = proposals as f64 * params.dt;
        match record {
            RecordMode::AcceptedOnly => {
                if accepted {
                    traj.push_with_f(t, &x, fx);
                }
            }
            RecordMode::EveryStep => traj.push_with_f(t, &x, fx),
        }
    }
    Ok(traj)
}

/// Euler-Maruyama discretization of the Langevin equation
/// `x_{k+1} = x_k - grad f(x_k) dt + sqrt(2 T dt) z`.
pub fn langevin_em_burst(
    start: &[f64],
    temperature: f64,
    dt: f64,
    duration: f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    let dim = start.len();
    let n_steps = (duration / dt).round() as usize;
    let noise = (2.0 * temperature * dt).sqrt();
    let mut traj = Trajectory::new(dim);
    traj.push(0.0, start);
    let mut x = start.to_vec();
    for k in 0..n_steps {
        let g = grad(&x);
        traj.eval_count += 1;
        for i in 0..dim {
            x[i] += -g[i] * dt + noise * rng.sample::<f64, _>(StandardNormal);
        }
        traj.accepted_count += 1;
        traj.push((k + 1) as f64 * dt, &x);
    }
    traj
}

/// Independent RWMH burst ensembles at each start point.
///
/// Each trajectory runs `duration / dt` proposals on its own RNG substream,
/// indexed by `(start, trajectory)`, so results do not depend on scheduling.
pub fn ensemble_bursts(
    starts: &Points,
    n_traj: usize,
    duration: f64,
    params: &SamplerParams,
    f: &(impl Fn(&[f64]) -> f64 + Sync),
    record: RecordMode,
    master_seed: u64,
    label: &str,
) -> Result<Vec<BurstEnsemble>> {
    assert!(n_traj >= 1);
    let n_steps = (duration / params.dt).round() as usize;
    let jobs: Vec<(usize, usize)> = (0..starts.len())
        .flat_map(|s| (0..n_traj).map(move |t| (s, t)))
        .collect();
    let trajs: Vec<Result<Trajectory>> = jobs
        .par_iter()
        .map(|&(s, t)| {
            let mut rng = substream(master_seed, label, (s * n_traj + t) as u64);
            rwmh_burst(starts.row(s), params, StopRule::Steps(n_steps), f, record, &mut rng)
        })
        .collect();
    let mut out = Vec::with_capacity(starts.len());
    let mut it = trajs.into_iter();
    for s in 0..starts.len() {
        let mut ens = BurstEnsemble {
            start: starts.row(s).to_vec(),
            trajectories: Vec::with_capacity(n_traj),
            dt_burst: duration,
        };
        for _ in 0..n_traj {
            ens.trajectories.push(it.next().unwrap()?);
        }
        out.push(ens);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, variance};

    fn rng(i: u64) -> ChaCha8Rng {
        substream(42, "sampler-test", i)
    }

    #[test]
    fn constant_objective_always_accepts() {
        let params = SamplerParams::new(0.5, 1e-3);
        let mut r = rng(0);
        for _ in 0..200 {
            let (_, acc) = rwmh_step(&[0.0, 0.0], &params, |_| 3.0, &mut r);
            assert!(acc);
        }
        assert_eq!(acceptance_probability(0.0, 0.5), 1.0);
    }

    #[test]
    fn ln2_increase_accepts_half_the_time() {
        let t = 0.7;
        assert!((acceptance_probability(t * 2f64.ln(), t) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_steps_burst_contains_only_start() {
        let params = SamplerParams::new(0.5, 1e-3);
        let traj =
            rwmh_burst(&[1.0], &params, StopRule::Steps(0), |x| 0.5 * x[0] * x[0], RecordMode::EveryStep, &mut rng(1))
                .unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.state(0), &[1.0]);
    }

    #[test]
    fn pure_random_walk_increment_variance() {
        // constant objective: every proposal accepted, increments ~ N(0, 2 T dt)
        let params = SamplerParams::new(0.5, 1e-3);
        let traj =
            rwmh_burst(&[0.0], &params, StopRule::Steps(20_000), |_| 1.0, RecordMode::EveryStep, &mut rng(2))
                .unwrap();
        let incs: Vec<f64> = (1..traj.len()).map(|i| traj.state(i)[0] - traj.state(i - 1)[0]).collect();
        let v = variance(&incs);
        let expect = 2.0 * 0.5 * 1e-3;
        assert!((v - expect).abs() / expect < 0.05, "var {} expect {}", v, expect);
    }

    #[test]
    fn empirical_acceptance_matches_quadrature_oracle() {
        // Quad1D at x0 = 1: acceptance integral E[min(1, exp(-(f(y)-f(x))/T))]
        // against the proposal density, by direct numerical integration.
        let t = 0.5;
        let dt = 1e-3;
        let params = SamplerParams::new(t, dt);
        let x0 = 1.0f64;
        let std = params.proposal_std();
        let f = |x: &[f64]| 0.5 * x[0] * x[0];
        // quadrature oracle
        let mut p_acc = 0.0;
        let n = 400_000;
        let lo = x0 - 8.0 * std;
        let hi = x0 + 8.0 * std;
        let h = (hi - lo) / n as f64;
        for i in 0..n {
            let y = lo + (i as f64 + 0.5) * h;
            let dens = (-(y - x0) * (y - x0) / (2.0 * std * std)).exp()
                / (std * (2.0 * std::f64::consts::PI).sqrt());
            p_acc += acceptance_probability(f(&[y]) - f(&[x0]), t) * dens * h;
        }
        // empirical
        let n_prop = 100_000;
        let mut r = rng(3);
        let mut acc = 0u64;
        for _ in 0..n_prop {
            let (_, a) = rwmh_step(&[x0], &params, f, &mut r);
            if a {
                acc += 1;
            }
        }
        let emp = acc as f64 / n_prop as f64;
        let se = (p_acc * (1.0 - p_acc) / n_prop as f64).sqrt();
        assert!((emp - p_acc).abs() < 2.0 * se + 1e-3, "emp {} oracle {}", emp, p_acc);
    }

    #[test]
    fn nonfinite_objective_rejected_and_counted() {
        let params = SamplerParams::new(0.5, 1e-3);
        let f = |x: &[f64]| if x[0] > 0.0 { f64::NAN } else { 0.0 };
        let traj =
            rwmh_burst(&[-5.0], &params, StopRule::Steps(100), f, RecordMode::EveryStep, &mut rng(4)).unwrap();
        // starting far negative, every proposal stays near -5 but NaN region untouched
        assert_eq!(traj.nonfinite_count, 0);
        let traj =
            rwmh_burst(&[0.0], &params, StopRule::Steps(500), f, RecordMode::EveryStep, &mut rng(5)).unwrap();
        assert!(traj.nonfinite_count > 0);
        for s in traj.states() {
            assert!(s[0] <= 0.0);
        }
    }

    #[test]
    fn safety_cap_errors_on_degenerate_pairing() {
        let mut params = SamplerParams::new(1e-12, 1e-3);
        params.safety_cap = 2_000;
        // starting at the kink of a steep |x| at tiny temperature, every
        // proposal is uphill and essentially never accepted
        let res = rwmh_burst(
            &[0.0],
            &params,
            StopRule::Accepted(100),
            |x| 1e12 * x[0].abs(),
            RecordMode::AcceptedOnly,
            &mut rng(6),
        );
        assert!(matches!(res, Err(Error::SafetyCap { .. })));
    }

    #[test]
    fn langevin_brownian_when_gradient_vanishes() {
        let t = 0.5;
        let dt = 1e-3;
        let dur = 0.05;
        let mut ends = Vec::new();
        for i in 0..4000 {
            let mut r = rng(100 + i);
            let traj = langevin_em_burst(&[0.0], t, dt, dur, |_| vec![0.0], &mut r);
            ends.push(traj.last_state()[0]);
        }
        let v = variance(&ends);
        let expect = 2.0 * t * dur;
        assert!((v - expect).abs() / expect < 0.1, "var {} expect {}", v, expect);
        assert!(mean(&ends).abs() < 3.0 * (expect / 4000.0).sqrt() + 1e-3);
    }

    #[test]
    fn langevin_ou_moments_on_quad() {
        // f = 0.5 x^2 gives an OU process: mean e^{-t} x0, var T (1 - e^{-2t})
        let t_temp = 0.5;
        let dt = 1e-3;
        let dur = 0.1;
        let mut ends = Vec::new();
        for i in 0..10_000 {
            let mut r = rng(5000 + i);
            let traj = langevin_em_burst(&[1.0], t_temp, dt, dur, |x| vec![x[0]], &mut r);
            ends.push(traj.last_state()[0]);
        }
        let m = mean(&ends);
        let v = variance(&ends);
        let m_expect = (-dur as f64).exp();
        let v_expect = t_temp * (1.0 - (-2.0 * dur as f64).exp());
        assert!((m - m_expect).abs() / m_expect < 0.05, "mean {} vs {}", m, m_expect);
        assert!((v - v_expect).abs() / v_expect < 0.05, "var {} vs {}", v, v_expect);
    }

    #[test]
    fn ensemble_shapes_and_determinism() {
        let params = SamplerParams::new(0.5, 1e-3);
        let obj = |x: &[f64]| x[0] + 2.0 * x[1];
        let starts = Points::from_rows(2, &[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let a = ensemble_bursts(&starts, 3, 0.01, &params, &obj, RecordMode::EveryStep, 9, "e").unwrap();
        let b = ensemble_bursts(&starts, 3, 0.01, &params, &obj, RecordMode::EveryStep, 9, "e").unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].trajectories.len(), 3);
        assert_eq!(a[0].trajectories[0].len(), 11); // start + 10 steps
        for (ea, eb) in a.iter().zip(&b) {
            for (ta, tb) in ea.trajectories.iter().zip(&eb.trajectories) {
                assert_eq!(ta.last_state(), tb.last_state());
            }
        }
    }

    #[test]
    fn single_one_step_trajectory() {
        let params = SamplerParams::new(0.5, 1e-3);
        let obj = |x: &[f64]| x[0];
        let starts = Points::from_rows(1, &[vec![0.0]]);
        let e = ensemble_bursts(&starts, 1, 1e-3, &params, &obj, RecordMode::EveryStep, 1, "one").unwrap();
        assert_eq!(e[0].trajectories[0].len(), 2);
    }
}
