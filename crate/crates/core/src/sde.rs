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

//! Local drift/diffusion estimation for the effective SDE, and polynomial
//! coefficient surfaces over embedding-space grids.
//!
//! Two estimators are provided.  The "statistical" one reads the definitions
//! off directly (mean increment over dt; mean squared increment over dt,
//! optionally centered).  The "GMM" one solves the two Euler-Maruyama moment
//! conditions E[dx - th1 dt] = 0 and E[(dx - th1 dt)^2 - th2^2 dt] = 0, which
//! is exactly-identified and closed-form — algebraically it equals the
//! centered statistical estimator, so the two differ only by the raw/centered
//! second moment.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, lstsq_with_stderr};
use crate::points::Points;
use crate::sampler::BurstEnsemble;
use crate::stats::{mean, median};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffEstimate {
    /// Drift per coordinate.
    pub drift: Vec<f64>,
    /// Diffusion coefficient per coordinate (theta, not theta^2; >= 0).
    pub diffusion: Vec<f64>,
    /// Standard error of each drift entry.
    pub stderr: Option<Vec<f64>>,
    pub n_samples: usize,
    /// Set when a negative second-moment residual was clamped to zero.
    pub clamped: bool,
}

fn estimate_from_increments(
    deltas: &Points,
    dt: f64,
    centered: bool,
) -> Result<CoeffEstimate> {
    let n = deltas.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("need at least 2 increments, got {}", n)));
    }
    assert!(dt > 0.0);
    let d = deltas.dim();
    let mut drift = Vec::with_capacity(d);
    let mut diffusion = Vec::with_capacity(d);
    let mut stderr = Vec::with_capacity(d);
    let mut clamped = false;
    for c in 0..d {
        let col = deltas.column(c);
        let m = mean(&col);
        drift.push(m / dt);
        let second = if centered {
            col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64
        } else {
            col.iter().map(|x| x * x).sum::<f64>() / n as f64
        };
        let mut diff2 = second / dt;
        if diff2 < 0.0 {
            diff2 = 0.0;
            clamped = true;
        }
        diffusion.push(diff2.sqrt());
        let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        stderr.push((var / n as f64).sqrt() / dt);
    }
    Ok(CoeffEstimate { drift, diffusion, stderr: Some(stderr), n_samples: n, clamped })
}

/// Drift/diffusion at one start point from burst-ensemble endpoints.
///
/// `delta_t` must equal the burst duration.  `centered` subtracts the drift
/// term from the second moment (the raw form is the default elsewhere).
pub fn estimate_stat(ensemble: &BurstEnsemble, delta_t: f64, centered: bool) -> Result<CoeffEstimate> {
    let d = ensemble.start.len();
    let mut deltas = Points::with_capacity(d, ensemble.trajectories.len());
    for t in &ensemble.trajectories {
        let end = t.last_state();
        let row: Vec<f64> = end.iter().zip(&ensemble.start).map(|(e, s)| e - s).collect();
        deltas.push(&row);
    }
    estimate_from_increments(&deltas, delta_t, centered)
}

/// Method-of-moments (exactly-identified GMM) estimate from fixed-step
/// scalar series.  Consecutive increments of every series are pooled.
pub fn estimate_gmm(series: &[Vec<f64>], dt: f64) -> Result<CoeffEstimate> {
    let mut deltas = Points::with_capacity(1, 0);
    for s in series {
        for w in s.windows(2) {
            deltas.push(&[w[1] - w[0]]);
        }
    }
    estimate_from_increments(&deltas, dt, true)
}

/// GMM estimate from pre-computed increments (one row per increment).
pub fn estimate_gmm_increments(deltas: &Points, dt: f64) -> Result<CoeffEstimate> {
    estimate_from_increments(deltas, dt, true)
}

/// Raw-moment estimate from pre-computed increments.
pub fn estimate_stat_increments(deltas: &Points, dt: f64, centered: bool) -> Result<CoeffEstimate> {
    estimate_from_increments(deltas, dt, centered)
}

/// 2D polynomial surface p00 + p10 c1 + p01 c2 (+ p20 c1^2 + p11 c1 c2 +
/// p02 c2^2 for degree 2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolySurface {
    pub degree: usize,
    pub coeffs: [f64; 6],
}

impl PolySurface {
    pub fn eval(&self, c1: f64, c2: f64) -> f64 {
        let p = &self.coeffs;
        let mut v = p[0] + p[1] * c1 + p[2] * c2;
        if self.degree == 2 {
            v += p[3] * c1 * c1 + p[4] * c1 * c2 + p[5] * c2 * c2;
        }
        v
    }

    /// Gradient of the surface at (c1, c2).
    pub fn gradient(&self, c1: f64, c2: f64) -> [f64; 2] {
        let p = &self.coeffs;
        let mut g = [p[1], p[2]];
        if self.degree == 2 {
            g[0] += 2.0 * p[3] * c1 + p[4] * c2;
            g[1] += p[4] * c1 + 2.0 * p[5] * c2;
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaskRule {
    KeepAll,
    /// Drop grid points where |estimate| < frac * median(|estimate|) for any
    /// coefficient channel.
    RelativeMedian(f64),
}

impl Default for MaskRule {
    fn default() -> Self {
        MaskRule::RelativeMedian(0.05)
    }
}

/// Per-grid-point estimates plus fitted polynomial surfaces over embedding
/// coordinates.  Channels are ordered drift per coordinate, then diffusion
/// per coordinate (theta1, theta2, theta3, theta4 in the 2D case).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffField {
    pub grid_coords: Points,
    pub estimates: Vec<CoeffEstimate>,
    pub mask: Vec<bool>,
    pub fits: Vec<PolySurface>,
}

impl CoeffField {
    pub fn n_channels(&self) -> usize {
        self.fits.len()
    }

    pub fn channel_value(est: &CoeffEstimate, channel: usize) -> f64 {
        let d = est.drift.len();
        if channel < d {
            est.drift[channel]
        } else {
            est.diffusion[channel - d]
        }
    }
}

/// Fits a degree-1 or degree-2 polynomial surface per coefficient channel
/// over the masked-in grid points.
pub fn fit_coeff_surface(
    grid_coords: &Points,
    estimates: &[CoeffEstimate],
    degree: usize,
    mask_rule: MaskRule,
) -> Result<CoeffField> {
    let m = grid_coords.len();
    assert_eq!(grid_coords.dim(), 2, "surface fits are over 2D embedding grids");
    assert_eq!(estimates.len(), m);
    assert!(degree == 1 || degree == 2);
    let d = estimates[0].drift.len();
    let n_channels = 2 * d;

    let mut mask = vec![true; m];
    if let MaskRule::RelativeMedian(frac) = mask_rule {
        for ch in 0..n_channels {
            let vals: Vec<f64> = estimates.iter().map(|e| CoeffField::channel_value(e, ch).abs()).collect();
            let med = median(&vals);
            for (i, v) in vals.iter().enumerate() {
                if *v < frac * med {
                    mask[i] = false;
                }
            }
        }
    }
    let kept: Vec<usize> = (0..m).filter(|&i| mask[i]).collect();
    let p = if degree == 1 { 3 } else { 6 };
    if kept.len() < p {
        return Err(Error::Degenerate(format!(
            "only {} masked-in grid points for a degree-{} surface ({} needed)",
            kept.len(),
            degree,
            p
        )));
    }
    let mut design = DMatrix::zeros(kept.len(), p);
    for (row, &i) in kept.iter().enumerate() {
        let c = grid_coords.row(i);
        design[(row, 0)] = 1.0;
        design[(row, 1)] = c[0];
        design[(row, 2)] = c[1];
        if degree == 2 {
            design[(row, 3)] = c[0] * c[0];
            design[(row, 4)] = c[0] * c[1];
            design[(row, 5)] = c[1] * c[1];
        }
    }
    let mut fits = Vec::with_capacity(n_channels);
    for ch in 0..n_channels {
        let rhs = DVector::from_iterator(
            kept.len(),
            kept.iter().map(|&i| CoeffField::channel_value(&estimates[i], ch)),
        );
        let coef = lstsq(&design, &rhs)?;
        let mut coeffs = [0.0; 6];
        for (j, c) in coef.iter().enumerate() {
            coeffs[j] = *c;
        }
        fits.push(PolySurface { degree, coeffs });
    }
    Ok(CoeffField { grid_coords: grid_coords.clone(), estimates: estimates.to_vec(), mask, fits })
}

/// Least squares on the listed monomials only, with standard errors.
pub fn fit_polynomial_1d(xs: &[f64], ys: &[f64], basis: &[u32]) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < basis.len() {
        return Err(Error::Degenerate(format!(
            "{} points cannot determine {} basis coefficients",
            xs.len(),
            basis.len()
        )));
    }
    let mut design = DMatrix::zeros(xs.len(), basis.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &deg) in basis.iter().enumerate() {
            design[(i, j)] = x.powi(deg as i32);
        }
    }
    let rhs = DVector::from_column_slice(ys);
    let (coef, se) = lstsq_with_stderr(&design, &rhs)?;
    Ok((coef.iter().copied().collect(), se.iter().copied().collect()))
}

/// Evaluates a monomial-basis polynomial fitted by `fit_polynomial_1d`.
pub fn eval_polynomial_1d(coeffs: &[f64], basis: &[u32], x: f64) -> f64 {
    coeffs.iter().zip(basis).map(|(c, &d)| c * x.powi(d as i32)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand_distr::{Distribution, StandardNormal};

    fn brownian_deltas(n: usize, sigma2: f64, dt: f64, seed: u64) -> Points {
        let mut rng = substream(seed, "sde-brownian", 0);
        let mut p = Points::with_capacity(1, n);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            p.push(&[(sigma2 * dt).sqrt() * z]);
        }
        p
    }

    #[test]
    fn brownian_stub_moments() {
        let two_t = 0.4;
        let n = 20_000;
        let dt: f64 = 0.01;
        let deltas = brownian_deltas(n, two_t, dt, 1);
        let est = estimate_stat_increments(&deltas, dt, false).unwrap();
        // drift -> 0 within 3 sqrt(2T/(N dt))
        let bound = 3.0 * (two_t / (n as f64 * dt)).sqrt();
        assert!(est.drift[0].abs() < bound, "drift {} bound {}", est.drift[0], bound);
        let diff2 = est.diffusion[0] * est.diffusion[0];
        assert!((diff2 - two_t).abs() / two_t < 0.10, "diff2 {}", diff2);
    }

    #[test]
    fn ou_drift_against_simulated_oracle() {
        // dx = -x dt + sqrt(0.2) dW from x0 = 1: E[dx | x] = -x dt
        let mut rng = substream(2, "sde-ou", 0);
        let n = 10_000;
        let dt: f64 = 0.01;
        let x0: f64 = 1.0;
        let mut deltas = Points::with_capacity(1, n);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            deltas.push(&[-x0 * dt + (0.2 * dt).sqrt() * z]);
        }
        let est = estimate_stat_increments(&deltas, dt, false).unwrap();
        // se = sqrt(0.2 dt)/ (dt sqrt(n)) ~ 0.45
        assert!((est.drift[0] + 1.0).abs() < 3.0 * est.stderr.as_ref().unwrap()[0]);
        assert!((est.drift[0] + 1.0).abs() < 1.5);
    }

    #[test]
    fn gmm_deterministic_linear_series() {
        let c = 3.0;
        let dt = 0.1;
        let series: Vec<Vec<f64>> = vec![(0..50).map(|i| c * dt * i as f64).collect()];
        let est = estimate_gmm(&series, dt).unwrap();
        assert!((est.drift[0] - c).abs() < 1e-12);
        assert!(est.diffusion[0].abs() < 1e-12);
        assert!(!est.clamped);
    }

    #[test]
    fn gmm_matches_stat_within_mutual_stderr() {
        let dt: f64 = 0.01;
        let deltas = brownian_deltas(5000, 0.3, dt, 3);
        let stat = estimate_stat_increments(&deltas, dt, false).unwrap();
        let gmm = estimate_gmm_increments(&deltas, dt).unwrap();
        let se = stat.stderr.as_ref().unwrap()[0] + gmm.stderr.as_ref().unwrap()[0];
        assert!((stat.drift[0] - gmm.drift[0]).abs() < 2.0 * se);
        // raw vs centered second moment differ by (mean delta)^2/dt = O(dt)
        let raw2 = stat.diffusion[0] * stat.diffusion[0];
        let cen2 = gmm.diffusion[0] * gmm.diffusion[0];
        assert!(raw2 >= cen2);
        assert!((raw2 - cen2) < 0.01 * raw2 + 1e-4);
    }

    #[test]
    fn doubling_n_shrinks_stderr() {
        let dt: f64 = 0.01;
        let small = estimate_stat_increments(&brownian_deltas(4000, 0.5, dt, 4), dt, false).unwrap();
        let big = estimate_stat_increments(&brownian_deltas(16000, 0.5, dt, 4), dt, false).unwrap();
        let ratio = big.stderr.as_ref().unwrap()[0] / small.stderr.as_ref().unwrap()[0];
        assert!((ratio - 0.5).abs() < 0.1, "ratio {}", ratio);
    }

    #[test]
    fn too_few_increments_error() {
        let one = Points::from_rows(1, &[vec![0.1]]);
        assert!(estimate_stat_increments(&one, 0.01, false).is_err());
    }

    fn const_estimate(v: &[f64], s: &[f64]) -> CoeffEstimate {
        CoeffEstimate { drift: v.to_vec(), diffusion: s.to_vec(), stderr: None, n_samples: 100, clamped: false }
    }

    #[test]
    fn constant_field_fits_constant_surface() {
        let mut grid = Points::with_capacity(2, 12);
        for i in 0..4 {
            for j in 0..3 {
                grid.push(&[i as f64 * 0.1, j as f64 * 0.1]);
            }
        }
        let ests: Vec<CoeffEstimate> = (0..12).map(|_| const_estimate(&[2.0, -1.0], &[0.5, 0.5])).collect();
        let field = fit_coeff_surface(&grid, &ests, 2, MaskRule::KeepAll).unwrap();
        assert!((field.fits[0].coeffs[0] - 2.0).abs() < 1e-8);
        for k in 1..6 {
            assert!(field.fits[0].coeffs[k].abs() < 1e-8);
        }
        assert!((field.fits[1].coeffs[0] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_surface_recovered_with_noise() {
        let mut rng = substream(5, "surface", 0);
        let mut grid = Points::with_capacity(2, 0);
        let mut ests = Vec::new();
        let truth = |a: f64, b: f64| 1.0 + 0.5 * a - 0.3 * b + 0.2 * a * a - 0.1 * a * b + 0.4 * b * b;
        for i in 0..10 {
            for j in 0..10 {
                let (a, b) = (i as f64 * 0.2, j as f64 * 0.2);
                grid.push(&[a, b]);
                let noise: f64 = StandardNormal.sample(&mut rng);
                ests.push(const_estimate(&[truth(a, b) + 0.01 * noise, 0.0], &[1.0, 1.0]));
            }
        }
        // drift channel 1 is identically 0; keep all so the fit stays determined
        let field = fit_coeff_surface(&grid, &ests, 2, MaskRule::KeepAll).unwrap();
        let expect = [1.0, 0.5, -0.3, 0.2, -0.1, 0.4];
        for (got, want) in field.fits[0].coeffs.iter().zip(&expect) {
            assert!((got - want).abs() < 0.05, "{} vs {}", got, want);
        }
    }

    #[test]
    fn mask_drops_near_zero_points() {
        let mut grid = Points::with_capacity(2, 0);
        let mut ests = Vec::new();
        for i in 0..10 {
            let v = if i < 2 { 1e-4 } else { 1.0 + 0.01 * i as f64 };
            grid.push(&[i as f64 * 0.1, (i % 3) as f64 * 0.1]);
            ests.push(const_estimate(&[v, v], &[1.0, 1.0]));
        }
        let field = fit_coeff_surface(&grid, &ests, 1, MaskRule::default()).unwrap();
        assert_eq!(field.mask.iter().filter(|&&b| !b).count(), 2);
        assert!(!field.mask[0] && !field.mask[1]);
    }

    #[test]
    fn polynomial_1d_exact_cubic() {
        let xs: Vec<f64> = (0..20).map(|i| -1.0 + i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x - x.powi(3)).collect();
        let (coef, _se) = fit_polynomial_1d(&xs, &ys, &[1, 3]).unwrap();
        assert!((coef[0] - 1.0).abs() < 1e-10);
        assert!((coef[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn polynomial_1d_noisy_recovery_within_3_sigma() {
        let mut rng = substream(6, "poly1d", 0);
        let xs: Vec<f64> = (0..200).map(|i| -1.5 + i as f64 * 0.015).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.7 * x - 0.9 * x.powi(3) + 0.05 * z
            })
            .collect();
        let (coef, se) = fit_polynomial_1d(&xs, &ys, &[1, 3]).unwrap();
        assert!((coef[0] - 0.7).abs() < 3.0 * se[0]);
        assert!((coef[1] + 0.9).abs() < 3.0 * se[1]);
    }

    #[test]
    fn rank_deficient_basis_errors() {
        let xs = vec![0.0; 10];
        let ys = vec![1.0; 10];
        assert!(fit_polynomial_1d(&xs, &ys, &[1, 3]).is_err());
    }
}
