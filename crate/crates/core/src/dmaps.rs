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

//! Diffusion maps with alpha-normalization and Euclidean or Mahalanobis
//! kernels, local-covariance estimation with an SVD pseudo-inverse, a PCA
//! baseline, and test-manifold generators.
//!
//! The kernel matrix `K = D~^-1 W~` is non-symmetric but similar to the
//! symmetric `S = D~^-1/2 W~ D~^-1/2`; we eigendecompose `S` and transform the
//! eigenvectors back, which is the numerically stable route.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pinv_psd, sym_topk, SymMat};
use crate::points::{sq_dist, Points};
use crate::rng::substream;
use crate::stats::{median, spearman};

pub const MAX_AMBIENT_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    Mahalanobis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Characteristic kernel distance.
    pub epsilon: f64,
    /// Normalization exponent in [0, 1]; 1 recovers the Laplace-Beltrami
    /// operator under non-uniform sampling.
    pub alpha: f64,
    pub metric: Metric,
}

impl KernelSpec {
    pub fn new(epsilon: f64, alpha: f64, metric: Metric) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        assert!((0.0..=1.0).contains(&alpha), "alpha must be in [0, 1]");
        KernelSpec { epsilon, alpha, metric }
    }
}

/// Local covariance of burst endpoints around one data point, with its
/// rank-truncated SVD pseudo-inverse.
#[derive(Debug, Clone)]
pub struct LocalCovariance {
    pub point_index: usize,
    pub matrix: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    pub rank_used: usize,
}

/// Diffusion-map output.  `coords` holds the nontrivial eigenvectors
/// psi_1..psi_k as unit-norm columns (tau = 0, unscaled); psi_0 is checked to
/// be constant and dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Embedding {
    /// Eigenvalues of psi_1..psi_k, descending.
    pub eigenvalues: Vec<f64>,
    coords: Vec<Vec<f64>>,
    pub kernel: KernelSpec,
    /// Coordinate indices (0-based into `coords`) chosen for downstream use.
    pub selected: Vec<usize>,
    /// Raised when the kernel is so narrow that K is essentially the
    /// identity and the embedding is meaningless.
    pub degenerate: bool,
    /// Coordinates suspected to be higher harmonics of psi_1.
    pub harmonic_flags: Vec<bool>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.coords.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn k(&self) -> usize {
        self.coords.len()
    }

    /// Eigenvector column `j` (0 is psi_1).
    pub fn psi(&self, j: usize) -> &[f64] {
        &self.coords[j]
    }

    /// Selected coordinates of sample `i`.
    pub fn sample(&self, i: usize) -> Vec<f64> {
        self.selected.iter().map(|&j| self.coords[j][i]).collect()
    }

    /// Selected coordinates of all samples as a point cloud.
    pub fn selected_points(&self) -> Points {
        let mut p = Points::with_capacity(self.selected.len().max(1), self.len());
        for i in 0..self.len() {
            p.push(&self.sample(i));
        }
        p
    }

    pub fn select(&mut self, indices: &[usize]) {
        assert!(indices.iter().all(|&j| j < self.k()));
        self.selected = indices.to_vec();
    }

    /// Default automatic screening: the first two unflagged coordinates.
    pub fn select_non_harmonic(&mut self, count: usize) {
        let picks: Vec<usize> = (0..self.k()).filter(|&j| !self.harmonic_flags[j]).take(count).collect();
        self.selected = picks;
    }
}

/// Squared pairwise distances under the requested metric.
///
/// The Mahalanobis form is
/// `d2 = 0.5 (y_i - y_j)^T [C+(y_i) + C+(y_j)] (y_i - y_j)`.
pub fn pairwise_sq_dists(
    data: &Points,
    metric: Metric,
    covs: Option<&[LocalCovariance]>,
) -> Result<SymMat> {
    let m = data.len();
    let n = data.dim();
    assert!(n <= MAX_AMBIENT_DIM);
    match metric {
        Metric::Euclidean => Ok(SymMat::from_upper(m, |i, j| sq_dist(data.row(i), data.row(j)))),
        Metric::Mahalanobis => {
            let covs = covs.ok_or_else(|| {
                Error::InvalidParam { name: "covs", reason: "Mahalanobis metric needs one local covariance per sample".into() }
            })?;
            if covs.len() != m {
                return Err(Error::InvalidParam {
                    name: "covs",
                    reason: format!("expected {} covariances, got {}", m, covs.len()),
                });
            }
            // flatten pseudo-inverses for the inner loop
            let pinvs: Vec<Vec<f64>> = covs
                .iter()
                .map(|c| c.pinv.transpose().as_slice().to_vec()) // row-major
                .collect();
            Ok(SymMat::from_upper(m, |i, j| {
                if i == j {
                    return 0.0;
                }
                let xi = data.row(i);
                let xj = data.row(j);
                let mut dx = [0.0f64; MAX_AMBIENT_DIM];
                for a in 0..n {
                    dx[a] = xi[a] - xj[a];
                }
                let pi = &pinvs[i];
                let pj = &pinvs[j];
                let mut acc = 0.0;
                for a in 0..n {
                    let mut row = 0.0;
                    for b in 0..n {
                        row += (pi[a * n + b] + pj[a * n + b]) * dx[b];
                    }
                    acc += dx[a] * row;
                }
                (0.5 * acc).max(0.0)
            }))
        }
    }
}

/// Median pairwise distance from a squared-distance matrix.  Large inputs are
/// subsampled deterministically.
pub fn epsilon_from_sq_dists(d2: &SymMat) -> Result<f64> {
    let m = d2.n();
    if m < 2 {
        return Err(Error::Degenerate("need at least 2 points for the epsilon heuristic".into()));
    }
    let dists: Vec<f64> = if m <= 2500 {
        d2.upper_off_diagonal().map(|v| v.sqrt()).collect()
    } else {
        let mut rng = substream(0x45505349, "epsilon-sample", m as u64);
        (0..1_000_000)
            .map(|_| {
                let i = rng.gen_range(0..m);
                let mut j = rng.gen_range(0..m - 1);
                if j >= i {
                    j += 1;
                }
                d2.get(i, j).sqrt()
            })
            .collect()
    };
    let eps = median(&dists);
    if eps <= 0.0 {
        return Err(Error::Degenerate("all points identical; epsilon heuristic undefined".into()));
    }
    Ok(eps)
}

/// Median-distance kernel scale for a Euclidean point cloud.
pub fn epsilon_heuristic(data: &Points) -> Result<f64> {
    let d2 = pairwise_sq_dists(data, Metric::Euclidean, None)?;
    epsilon_from_sq_dists(&d2)
}

/// Gaussian kernel weights `W_ij = exp(-d2(i,j) / eps^2)`.
pub fn pairwise_weights(
    data: &Points,
    spec: &KernelSpec,
    covs: Option<&[LocalCovariance]>,
) -> Result<SymMat> {
    let mut d2 = pairwise_sq_dists(data, spec.metric, covs)?;
    let inv_eps2 = 1.0 / (spec.epsilon * spec.epsilon);
    d2.map_inplace(|v| (-v * inv_eps2).exp());
    Ok(d2)
}

/// Diffusion-map embedding from a weight matrix (consumed in place).
///
/// Forms `W~ = D^-alpha W D^-alpha`, the row-stochastic `K = D~^-1 W~`, and
/// returns the top-(k+1) right eigenpairs of `K` with the trivial psi_0
/// dropped.  Eigenvector signs are fixed so the entry of largest magnitude is
/// positive.
pub fn dmaps_embed(mut weights: SymMat, spec: &KernelSpec, k: usize) -> Result<Embedding> {
    let m = weights.n();
    if k + 1 >= m {
        return Err(Error::InvalidParam { name: "k", reason: format!("k + 1 = {} must be < m = {}", k + 1, m) });
    }
    let deg = weights.row_sums();
    if deg.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::Degenerate("kernel row with non-positive degree".into()));
    }
    if spec.alpha != 0.0 {
        let s: Vec<f64> = deg.iter().map(|d| d.powf(-spec.alpha)).collect();
        weights.scale_sym(&s);
    }
    let tilde_deg = weights.row_sums();
    let inv_sqrt: Vec<f64> = tilde_deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    weights.scale_sym(&inv_sqrt); // now the symmetric conjugate S

    let (vals, vecs) = sym_topk(&weights, k + 1)?;
    let lambda0 = vals[0];
    if (lambda0 - 1.0).abs() > 1e-8 {
        return Err(Error::Numerical(format!("leading diffusion eigenvalue {} is not 1", lambda0)));
    }
    for &v in &vals {
        if v.abs() > 1.0 + 1e-8 {
            return Err(Error::Numerical(format!("diffusion eigenvalue {} outside the spectral bound", v)));
        }
    }
    let degenerate = vals[1] > 1.0 - 1e-6;

    // transform back: psi = D~^-1/2 v, unit-normalized, sign-fixed
    let mut coords = Vec::with_capacity(k);
    for v in vecs.iter().skip(1) {
        let mut psi: Vec<f64> = v.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
        let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut maxidx = 0;
        for (i, x) in psi.iter().enumerate() {
            if x.abs() > psi[maxidx].abs() {
                maxidx = i;
            }
        }
        let sign = if psi[maxidx] < 0.0 { -1.0 } else { 1.0 };
        for x in psi.iter_mut() {
            *x *= sign / norm;
        }
        coords.push(psi);
    }
    if !degenerate {
        // psi_0 must be constant
        let psi0: Vec<f64> = vecs[0].iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
        let m0 = psi0.iter().sum::<f64>() / m as f64;
        let dev = psi0.iter().map(|x| (x - m0).abs()).fold(0.0f64, f64::max);
        if dev > 1e-6 * m0.abs().max(1e-300) {
            return Err(Error::Numerical(format!("trivial eigenvector not constant (max dev {:.3e})", dev)));
        }
    }

    // harmonic screening against psi_1
    let mut harmonic_flags = vec![false; coords.len()];
    if coords.len() > 1 {
        let abs1: Vec<f64> = coords[0].iter().map(|x| x.abs()).collect();
        for j in 1..coords.len() {
            let absj: Vec<f64> = coords[j].iter().map(|x| x.abs()).collect();
            if spearman(&absj, &abs1).abs() > 0.97 {
                harmonic_flags[j] = true;
            }
        }
    }

    Ok(Embedding {
        eigenvalues: vals[1..].to_vec(),
        coords,
        kernel: *spec,
        selected: (0..k).collect(),
        degenerate,
        harmonic_flags,
    })
}

/// Covariance of burst endpoints around their mean, with rank-`rank_d`
/// pseudo-inverse `C+ = sum s_m^-1 v_m v_m^T`.
pub fn local_covariance(
    point_index: usize,
    mut simulate_burst: impl FnMut(usize) -> Vec<f64>,
    n_bursts: usize,
    rank_d: usize,
) -> Result<LocalCovariance> {
    assert!(n_bursts >= 2);
    let first = simulate_burst(0);
    let n = first.len();
    assert!(rank_d >= 1 && rank_d <= n);
    let mut endpoints = Vec::with_capacity(n_bursts);
    endpoints.push(first);
    for b in 1..n_bursts {
        let e = simulate_burst(b);
        assert_eq!(e.len(), n);
        endpoints.push(e);
    }
    let mut mean = vec![0.0; n];
    for e in &endpoints {
        for (m, v) in mean.iter_mut().zip(e) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n_bursts as f64;
    }
    let mut c = DMatrix::zeros(n, n);
    for e in &endpoints {
        for a in 0..n {
            for b in 0..n {
                c[(a, b)] += (e[a] - mean[a]) * (e[b] - mean[b]);
            }
        }
    }
    c /= (n_bursts - 1) as f64;
    // symmetrize and check PSD
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.clone().symmetric_eigen();
    let emax = eig.eigenvalues.max();
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * emax.max(1e-300)) {
        return Err(Error::NonPsdCovariance { index: point_index });
    }
    let pinv = pinv_psd(&c, rank_d).map_err(|e| match e {
        Error::RankMisconfigured { value, rank } => Error::RankMisconfigured { value, rank },
        other => other,
    })?;
    Ok(LocalCovariance { point_index, matrix: c, pinv, rank_used: rank_d })
}

/// PCA baseline: top-k principal components of the centered data, plus the
/// full eigenvalue spectrum for gap inspection.
pub fn pca_embed(data: &Points, k: usize) -> Result<(DMatrix<f64>, Points, Vec<f64>)> {
    let m = data.len();
    let n = data.dim();
    assert!(k <= n);
    if m < 2 {
        return Err(Error::Degenerate("need at least 2 points for PCA".into()));
    }
    let mut mean = vec![0.0; n];
    for r in data.rows() {
        for (a, v) in mean.iter_mut().zip(r) {
            *a += v;
        }
    }
    for v in mean.iter_mut() {
        *v /= m as f64;
    }
    let mut cov = DMatrix::zeros(n, n);
    for r in data.rows() {
        for a in 0..n {
            for b in 0..n {
                cov[(a, b)] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    cov /= (m - 1) as f64;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut components = DMatrix::zeros(k, n);
    for (row, &i) in order.iter().take(k).enumerate() {
        let col = eig.eigenvectors.column(i);
        // sign fix as for diffusion coordinates
        let mut maxidx = 0;
        for a in 0..n {
            if col[a].abs() > col[maxidx].abs() {
                maxidx = a;
            }
        }
        let sign = if col[maxidx] < 0.0 { -1.0 } else { 1.0 };
        for a in 0..n {
            components[(row, a)] = sign * col[a];
        }
    }
    let mut projections = Points::with_capacity(k, m);
    for r in data.rows() {
        let mut proj = vec![0.0; k];
        for c in 0..k {
            for a in 0..n {
                proj[c] += components[(c, a)] * (r[a] - mean[a]);
            }
        }
        projections.push(&proj);
    }
    Ok((components, projections, spectrum))
}

/// Swiss-roll test data.
///
/// Parametrization: `t = 1.5 pi (1 + 2 u)`, point `(t cos t, h, t sin t)`
/// with `u ~ U(0,1)`, height `h ~ U(0, 21)`.  Arclength along the spiral is
/// `0.5 (t sqrt(1 + t^2) + asinh t)`.
pub struct SwissRoll {
    pub points: Points,
    pub arclength: Vec<f64>,
    pub height: Vec<f64>,
}

pub fn make_swiss_roll(m: usize, seed: u64) -> SwissRoll {
    let mut rng = substream(seed, "swiss-roll", 0);
    let mut points = Points::with_capacity(3, m);
    let mut arclength = Vec::with_capacity(m);
    let mut height = Vec::with_capacity(m);
    for _ in 0..m {
        let u: f64 = rng.gen();
        let t = 1.5 * std::f64::consts::PI * (1.0 + 2.0 * u);
        let h: f64 = 21.0 * rng.gen::<f64>();
        points.push(&[t * t.cos(), h, t * t.sin()]);
        arclength.push(0.5 * (t * (1.0 + t * t).sqrt() + t.asinh()));
        height.push(h);
    }
    SwissRoll { points, arclength, height }
}

/// Half of the semicircle transform's source interval.
pub const SEMICIRCLE_HALF_RANGE: f64 = 1.6;

/// Embeds a scalar onto a unit semicircle: the affine angle
/// `phi = pi (x + 1.6) / 3.2` maps [-1.6, 1.6] onto [0, pi] and the point is
/// `(cos phi, sin phi)`.  Smooth, injective, constant-speed.
pub fn semicircle_map(x: f64) -> [f64; 2] {
    let phi = std::f64::consts::PI * (x + SEMICIRCLE_HALF_RANGE) / (2.0 * SEMICIRCLE_HALF_RANGE);
    [phi.cos(), phi.sin()]
}

/// Maps plane coordinates onto a sphere of radius `rho`:
/// `(x, y) -> rho (cos v cos u, cos v sin u, sin v)` with `u = x / rho`,
/// `v = y / rho`.  Injective for `|y| < rho pi / 2`, `|x| < rho pi`.
pub fn sphere_map(x: f64, y: f64, rho: f64) -> [f64; 3] {
    let u = x / rho;
    let v = y / rho;
    [rho * v.cos() * u.cos(), rho * v.cos() * u.sin(), rho * v.sin()]
}
