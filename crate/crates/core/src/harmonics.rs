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

//! Geometric harmonics: out-of-sample extension of functions defined on a
//! point cloud via the Nystrom formula on a Gaussian kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lanczos_topk, sym_topk, SymMat};
use crate::points::{sq_dist, Points};

/// Fitted geometric-harmonics extender for one or more output functions
/// sharing the same input cloud and kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GHModel {
    pub centers: Points,
    pub epsilon: f64,
    pub delta: f64,
    /// Retained kernel eigenvalues sigma_j >= delta * sigma_max, descending.
    pub eigenvalues: Vec<f64>,
    /// Matching unit-norm eigenvectors.
    eigenvectors: Vec<Vec<f64>>,
    /// Projection coefficients, one row of length n_harmonics per output.
    coeffs: Vec<Vec<f64>>,
    pub out_dim: usize,
}

/// Fits geometric harmonics for `values` (one row per center, one column per
/// output function).  Eigenpairs with `sigma_j < delta * sigma_max` are
/// discarded; the retained count controls the interpolation/smoothing
/// trade-off.
pub fn gh_fit(centers: &Points, values: &Points, epsilon: f64, delta: f64) -> Result<GHModel> {
    let m = centers.len();
    assert_eq!(values.len(), m, "one value row per center");
    assert!(epsilon > 0.0 && delta > 0.0 && delta < 1.0);
    if m < 2 {
        return Err(Error::Degenerate("geometric harmonics needs at least 2 centers".into()));
    }
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let w = SymMat::from_upper(m, |i, j| {
        (-sq_dist(centers.row(i), centers.row(j)) * inv_eps2).exp()
    });
    // small clouds: full spectrum, then truncate; large: ask Lanczos for a
    // generous leading block
    let (vals, vecs) = if m <= 600 {
        sym_topk(&w, m)?
    } else {
        lanczos_topk(m, 300.min(m), 400, 1e-9, |x, y| w.matvec(x, y))?
    };
    let sigma_max = vals[0];
    if !(sigma_max > 0.0) {
        return Err(Error::Degenerate("kernel has no positive eigenvalue".into()));
    }
    let cut = delta * sigma_max;
    let keep = vals.iter().take_while(|&&s| s >= cut).count();
    if keep == 0 {
        return Err(Error::Degenerate("all kernel eigenvalues below the delta cut".into()));
    }
    if keep == vals.len() && m > 600 {
        return Err(Error::Numerical(
            "delta cut exceeds the computed leading block; lower delta or shrink the cloud".into(),
        ));
    }
    let eigenvalues: Vec<f64> = vals[..keep].to_vec();
    let eigenvectors: Vec<Vec<f64>> = vecs[..keep].to_vec();
    let out_dim = values.dim();
    let mut coeffs = vec![vec![0.0; keep]; out_dim];
    for (l, row) in coeffs.iter_mut().enumerate() {
        let f = values.column(l);
        for (j, phi) in eigenvectors.iter().enumerate() {
            row[j] = phi.iter().zip(&f).map(|(p, v)| p * v).sum();
        }
    }
    Ok(GHModel {
        centers: centers.clone(),
        epsilon,
        delta,
        eigenvalues,
        eigenvectors,
        coeffs,
        out_dim,
    })
}

impl GHModel {
    pub fn n_harmonics(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Nystrom extension at `x`.  The flag is raised when `x` is farther than
    /// `3 epsilon` from every center, where the extension decays toward zero
    /// and should not be trusted.
    pub fn extend(&self, x: &[f64]) -> (Vec<f64>, bool) {
        assert_eq!(x.len(), self.centers.dim());
        let m = self.centers.len();
        let inv_eps2 = 1.0 / (self.epsilon * self.epsilon);
        let mut kvec = Vec::with_capacity(m);
        let mut min_d2 = f64::INFINITY;
        for c in self.centers.rows() {
            let d2 = sq_dist(x, c);
            min_d2 = min_d2.min(d2);
            kvec.push((-d2 * inv_eps2).exp());
        }
        let extrapolating = min_d2.sqrt() > 3.0 * self.epsilon;
        // phi_j(x) = sigma_j^-1 sum_i k(x, y_i) phi_j(y_i)
        let phi_x: Vec<f64> = self
            .eigenvectors
            .iter()
            .zip(&self.eigenvalues)
            .map(|(phi, s)| kvec.iter().zip(phi).map(|(k, p)| k * p).sum::<f64>() / s)
            .collect();
        let out = self
            .coeffs
            .iter()
            .map(|c| c.iter().zip(&phi_x).map(|(a, b)| a * b).sum())
            .collect();
        (out, extrapolating)
    }

    /// Extension over many query points; returns values and per-point flags.
    pub fn extend_all(&self, xs: &Points) -> (Points, Vec<bool>) {
        let mut out = Points::with_capacity(self.out_dim, xs.len());
        let mut flags = Vec::with_capacity(xs.len());
        for r in xs.rows() {
            let (v, f) = self.extend(r);
            out.push(&v);
            flags.push(f);
        }
        (out, flags)
    }
}
