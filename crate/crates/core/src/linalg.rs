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

//! Dense symmetric matrices and partial eigensolvers.
//!
//! Kernel matrices in this crate reach ~1.2e4 x 1.2e4, where a full
//! eigendecomposition is too slow on one core.  Small matrices go through
//! nalgebra's dense symmetric solver; large ones through Lanczos with full
//! reorthogonalization, which only needs matrix-vector products.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::substream;

/// Full-storage symmetric matrix, row-major.
pub struct SymMat {
    n: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat { n, data: vec![0.0; n * n] }
    }

    /// Build from an upper-triangle generator `f(i, j)` with `i <= j`.
    pub fn from_upper(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in i..n {
                row[j] = f(i, j);
            }
        });
        // mirror lower triangle
        for i in 1..n {
            for j in 0..i {
                data[i * n + j] = data[j * n + i];
            }
        }
        SymMat { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data
            .par_chunks(self.n)
            .map(|row| row.iter().sum())
            .collect()
    }

    /// In-place conjugation `A <- diag(s) A diag(s)`.
    pub fn scale_sym(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.n);
        let n = self.n;
        self.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let si = s[i];
            for (j, v) in row.iter_mut().enumerate() {
                *v *= si * s[j];
            }
        });
    }

    /// In-place map over all entries.
    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64 + Sync) {
        self.data.par_iter_mut().for_each(|v| *v = f(*v));
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let n = self.n;
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        });
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Off-diagonal upper-triangle entries (i < j).
    pub fn upper_off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| self.get(i, j)))
    }
}

/// Top-k eigenpairs of a symmetric operator, descending by eigenvalue.
///
/// Dispatches to a dense solve for small matrices and Lanczos otherwise.
pub fn sym_topk(a: &SymMat, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    assert!(k <= a.n());
    if a.n() <= 600 {
        dense_sym_topk(a, k)
    } else {
        lanczos_topk(a.n(), k, 400, 1e-9, |x, y| a.matvec(x, y))
    }
}

pub fn dense_sym_topk(a: &SymMat, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let eig = a.to_dmatrix().symmetric_eigen();
    let mut order: Vec<usize> = (0..a.n()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let vals = order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .take(k)
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok((vals, vecs))
}

/// Lanczos iteration with full reorthogonalization.
///
/// Returns the `k` largest (algebraic) eigenpairs of the symmetric operator
/// `matvec`.  Deterministic: the start vector comes from a fixed substream.
pub fn lanczos_topk(
    n: usize,
    k: usize,
    max_iter: usize,
    tol: f64,
    matvec: impl Fn(&[f64], &mut [f64]),
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    assert!(k >= 1 && k <= n);
    let max_iter = max_iter.min(n);
    let mut rng = substream(0x4c414e43, "lanczos-start", n as u64);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new(); // beta[j] couples q_j and q_{j+1}

    let mut q = random_unit(n, &mut rng);
    let mut w = vec![0.0; n];
    let mut last_residual = f64::INFINITY;

    for j in 0..max_iter {
        basis.push(q.clone());
        matvec(&q, &mut w);
        let alpha = dot(&q, &w);
        alphas.push(alpha);
        for i in 0..n {
            w[i] -= alpha * q[i];
            if j > 0 {
                w[i] -= betas[j - 1] * basis[j - 1][i];
            }
        }
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for i in 0..n {
                    w[i] -= c * b[i];
                }
            }
        }
        let beta = norm(&w);
        if beta < 1e-13 {
            // invariant subspace found; restart with a fresh orthogonal vector
            if basis.len() >= k {
                let (vals, vecs, _res) = ritz_pairs(&alphas, &betas, 0.0, &basis, k);
                return Ok((vals, vecs));
            }
            q = random_unit(n, &mut rng);
            orthogonalize(&mut q, &basis);
            let nq = norm(&q);
            if nq < 1e-13 {
                break;
            }
            for v in q.iter_mut() {
                *v /= nq;
            }
            betas.push(0.0);
            continue;
        }
        betas.push(beta);
        q = w.iter().map(|v| v / beta).collect();

        let m = basis.len();
        let do_check = m >= k + 2 && (m % 20 == 0 || m == max_iter);
        if do_check {
            let (_, _, res) = ritz_pairs(&alphas, &betas, beta, &basis, k);
            last_residual = res;
            if res < tol {
                let (vals, vecs, _) = ritz_pairs(&alphas, &betas, beta, &basis, k);
                return Ok((vals, vecs));
            }
        }
    }
    if basis.len() >= k {
        let beta_last = *betas.last().unwrap_or(&0.0);
        let (vals, vecs, res) = ritz_pairs(&alphas, &betas, beta_last, &basis, k);
        if res < tol * 100.0 {
            return Ok((vals, vecs));
        }
        last_residual = res;
    }
    Err(Error::EigenFailure { residual: last_residual })
}

/// Ritz values/vectors for the current tridiagonal, plus the worst residual
/// bound `beta * |s_last|` among the top-k pairs.
fn ritz_pairs(
    alphas: &[f64],
    betas: &[f64],
    beta_next: f64,
    basis: &[Vec<f64>],
    k: usize,
) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let kk = k.min(m);
    let n = basis[0].len();
    let mut vals = Vec::with_capacity(kk);
    let mut vecs = Vec::with_capacity(kk);
    let mut worst = 0.0f64;
    for &idx in order.iter().take(kk) {
        let s = eig.eigenvectors.column(idx);
        vals.push(eig.eigenvalues[idx]);
        let res = beta_next * s[m - 1].abs() / eig.eigenvalues[idx].abs().max(1.0);
        worst = worst.max(res);
        let mut v = vec![0.0; n];
        for (j, b) in basis.iter().enumerate() {
            let c = s[j];
            for i in 0..n {
                v[i] += c * b[i];
            }
        }
        let nv = norm(&v);
        for x in v.iter_mut() {
            *x /= nv;
        }
        vecs.push(v);
    }
    (vals, vecs, worst)
}

fn random_unit(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nv = norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    v
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(b, v);
        for i in 0..v.len() {
            v[i] -= c * b[i];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Pseudo-inverse of a symmetric PSD matrix keeping exactly `rank` leading
/// eigendirections: `C^+ = sum s_m^-1 v_m v_m^T`.
pub fn pinv_psd(c: &DMatrix<f64>, rank: usize) -> Result<DMatrix<f64>> {
    let n = c.nrows();
    assert!(rank >= 1 && rank <= n);
    let eig = c.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut pinv = DMatrix::zeros(n, n);
    for &idx in order.iter().take(rank) {
        let s = eig.eigenvalues[idx];
        if s < 1e-14 {
            return Err(Error::RankMisconfigured { value: s, rank });
        }
        let v = eig.eigenvectors.column(idx);
        pinv += v * v.transpose() / s;
    }
    Ok(pinv)
}

/// SVD least squares; errors on rank deficiency.
pub fn lstsq(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let p = design.ncols();
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax <= 0.0 || smin / smax < 1e-12 {
        // name the degenerate direction via the right-singular vector of smin
        let vt = svd.v_t.as_ref().unwrap();
        let idx = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let dir: Vec<f64> = (0..p).map(|j| vt[(idx, j)]).collect();
        return Err(Error::RankDeficient(format!(
            "null direction ~ {:?}",
            dir.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>()
        )));
    }
    svd.solve(rhs, 1e-12).map_err(|e| Error::Numerical(e.to_string()))
}

/// Least squares with per-coefficient standard errors from the usual
/// `sigma^2 (X^T X)^-1` formula.
pub fn lstsq_with_stderr(
    design: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let coef = lstsq(design, rhs)?;
    let n = design.nrows();
    let p = design.ncols();
    let resid = rhs - design * &coef;
    let dof = (n.saturating_sub(p)).max(1) as f64;
    let sigma2 = resid.norm_squared() / dof;
    let xtx = design.transpose() * design;
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("X^T X not invertible".into()))?;
    let se = DVector::from_iterator(p, (0..p).map(|j| (sigma2 * inv[(j, j)]).sqrt()));
    Ok((coef, se))
}
