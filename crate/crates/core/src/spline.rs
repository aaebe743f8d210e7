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

//! Cubic smoothing splines (Reinsch algorithm).
//!
//! Minimizes `sum (y_i - g(x_i))^2 + lambda * int g''^2` over natural cubic
//! splines with knots at the data sites.  The interior second derivatives
//! solve the pentadiagonal system `(R + lambda Q^T Q) gamma = Q^T y`, handled
//! by a banded Cholesky factorization; the penalty parameter can be picked by
//! generalized cross-validation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Pick lambda by generalized cross-validation over a log grid.
    Gcv,
    Fixed(f64),
}

/// Fitted natural cubic smoothing spline.
#[derive(Debug, Clone)]
pub struct SmoothingSpline {
    xs: Vec<f64>,
    /// Fitted values at the knots.
    g: Vec<f64>,
    /// Second derivatives at the knots (natural: zero at both ends).
    m2: Vec<f64>,
    pub lambda: f64,
}

/// Symmetric pentadiagonal Cholesky (bandwidth 2).  `d0/d1/d2` hold the
/// diagonal and the first/second superdiagonals; they are overwritten with
/// the lower factor (`d1[i]` = l_{i, i-1}, `d2[i]` = l_{i, i-2}).
fn chol_band2(d0: &mut [f64], d1: &mut [f64], d2: &mut [f64]) -> Result<()> {
    let m = d0.len();
    // shift off-diagonals so index i refers to row i of L
    for i in (1..m).rev() {
        d1[i] = d1[i - 1];
    }
    d1[0] = 0.0;
    for i in (2..m).rev() {
        d2[i] = d2[i - 2];
    }
    d2[0] = 0.0;
    if m > 1 {
        d2[1] = 0.0;
    }
    for i in 0..m {
        if i >= 2 {
            d2[i] /= d0[i - 2];
        }
        if i >= 1 {
            let cross = if i >= 2 { d2[i] * d1[i - 1] } else { 0.0 };
            d1[i] = (d1[i] - cross) / d0[i - 1];
        }
        let mut v = d0[i];
        if i >= 1 {
            v -= d1[i] * d1[i];
        }
        if i >= 2 {
            v -= d2[i] * d2[i];
        }
        if v <= 0.0 {
            return Err(Error::Numerical("smoothing system lost positive definiteness".into()));
        }
        d0[i] = v.sqrt();
    }
    Ok(())
}

/// Solves `L L^T x = b` for the factor produced by `chol_band2`, in place.
fn solve_band2(d0: &[f64], d1: &[f64], d2: &[f64], b: &mut [f64]) {
    let m = d0.len();
    for i in 0..m {
        let mut v = b[i];
        if i >= 1 {
            v -= d1[i] * b[i - 1];
        }
        if i >= 2 {
            v -= d2[i] * b[i - 2];
        }
        b[i] = v / d0[i];
    }
    for i in (0..m).rev() {
        let mut v = b[i];
        if i + 1 < m {
            v -= d1[i + 1] * b[i + 1];
        }
        if i + 2 < m {
            v -= d2[i + 2] * b[i + 2];
        }
        b[i] = v / d0[i];
    }
}

struct ReinschSystem {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // Q columns (interior knot j+1): entries at rows j, j+1, j+2
    q0: Vec<f64>,
    q1: Vec<f64>,
    q2: Vec<f64>,
    qty: Vec<f64>,
    // R tridiagonal
    r_diag: Vec<f64>,
    r_off: Vec<f64>,
    // Q^T Q pentadiagonal
    qq_d0: Vec<f64>,
    qq_d1: Vec<f64>,
    qq_d2: Vec<f64>,
}

impl ReinschSystem {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        let m = n - 2;
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut q0 = vec![0.0; m];
        let mut q1 = vec![0.0; m];
        let mut q2 = vec![0.0; m];
        for j in 0..m {
            q0[j] = 1.0 / h[j];
            q1[j] = -1.0 / h[j] - 1.0 / h[j + 1];
            q2[j] = 1.0 / h[j + 1];
        }
        let qty: Vec<f64> = (0..m).map(|j| q0[j] * ys[j] + q1[j] * ys[j + 1] + q2[j] * ys[j + 2]).collect();
        let r_diag: Vec<f64> = (0..m).map(|j| (h[j] + h[j + 1]) / 3.0).collect();
        let r_off: Vec<f64> = (0..m.saturating_sub(1)).map(|j| h[j + 1] / 6.0).collect();
        let mut qq_d0 = vec![0.0; m];
        let mut qq_d1 = vec![0.0; m];
        let mut qq_d2 = vec![0.0; m];
        for j in 0..m {
            qq_d0[j] = q0[j] * q0[j] + q1[j] * q1[j] + q2[j] * q2[j];
            if j + 1 < m {
                qq_d1[j] = q1[j] * q0[j + 1] + q2[j] * q1[j + 1];
            }
            if j + 2 < m {
                qq_d2[j] = q2[j] * q0[j + 2];
            }
        }
        ReinschSystem { xs, ys, q0, q1, q2, qty, r_diag, r_off, qq_d0, qq_d1, qq_d2 }
    }

    /// Cholesky factor of `R + lambda Q^T Q`.
    fn factor(&self, lambda: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let m = self.qq_d0.len();
        let mut d0: Vec<f64> = (0..m).map(|j| self.r_diag[j] + lambda * self.qq_d0[j]).collect();
        let mut d1: Vec<f64> = (0..m)
            .map(|j| if j + 1 < m { self.r_off[j] + lambda * self.qq_d1[j] } else { 0.0 })
            .collect();
        let mut d2: Vec<f64> = (0..m).map(|j| lambda * self.qq_d2[j]).collect();
        chol_band2(&mut d0, &mut d1, &mut d2)?;
        Ok((d0, d1, d2))
    }

    fn solve(&self, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.xs.len();
        let m = n - 2;
        let (d0, d1, d2) = self.factor(lambda)?;
        let mut gamma = self.qty.clone();
        solve_band2(&d0, &d1, &d2, &mut gamma);
        // g = y - lambda Q gamma
        let mut g = self.ys.clone();
        for i in 0..n {
            let mut qg = 0.0;
            if i >= 2 && i - 2 < m {
                qg += self.q2[i - 2] * gamma[i - 2];
            }
            if i >= 1 && i - 1 < m {
                qg += self.q1[i - 1] * gamma[i - 1];
            }
            if i < m {
                qg += self.q0[i] * gamma[i];
            }
            g[i] -= lambda * qg;
        }
        let mut m2 = vec![0.0; n];
        m2[1..=m].copy_from_slice(&gamma);
        Ok((g, m2))
    }

    /// GCV score `n RSS / (n - tr S)^2` for the smoother matrix
    /// `S = I - lambda Q M^-1 Q^T`.
    fn gcv(&self, lambda: f64) -> Result<f64> {
        let n = self.xs.len();
        let m = n - 2;
        let (d0, d1, d2) = self.factor(lambda)?;
        // tr S = n - lambda * sum_i q_i^T M^-1 q_i over rows q_i of Q
        let mut trace_correction = 0.0;
        let mut rhs = vec![0.0; m];
        for i in 0..n {
            for v in rhs.iter_mut() {
                *v = 0.0;
            }
            let mut any = false;
            if i >= 2 && i - 2 < m {
                rhs[i - 2] = self.q2[i - 2];
                any = true;
            }
            if i >= 1 && i - 1 < m {
                rhs[i - 1] = self.q1[i - 1];
                any = true;
            }
            if i < m {
                rhs[i] = self.q0[i];
                any = true;
            }
            if !any {
                continue;
            }
            let qrow = rhs.clone();
            solve_band2(&d0, &d1, &d2, &mut rhs);
            let quad: f64 = qrow.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            trace_correction += quad;
        }
        let tr_s = n as f64 - lambda * trace_correction;
        let (g, _) = self.solve(lambda)?;
        let rss: f64 = g.iter().zip(&self.ys).map(|(a, b)| (a - b) * (a - b)).sum();
        let denom = (n as f64 - tr_s).max(1e-10);
        Ok(n as f64 * rss / (denom * denom))
    }
}

/// Fits a natural cubic smoothing spline.  Unsorted inputs are sorted;
/// duplicate abscissae are collapsed by averaging their ordinates.
pub fn fit_smoothing_spline(xs: &[f64], ys: &[f64], smoothing: Smoothing) -> Result<SmoothingSpline> {
    assert_eq!(xs.len(), ys.len());
    if xs.iter().any(|v| !v.is_finite()) || ys.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite spline input".into()));
    }
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut ux: Vec<f64> = Vec::new();
    let mut uy: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let x = xs[idx[i]];
        let mut sum = 0.0;
        let mut cnt = 0;
        while i < idx.len() && xs[idx[i]] == x {
            sum += ys[idx[i]];
            cnt += 1;
            i += 1;
        }
        ux.push(x);
        uy.push(sum / cnt as f64);
    }
    let n = ux.len();
    if n < 2 {
        return Err(Error::Degenerate("smoothing spline needs at least 2 distinct abscissae".into()));
    }
    if n < 4 {
        return Err(Error::Degenerate(format!("smoothing spline needs at least 4 distinct abscissae, got {}", n)));
    }
    let sys = ReinschSystem::new(ux, uy);
    let lambda = match smoothing {
        Smoothing::Fixed(l) => {
            if !(l >= 0.0) {
                return Err(Error::InvalidParam { name: "smoothing", reason: "lambda must be >= 0".into() });
            }
            l.max(1e-300)
        }
        Smoothing::Gcv => {
            // log grid scaled by the cube of the typical spacing, which makes
            // the search range roughly scale-free
            let span = sys.xs[n - 1] - sys.xs[0];
            let scale = (span / (n - 1) as f64).powi(3);
            let mut best = (f64::INFINITY, scale);
            for k in 0..49 {
                let lam = scale * 10f64.powf(-6.0 + 0.5 * k as f64);
                if let Ok(score) = sys.gcv(lam) {
                    if score < best.0 {
                        best = (score, lam);
                    }
                }
            }
            best.1
        }
    };
    let (g, m2) = sys.solve(lambda)?;
    Ok(SmoothingSpline { xs: sys.xs, g, m2, lambda })
}

impl SmoothingSpline {
    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - x, x - x0);
        self.m2[i] * a * a * a / (6.0 * h)
            + self.m2[i + 1] * b * b * b / (6.0 * h)
            + (self.g[i] / h - self.m2[i] * h / 6.0) * a
            + (self.g[i + 1] / h - self.m2[i + 1] * h / 6.0) * b
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - x, x - x0);
        -self.m2[i] * a * a / (2.0 * h)
            + self.m2[i + 1] * b * b / (2.0 * h)
            + (self.g[i + 1] - self.g[i]) / h
            - (self.m2[i + 1] - self.m2[i]) * h / 6.0
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        // linear in x between knots; clamps to the boundary value outside
        let t = ((x - x0) / h).clamp(0.0, 1.0);
        self.m2[i] * (1.0 - t) + self.m2[i + 1] * t
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }
}
