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

//! Transport of SDE coefficients into embedding coordinates via Ito's lemma,
//! with centered-difference and smoothing-spline differentiation of the
//! embedding map.

use crate::error::{Error, Result};
use crate::spline::{fit_smoothing_spline, Smoothing};

/// Numerical derivatives of the embedding coordinates at one grid point.
/// `first[c][axis]` and `second[c][axis]` index psi coordinate `c` and
/// ambient axis.
#[derive(Debug, Clone)]
pub struct CoordDerivatives {
    pub spacing: f64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

/// Centered differences from embedding values at the grid point and at
/// `+- h` along each ambient axis.  `psi_plus[axis][c]` / `psi_minus[axis][c]`
/// hold the offset embeddings.
pub fn centered_derivatives(
    psi_center: &[f64],
    psi_plus: &[Vec<f64>],
    psi_minus: &[Vec<f64>],
    h: f64,
) -> CoordDerivatives {
    assert!(h > 0.0);
    assert_eq!(psi_plus.len(), psi_minus.len());
    let n_axes = psi_plus.len();
    let n_coords = psi_center.len();
    let mut first = vec![vec![0.0; n_axes]; n_coords];
    let mut second = vec![vec![0.0; n_axes]; n_coords];
    for a in 0..n_axes {
        assert_eq!(psi_plus[a].len(), n_coords);
        assert_eq!(psi_minus[a].len(), n_coords);
        for c in 0..n_coords {
            first[c][a] = (psi_plus[a][c] - psi_minus[a][c]) / (2.0 * h);
            second[c][a] = (psi_plus[a][c] - 2.0 * psi_center[c] + psi_minus[a][c]) / (h * h);
        }
    }
    CoordDerivatives { spacing: h, first, second }
}

/// Expected embedding-space coefficients for a constant-coefficient ambient
/// SDE `dx = mu dt + sqrt(2T) dW1`, `dy = nu dt + sqrt(2T) dW2`:
///
/// `theta1 = psi1_x mu + psi1_y nu + T (psi1_xx + psi1_yy)`,
/// `theta3 = sqrt(2T) * ||grad psi1||`, and theta2/theta4 likewise for psi2.
pub fn theoretical_coeffs_2d(mu: f64, nu: f64, t: f64, d: &CoordDerivatives) -> (f64, f64, f64, f64) {
    assert!(d.first.len() >= 2 && d.first[0].len() >= 2, "need two psi coordinates over two axes");
    let drift = |c: usize| d.first[c][0] * mu + d.first[c][1] * nu + t * (d.second[c][0] + d.second[c][1]);
    let diff = |c: usize| (2.0 * t).sqrt() * (d.first[c][0].powi(2) + d.first[c][1].powi(2)).sqrt();
    (drift(0), drift(1), diff(0), diff(1))
}

/// Ito transport of a scalar SDE `dx = a(x) dt + sqrt(b2(x)) dW` through
/// `psi(x)`:
///
/// `drift_psi = a psi' + (b2 / 2) psi''`, `diff_psi = sqrt(b2) |psi'|`.
///
/// All slices are evaluated at the same points.  The absolute value on
/// `psi'` keeps the diffusion nonnegative under the arbitrary eigenvector
/// sign.
pub fn ito_1d(
    drift_x: &[f64],
    diff2_x: &[f64],
    dpsi_dx: &[f64],
    d2psi_dx2: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = drift_x.len();
    assert!(diff2_x.len() == n && dpsi_dx.len() == n && d2psi_dx2.len() == n);
    let mut drift = Vec::with_capacity(n);
    let mut diff = Vec::with_capacity(n);
    for i in 0..n {
        if diff2_x[i] < 0.0 {
            return Err(Error::InvalidParam {
                name: "diff2_x",
                reason: format!("negative squared diffusion {} at point {}", diff2_x[i], i),
            });
        }
        drift.push(drift_x[i] * dpsi_dx[i] + 0.5 * diff2_x[i] * d2psi_dx2[i]);
        diff.push(diff2_x[i].sqrt() * dpsi_dx[i].abs());
    }
    Ok((drift, diff))
}

/// Smoothing-spline derivatives of a noisy curve `psi(x)` at query points.
pub fn spline_derivatives(
    xs: &[f64],
    psis: &[f64],
    smoothing: Smoothing,
    queries: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if xs.len() < 8 {
        return Err(Error::Degenerate(format!("need at least 8 points for spline differentiation, got {}", xs.len())));
    }
    let sp = fit_smoothing_spline(xs, psis, smoothing)?;
    let d1 = queries.iter().map(|&q| sp.deriv(q)).collect();
    let d2 = queries.iter().map(|&q| sp.deriv2(q)).collect();
    Ok((d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn derivs_of(psi: impl Fn(f64, f64) -> Vec<f64>, x: f64, y: f64, h: f64) -> CoordDerivatives {
        let center = psi(x, y);
        let plus = vec![psi(x + h, y), psi(x, y + h)];
        let minus = vec![psi(x - h, y), psi(x, y - h)];
        centered_derivatives(&center, &plus, &minus, h)
    }

    #[test]
    fn centered_differences_exact_on_quadratics() {
        // psi1 = x^2, psi2 = 3x - y
        let d = derivs_of(|x, y| vec![x * x, 3.0 * x - y], 1.0, 0.5, 0.01);
        assert!((d.first[0][0] - 2.0).abs() < 1e-9);
        assert!((d.second[0][0] - 2.0).abs() < 1e-6);
        assert!(d.second[1][0].abs() < 1e-9);
        assert!((d.first[1][1] + 1.0).abs() < 1e-9);
        assert!(d.second[0][1].abs() < 1e-9);
    }

    #[test]
    fn identity_embedding_returns_ambient_coeffs() {
        let d = derivs_of(|x, y| vec![x, y], 0.3, -0.2, 0.01);
        let (t1, t2, t3, t4) = theoretical_coeffs_2d(-1.0, -2.0, 0.25, &d);
        assert!((t1 + 1.0).abs() < 1e-9);
        assert!((t2 + 2.0).abs() < 1e-9);
        let s = (2.0f64 * 0.25).sqrt();
        assert!((t3 - s).abs() < 1e-9);
        assert!((t4 - s).abs() < 1e-9);
        // total diffusion magnitude identity for an orthonormal pair
        assert!((t3 * t3 + t4 * t4 - 2.0 * 2.0 * 0.25).abs() < 1e-9);
    }

    #[test]
    fn linear_embedding_with_gradient_g() {
        let g = [0.6, -0.8];
        let d = derivs_of(|x, y| vec![g[0] * x + g[1] * y, 0.1 * x], 0.0, 0.0, 0.01);
        let (mu, nu, t) = (-1.0, -2.0, 0.5);
        let (t1, _, t3, _) = theoretical_coeffs_2d(mu, nu, t, &d);
        assert!((t1 - (g[0] * mu + g[1] * nu)).abs() < 1e-9);
        assert!((t3 - (2.0 * t).sqrt() * 1.0).abs() < 1e-9); // |g| = 1
    }

    #[test]
    fn ito_identity_map_passthrough() {
        let a = [1.0, -2.0, 0.3];
        let b2 = [0.5, 0.5, 0.2];
        let ones = [1.0, 1.0, 1.0];
        let zeros = [0.0, 0.0, 0.0];
        let (dr, df) = ito_1d(&a, &b2, &ones, &zeros).unwrap();
        assert_eq!(dr, a.to_vec());
        for (x, y) in df.iter().zip(&b2) {
            assert!((x - y.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn ito_negative_diffusion_rejected() {
        assert!(ito_1d(&[0.0], &[-1e-9], &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn ito_on_known_smooth_map() {
        // psi = x^2 on an OU process dx = -x dt + sqrt(0.2) dW.
        // drift_psi = -x * 2x + 0.1 * 2 = -2x^2 + 0.2, diff_psi = sqrt(0.2) 2|x|
        let xs = [0.5, 1.0, -1.5];
        let a: Vec<f64> = xs.iter().map(|x| -x).collect();
        let b2 = vec![0.2; 3];
        let d1: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let d2 = vec![2.0; 3];
        let (dr, df) = ito_1d(&a, &b2, &d1, &d2).unwrap();
        for (i, x) in xs.iter().enumerate() {
            assert!((dr[i] - (-2.0 * x * x + 0.2)).abs() < 1e-12);
            assert!((df[i] - 0.2f64.sqrt() * 2.0 * x.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_derivatives_on_a_line() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let ps: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let q = [0.5, 1.0, 2.0];
        let (d1, d2) = spline_derivatives(&xs, &ps, Smoothing::Fixed(1e-6), &q).unwrap();
        for v in d1 {
            assert!((v - 2.0).abs() < 1e-6);
        }
        for v in d2 {
            assert!(v.abs() < 1e-5);
        }
    }

    #[test]
    fn spline_derivatives_on_a_cubic() {
        let xs: Vec<f64> = (0..300).map(|i| -1.0 + i as f64 / 149.5).collect();
        let ps: Vec<f64> = xs.iter().map(|x| 0.5 * x.powi(3) + x).collect();
        let q = [-0.4, 0.0, 0.6];
        let (d1, _) = spline_derivatives(&xs, &ps, Smoothing::Fixed(1e-10), &q).unwrap();
        for (v, x) in d1.iter().zip(&q) {
            assert!((v - (1.5 * x * x + 1.0)).abs() < 1e-3, "at {}: {}", x, v);
        }
    }

    #[test]
    fn spline_derivatives_needs_enough_points() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ps = [0.0, 1.0, 2.0, 3.0];
        assert!(spline_derivatives(&xs, &ps, Smoothing::Gcv, &[1.0]).is_err());
    }
}
