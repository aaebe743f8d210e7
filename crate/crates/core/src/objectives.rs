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

//! Test objective functions with their exact parameterizations.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveId {
    /// f(x) = 0.5 x^2
    Quad1D,
    /// f(x, y) = x + 2y
    Linear2D,
    /// Sharply peaked posterior density on a ring of radius ~2, normalized so
    /// the maximum is ~1.  Maximization target.
    BayesRidge,
    /// Asymmetric double well on a cylinder surface, taken in Cartesian
    /// coordinates.  Minimization target.
    CylinderWell,
}

impl ObjectiveId {
    pub fn dim(self) -> usize {
        match self {
            ObjectiveId::Quad1D => 1,
            ObjectiveId::Linear2D => 2,
            ObjectiveId::BayesRidge => 2,
            ObjectiveId::CylinderWell => 3,
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "quad1d" => Some(ObjectiveId::Quad1D),
            "linear2d" => Some(ObjectiveId::Linear2D),
            "bayes_ridge" => Some(ObjectiveId::BayesRidge),
            "cylinder_well" => Some(ObjectiveId::CylinderWell),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ObjectiveId::Quad1D => "quad1d",
            ObjectiveId::Linear2D => "linear2d",
            ObjectiveId::BayesRidge => "bayes_ridge",
            ObjectiveId::CylinderWell => "cylinder_well",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderParams {
    pub k1: f64,
    pub k2: f64,
    pub radius: f64,
}

impl Default for CylinderParams {
    fn default() -> Self {
        CylinderParams { k1: 1e4, k2: 20.0, radius: 5.0 / PI }
    }
}

/// Log of the maximum of the unnormalized Bayes-ridge exponent, obtained by
/// dense polar-grid maximization (theta step 1e-4 on [-pi, pi], r step 1e-3 on
/// [1.8, 2.2]).  Frozen here; `regenerate_bayes_ridge_log_max` recomputes it.
pub const BAYES_RIDGE_LOG_MAX: f64 = 466.556008223528;

/// Polar argmax (r, theta) from the same grid search.
pub const BAYES_RIDGE_ARGMAX: (f64, f64) = (2.078, 0.0);

/// Unnormalized log-density of the Bayes-ridge objective.
pub fn bayes_ridge_exponent(x: f64, y: f64) -> f64 {
    let s = x * x + y * y;
    -25.0 * s * s + 216.0 * s - 0.05 * ((x - 2.0) * (x - 2.0) + y * y).sqrt()
}

/// The angular double-well profile of the cylinder objective.
pub fn cylinder_h(theta: f64) -> f64 {
    let c = theta.cos();
    -1.2 + 3.4 * c * c - 0.59 * c - 1.1 * theta.sin()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Objective {
    pub id: ObjectiveId,
    pub cyl: CylinderParams,
}

impl Objective {
    pub fn new(id: ObjectiveId) -> Self {
        Objective { id, cyl: CylinderParams::default() }
    }

    pub fn dim(&self) -> usize {
        self.id.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(
            x.len(),
            self.dim(),
            "objective {} expects dimension {}",
            self.id.tag(),
            self.dim()
        );
        match self.id {
            ObjectiveId::Quad1D => 0.5 * x[0] * x[0],
            ObjectiveId::Linear2D => x[0] + 2.0 * x[1],
            ObjectiveId::BayesRidge => (bayes_ridge_exponent(x[0], x[1]) - BAYES_RIDGE_LOG_MAX).exp(),
            ObjectiveId::CylinderWell => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                // atan2(0, 0) = 0, which is the documented convention at r = 0
                let theta = x[1].atan2(x[0]);
                let z = x[2];
                0.5 * self.cyl.k1 * (r - self.cyl.radius) * (r - self.cyl.radius)
                    + cylinder_h(theta)
                    + 0.5 * self.cyl.k2 * z * z
            }
        }
    }
}

/// Central-difference gradient.  Validation oracle only; the optimization
/// path never queries gradients.
pub fn fd_gradient(obj: &Objective, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0);
    let mut g = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = obj.eval(&xp);
        xp[i] = x[i] - h;
        let fm = obj.eval(&xp);
        xp[i] = x[i];
        g.push((fp - fm) / (2.0 * h));
    }
    g
}
