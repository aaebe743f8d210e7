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

//! Flat row-major storage for point clouds of small ambient dimension.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Points { dim, data: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        assert!(dim > 0);
        Points { dim, data: Vec::with_capacity(dim * n) }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Self {
        let mut p = Points::with_capacity(dim, rows.len());
        for r in rows {
            p.push(r);
        }
        p
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn extend(&mut self, other: &Points) {
        assert_eq!(self.dim, other.dim);
        self.data.extend_from_slice(&other.data);
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// One coordinate across all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        assert!(j < self.dim);
        self.data.iter().skip(j).step_by(self.dim).copied().collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Row-wise map into a possibly different dimension.
    pub fn map_rows(&self, out_dim: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Points {
        let mut out = Points::with_capacity(out_dim, self.len());
        for r in self.rows() {
            let m = f(r);
            out.push(&m);
        }
        out
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
