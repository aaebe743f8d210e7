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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("proposal safety cap of {cap} exceeded ({accepted} accepted); objective/temperature pairing looks degenerate")]
    SafetyCap { cap: u64, accepted: u64 },

    #[error("eigensolver failed to converge (residual {residual:.3e})")]
    EigenFailure { residual: f64 },

    #[error("covariance at sample {index} is not positive semidefinite after symmetrization")]
    NonPsdCovariance { index: usize },

    #[error("singular value {value:.3e} below 1e-14 within retained rank {rank}; rank misconfigured")]
    RankMisconfigured { value: f64, rank: usize },

    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("embedding failure: {0}")]
    EmbeddingFailure(String),
}
