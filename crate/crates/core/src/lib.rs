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

//! Derivative-free optimization accelerated by on-the-fly manifold learning.
//!
//! The library couples a constant-temperature random-walk Metropolis-Hastings
//! sampler (the "inner optimizer") with diffusion-map embeddings of its burst
//! clouds.  Local drift/diffusion estimates of the effective SDE in the
//! embedding coordinates provide a coarse gradient that is stepped forward in
//! the reduced space, and geometric harmonics lift the result back to the
//! ambient parameter space.

pub mod chaos;
pub mod dmaps;
pub mod error;
pub mod harmonics;
pub mod ito;
pub mod linalg;
pub mod linear2d;
pub mod objectives;
pub mod outer;
pub mod points;
pub mod rng;
pub mod sampler;
pub mod sde;
pub mod spline;
pub mod stats;

pub use error::{Error, Result};
