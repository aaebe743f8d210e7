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

//! Property tests over the public surface: randomized inputs, exact or
//! tolerance-free invariants.  The per-module unit tests pin concrete
//! oracles; these check that the invariants hold across the input space.

use nalgebra::DMatrix;
use opt_manifold_core::dmaps::{
    dmaps_embed, epsilon_from_sq_dists, pairwise_sq_dists, semicircle_map, KernelSpec,
    LocalCovariance, Metric,
};
use opt_manifold_core::harmonics::gh_fit;
use opt_manifold_core::objectives::{Objective, ObjectiveId};
use opt_manifold_core::points::Points;
use opt_manifold_core::rng::substream;
use opt_manifold_core::sampler::{
    acceptance_probability, rwmh_burst, RecordMode, SamplerParams, StopRule,
};
use opt_manifold_core::sde::{
    estimate_gmm_increments, estimate_stat_increments, eval_polynomial_1d, fit_polynomial_1d,
};
use opt_manifold_core::stats::spearman;
use proptest::prelude::*;

/// Scattered 2D cloud with deterministic pseudo-random jitter from a seed.
fn cloud_2d(n: usize, seed: u64) -> Points {
    use rand::Rng;
    let mut rng = substream(seed, "prop-cloud", 0);
    let mut pts = Points::with_capacity(2, n);
    for i in 0..n {
        let a = std::f64::consts::TAU * i as f64 / n as f64;
        let r: f64 = 1.0 + 0.2 * rng.gen::<f64>();
        pts.push(&[r * a.cos(), r * a.sin()]);
    }
    pts
}

fn embed(pts: &Points, k: usize) -> opt_manifold_core::dmaps::Embedding {
    let mut d2 = pairwise_sq_dists(pts, Metric::Euclidean, None).expect("distances");
    let eps = epsilon_from_sq_dists(&d2).expect("epsilon");
    let spec = KernelSpec::new(eps, 1.0, Metric::Euclidean);
    let inv_eps2 = 1.0 / (eps * eps);
    d2.map_inplace(|v| (-v * inv_eps2).exp());
    dmaps_embed(d2, &spec, k).expect("embedding")
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, .. ProptestConfig::default() })]

    // Markov spectrum of a connected Gaussian kernel: eigenvalues in
    // (-1, 1], sorted descending.
    #[test]
    fn spectral_bounds_hold(seed in 0u64..1000, n in 40usize..80) {
        let emb = embed(&cloud_2d(n, seed), 3);
        for (j, &l) in emb.eigenvalues.iter().enumerate() {
            prop_assert!(l <= 1.0 + 1e-12 && l > -1.0);
            if j > 0 {
                prop_assert!(l <= emb.eigenvalues[j - 1] + 1e-12);
            }
        }
    }

    // The deterministic sign fix makes repeated embeddings bitwise equal.
    #[test]
    fn sign_fix_deterministic(seed in 0u64..1000) {
        let pts = cloud_2d(50, seed);
        let a = embed(&pts, 3);
        let b = embed(&pts, 3);
        for j in 0..3 {
            prop_assert!(a.psi(j) == b.psi(j));
        }
    }

    // Identity local covariances reduce the Mahalanobis metric to the
    // Euclidean one exactly (up to roundoff in the quadratic form).
    #[test]
    fn mahalanobis_identity_reduction(seed in 0u64..1000) {
        let pts = cloud_2d(30, seed);
        let covs: Vec<LocalCovariance> = (0..pts.len())
            .map(|i| LocalCovariance {
                point_index: i,
                matrix: DMatrix::identity(2, 2),
                pinv: DMatrix::identity(2, 2),
                rank_used: 2,
            })
            .collect();
        let de = pairwise_sq_dists(&pts, Metric::Euclidean, None).unwrap();
        let dm = pairwise_sq_dists(&pts, Metric::Mahalanobis, Some(&covs)).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                prop_assert!((de.get(i, j) - dm.get(i, j)).abs() <= 1e-9 * (1.0 + de.get(i, j)));
            }
        }
    }

    // Geometric harmonics are linear in the trained values.
    #[test]
    fn gh_extension_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let centers = cloud_2d(25, seed);
        let v1: Vec<Vec<f64>> = centers.rows().map(|p| vec![p[0]]).collect();
        let v2: Vec<Vec<f64>> = centers.rows().map(|p| vec![p[1] * p[1]]).collect();
        let combo: Vec<Vec<f64>> =
            v1.iter().zip(&v2).map(|(x, y)| vec![a * x[0] + b * y[0]]).collect();
        let g1 = gh_fit(&centers, &Points::from_rows(1, &v1), 1.0, 1e-12).unwrap();
        let g2 = gh_fit(&centers, &Points::from_rows(1, &v2), 1.0, 1e-12).unwrap();
        let gc = gh_fit(&centers, &Points::from_rows(1, &combo), 1.0, 1e-12).unwrap();
        let q = [0.3, -0.4];
        let (e1, _) = g1.extend(&q);
        let (e2, _) = g2.extend(&q);
        let (ec, _) = gc.extend(&q);
        prop_assert!((ec[0] - (a * e1[0] + b * e2[0])).abs() <= 1e-8 * (1.0 + ec[0].abs()));
    }

    // GMM and raw-moment estimators agree on the drift exactly and on the
    // diffusion within their mutual standard errors.
    #[test]
    fn estimator_agreement(seed in 0u64..1000, drift in -1.0f64..1.0, sigma in 0.1f64..1.0) {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let dt = 0.01;
        let mut rng = substream(seed, "prop-increments", 0);
        let mut incs = Points::with_capacity(1, 800);
        for _ in 0..800 {
            let z: f64 = rng.sample(StandardNormal);
            incs.push(&[drift * dt + sigma * dt.sqrt() * z]);
        }
        let gmm = estimate_gmm_increments(&incs, dt).unwrap();
        let stat = estimate_stat_increments(&incs, dt, true).unwrap();
        prop_assert!((gmm.drift[0] - stat.drift[0]).abs() <= 1e-12);
        let se = gmm.stderr.as_ref().unwrap()[0] + stat.stderr.as_ref().unwrap()[0];
        prop_assert!((gmm.diffusion[0] - stat.diffusion[0]).abs() <= se + 1e-12);
    }

    // A Steps(n) burst evaluates the objective exactly n + 1 times and
    // never records more states than evaluations.
    #[test]
    fn evaluation_accounting(seed in 0u64..1000, n in 1usize..400) {
        let obj = Objective::new(ObjectiveId::Quad1D);
        let mut rng = substream(seed, "prop-evals", 0);
        let tr = rwmh_burst(
            &[0.3],
            &SamplerParams::new(0.5, 0.01),
            StopRule::Steps(n),
            |x| obj.eval(x),
            RecordMode::EveryStep,
            &mut rng,
        )
        .unwrap();
        prop_assert_eq!(tr.eval_count, n as u64 + 1);
        prop_assert!(tr.accepted_count <= n as u64);
    }

    // Metropolis acceptance: probability in [0, 1], certain for downhill
    // moves, monotone non-increasing in the objective increase.
    #[test]
    fn acceptance_probability_shape(d1 in -5.0f64..5.0, d2 in 0.0f64..5.0, t in 0.01f64..2.0) {
        let p1 = acceptance_probability(d1, t);
        prop_assert!((0.0..=1.0).contains(&p1));
        if d1 <= 0.0 {
            prop_assert!(p1 == 1.0);
        }
        prop_assert!(acceptance_probability(d1 + d2, t) <= p1 + 1e-15);
    }

    // The semicircle observation map is an isometry up to a constant
    // factor: unit radius, and chord ordering preserves x ordering.
    #[test]
    fn semicircle_map_properties(x in -1.6f64..1.6, y in -1.6f64..1.6) {
        let px = semicircle_map(x);
        prop_assert!(((px[0] * px[0] + px[1] * px[1]).sqrt() - 1.0).abs() <= 1e-12);
        let py = semicircle_map(y);
        if x < y {
            // angle is affine in x, so the angular order matches
            prop_assert!(px[0].acos() < py[0].acos() + 1e-12);
        }
    }

    // Polynomial least squares reproduces an exact polynomial.
    #[test]
    fn polynomial_fit_exact(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c3 in -2.0f64..2.0) {
        let basis = [0u32, 1, 3];
        let xs: Vec<f64> = (0..40).map(|i| -1.0 + i as f64 / 19.5).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| c0 + c1 * x + c3 * x * x * x).collect();
        let (fit, _) = fit_polynomial_1d(&xs, &ys, &basis).unwrap();
        for (f, c) in fit.iter().zip([c0, c1, c3]) {
            prop_assert!((f - c).abs() <= 1e-8);
        }
        let at = eval_polynomial_1d(&fit, &basis, 0.37);
        prop_assert!((at - (c0 + c1 * 0.37 + c3 * 0.37f64.powi(3))).abs() <= 1e-8);
    }

    // Spearman correlation is invariant under strictly monotone maps.
    #[test]
    fn spearman_monotone_invariance(seed in 0u64..1000) {
        use rand::Rng;
        let mut rng = substream(seed, "prop-spearman", 0);
        let xs: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let ys: Vec<f64> = (0..50).map(|_| rng.gen::<f64>()).collect();
        let fx: Vec<f64> = xs.iter().map(|&x| x.exp()).collect();
        prop_assert!((spearman(&xs, &ys) - spearman(&fx, &ys)).abs() <= 1e-12);
        prop_assert!((spearman(&xs, &xs) - 1.0).abs() <= 1e-12);
    }
}
