//! Shared pieces for the integration test targets: reference solvers written
//! independently of the library, and the randomized property suites.

#![allow(dead_code)]

pub mod invariants;
pub mod oracles;

use bistochastic::{pairwise_cost, CostMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| (0..d).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// Squared-distance cost of `n` standard Gaussian points in `d` dimensions.
pub fn gaussian_cost(n: usize, d: usize, seed: u64) -> CostMatrix {
    pairwise_cost(&gaussian_points(n, d, seed), false).unwrap()
}

/// Symmetric hollow cost with i.i.d. uniform off-diagonal entries.
pub fn uniform_cost(n: usize, seed: u64) -> CostMatrix {
    let mut r = rng(seed);
    let mut e = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = r.random();
            e[i * n + j] = v;
            e[j * n + i] = v;
        }
    }
    CostMatrix::from_dense(n, e, false).unwrap()
}

pub fn frobenius(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
