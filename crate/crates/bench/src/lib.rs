//! Shared fixtures for the criterion benchmarks.

use gelo_core::numerics::{gaussian_matrix, rng_from_seed};
use gelo_core::{HiddenBatch, Matrix};

pub fn random_batch(n: usize, d: usize, seed: u64) -> HiddenBatch {
    HiddenBatch::new(gaussian_matrix(n, d, &mut rng_from_seed(seed)))
}

pub fn random_weights(d: usize, p: usize, seed: u64) -> Matrix {
    gaussian_matrix(d, p, &mut rng_from_seed(seed))
}
