//! Shared fixtures for the criterion benchmarks.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Deterministic standard-normal feature rows.
pub fn gaussian_rows(seed: u64, n: usize, d: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng))).collect()
}

/// Deterministic standard-normal responses.
pub fn gaussian_targets(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}
