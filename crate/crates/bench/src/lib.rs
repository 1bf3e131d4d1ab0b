//! Shared fixtures for the benchmarks.

use linepack_core::solver::random_frame;
use linepack_core::Frame;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A reproducible random frame with unit columns.
pub fn fixture(d: usize, n: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_frame(d, n, &mut rng)
}

/// A reproducible direction with the same length as a frame's parameters.
pub fn direction(d: usize, n: usize, seed: u64) -> Vec<f64> {
    fixture(d, n, seed).into_vec()
}
