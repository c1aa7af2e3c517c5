//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xldrift_core::synthetic;
use xldrift_core::EmbeddedPoint;

/// `n` points from the recall-benchmark generator.
pub fn fixture_points(n: usize, seed: u64) -> Vec<EmbeddedPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synthetic::recall_benchmark_points(n, &mut rng)
}
