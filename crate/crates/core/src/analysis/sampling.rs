use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Pair;
use crate::corpus::{Agency, Corpus, PointKey};
use crate::error::{Error, Result};

/// Which projects to sample and how.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub n: usize,
    pub pair: Pair,
    /// Agency owning the paired records.
    pub agency: Agency,
}

/// Uniform integer in `0..bound` from 64-bit draws, by multiply-shift with
/// rejection of the biased low range (Lemire, 2019).
fn bounded(rng: &mut impl RngCore, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let product = rng.next_u64() as u128 * bound as u128;
        if (product as u64) >= threshold {
            return (product >> 64) as u64;
        }
    }
}

/// Partial Fisher-Yates shuffle: for `i` in `0..n`, swap position `i` with a
/// uniform position in `i..len`. The first `n` items are a uniform sample
/// without replacement, in draw order.
///
/// The generator is ChaCha8 seeded through `seed_from_u64(seed)`; together
/// with [`bounded`] this fixes the output on every platform.
pub fn shuffle_prefix<T>(items: &mut [T], n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = items.len();
    for i in 0..n.min(len) {
        let j = i + bounded(&mut rng, (len - i) as u64) as usize;
        items.swap(i, j);
    }
}

/// Samples `spec.n` ids among the complete pairs of `spec.agency`.
///
/// The eligible ids are sorted ascending before shuffling, so the sample
/// depends only on the eligible set and the seed.
pub fn sample_ids(corpus: &Corpus, spec: &SampleSpec) -> Result<Vec<String>> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be at least 1".into(),
        ));
    }
    let mut eligible: Vec<String> = corpus
        .filter_complete_pairs(spec.pair.left, spec.pair.right)?
        .into_iter()
        .filter(|id| {
            corpus
                .record(&PointKey::new(id.clone(), spec.pair.left))
                .is_some_and(|r| r.agency == spec.agency)
        })
        .collect();
    if eligible.len() < spec.n {
        return Err(Error::InsufficientPopulation {
            population: eligible.len(),
            requested: spec.n,
        });
    }
    shuffle_prefix(&mut eligible, spec.n, spec.seed);
    eligible.truncate(spec.n);
    Ok(eligible)
}
