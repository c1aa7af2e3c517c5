//! Prints the distance table means of the paired synthetic corpus for a
//! range of seeds, using the exact index.
//!
//! Usage: `cargo run --release -p xldrift-core --example paired -- [seeds] [topic_spread] [pair_noise]`

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xldrift_core::analysis::{default_pool, distance_table, Pair, SampleSpec, DEFAULT_K};
use xldrift_core::synthetic::PairedCorpusSpec;
use xldrift_core::{Agency, ExactIndex};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: u64 = args.first().map_or(5, |s| s.parse().unwrap());
    let mut spec = PairedCorpusSpec::default();
    if let Some(s) = args.get(1) {
        spec.topic_spread = s.parse().unwrap();
    }
    if let Some(s) = args.get(2) {
        spec.pair_noise = s.parse().unwrap();
    }
    let pool = default_pool();
    let start = Instant::now();
    let mut held = 0;
    for seed in 0..seeds {
        let corpus = spec.generate(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let index = ExactIndex::build(corpus.pool_points(&pool).unwrap()).unwrap();
        let sample = SampleSpec {
            seed,
            n: spec.pairs,
            pair: Pair::default(),
            agency: Agency::Kakenhi,
        };
        let report = distance_table(&corpus, &sample, &pool, DEFAULT_K, &index).unwrap();
        let (w, l, r) = (
            report.within_pair().mean,
            report.left_baseline().mean,
            report.right_baseline().mean,
        );
        if w < l && w < r {
            held += 1;
        }
        println!("seed {seed}: {w:.4} {l:.4} {r:.4}");
    }
    println!("ordering held {held}/{seeds} in {:.2?}", start.elapsed());
}
