//! Measures graph-search recall@10 against the exact oracle.
//!
//! Usage: `cargo run --release -p xldrift-core --example recall -- [points] [queries] [latent_dim] [noise]`
//! A latent dimension of 0 draws uniformly from the sphere.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use xldrift_core::knn::{accept_all, recall_at_k};
use xldrift_core::synthetic::{self, LowRankSphere};
use xldrift_core::{EmbeddedPoint, ExactIndex, GraphIndex, SearchParams};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: f64| args.get(i).map_or(default, |s| s.parse().unwrap());
    let n = arg(0, 10_000.0) as usize;
    let queries = arg(1, 1_000.0) as usize;
    let latent = arg(2, synthetic::RECALL_LATENT_DIM as f64) as usize;
    let noise = arg(3, synthetic::RECALL_NOISE as f64) as f32;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (points, qs): (Vec<EmbeddedPoint>, Vec<Vec<f32>>) = if latent == 0 {
        let pts = (0..n)
            .map(|i| {
                EmbeddedPoint::new(
                    xldrift_core::PointKey::new(
                        format!("p{i}"),
                        xldrift_core::CoordinateType::NativeEn,
                    ),
                    xldrift_core::Agency::Nsf,
                    &synthetic::unit_vector(&mut rng),
                )
                .unwrap()
            })
            .collect();
        (
            pts,
            (0..queries)
                .map(|_| synthetic::unit_vector(&mut rng))
                .collect(),
        )
    } else {
        let dist = LowRankSphere::new(latent, noise, &mut rng);
        let pts = dist.points(n, "p", &mut rng);
        (pts, (0..queries).map(|_| dist.sample(&mut rng)).collect())
    };

    let t = Instant::now();
    let graph = GraphIndex::build(points.clone(), 16, 7).unwrap();
    println!("build: {:.2}s", t.elapsed().as_secs_f64());
    let exact = ExactIndex::build(points).unwrap();

    let t = Instant::now();
    let truth: Vec<_> = qs
        .par_iter()
        .map(|q| exact.query(q, 10, &accept_all))
        .collect();
    println!("exact queries: {:.2}s", t.elapsed().as_secs_f64());

    for budget in [256, 1024, 4096] {
        let params = SearchParams {
            max_evaluations: budget,
            ..SearchParams::default()
        };
        let t = Instant::now();
        let approx: Vec<_> = qs
            .iter()
            .map(|q| graph.query(q, 10, &params, &accept_all))
            .collect();
        let secs = t.elapsed().as_secs_f64();
        let recall: f64 = approx
            .iter()
            .zip(&truth)
            .map(|(a, e)| recall_at_k(a, e, 10).unwrap())
            .sum::<f64>()
            / qs.len() as f64;
        println!("max_evaluations {budget}: recall@10 {recall:.4} in {secs:.2}s");
    }
}
