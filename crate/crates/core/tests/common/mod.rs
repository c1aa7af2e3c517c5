#![allow(dead_code)]

use rand::Rng;
use xldrift_core::metrics::euclidean;
use xldrift_core::{Agency, CoordinateType, EmbeddedPoint, PointKey, EMBEDDING_DIM};

/// All-pairs scan: every distance, sorted by (distance, key), first `k`.
pub fn naive_knn(
    points: &[EmbeddedPoint],
    query: &[f32],
    k: usize,
    keep: impl Fn(&EmbeddedPoint) -> bool,
) -> Vec<(PointKey, f64)> {
    let mut all: Vec<(PointKey, f64)> = points
        .iter()
        .filter(|p| keep(p))
        .map(|p| (p.key.clone(), euclidean(query, &p.vector).unwrap()))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn agency_for(i: usize) -> Agency {
    [Agency::Nih, Agency::Nsf, Agency::Ukri][i % 3].clone()
}

/// Random unit vectors with many exact ties: coordinates come from a tiny
/// lattice on a few axes, and some points are exact copies under new keys.
pub fn tie_heavy_points(n: usize, rng: &mut impl Rng) -> Vec<EmbeddedPoint> {
    let mut points: Vec<EmbeddedPoint> = Vec::with_capacity(n);
    for i in 0..n {
        let v: Vec<f32> = if i > 0 && rng.random_bool(0.1) {
            points[rng.random_range(0..points.len())].vector.clone()
        } else {
            let mut v = vec![0.0f32; EMBEDDING_DIM];
            loop {
                for x in v.iter_mut().take(6) {
                    *x = rng.random_range(-2i32..=2) as f32;
                }
                if v.iter().any(|&x| x != 0.0) {
                    break;
                }
            }
            v
        };
        // keys in scrambled order so index order is not insertion order
        let id = format!("{:08x}", (i as u64).wrapping_mul(0x9e37_79b9) as u32);
        points.push(
            EmbeddedPoint::new(
                PointKey::new(id, CoordinateType::NativeEn),
                agency_for(i),
                &v,
            )
            .unwrap(),
        );
    }
    points
}

pub fn random_points(n: usize, rng: &mut impl Rng) -> Vec<EmbeddedPoint> {
    (0..n)
        .map(|i| {
            let v = xldrift_core::synthetic::unit_vector(rng);
            EmbeddedPoint::new(
                PointKey::new(format!("r{i:05}"), CoordinateType::NativeEn),
                agency_for(i),
                &v,
            )
            .unwrap()
        })
        .collect()
}
