use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{in_pool, sample_ids, Pair, Pool, SampleSpec};
use crate::corpus::{Agency, CoordinateType, Corpus, PointKey};
use crate::error::{Error, Result};
use crate::knn::{NeighborList, NeighborSearch};
use crate::metrics::{euclidean, summary_stats, SummaryStats};

fn unit_vector(corpus: &Corpus, id: &str, side: CoordinateType) -> Result<Vec<f32>> {
    Ok(corpus.embedded_point(&PointKey::new(id, side))?.vector)
}

fn pool_neighbors(
    query: &[f32],
    pool: &Pool,
    k: usize,
    index: &dyn NeighborSearch,
) -> Result<NeighborList> {
    if pool.is_empty() {
        return Err(Error::InvalidParameter("empty agency pool".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let filter = |key: &PointKey, agency: &Agency| in_pool(pool, key, agency);
    let hits = index.search(query, k, &filter);
    if hits.len() < k {
        return Err(Error::InsufficientPool {
            available: hits.len(),
            k,
        });
    }
    Ok(hits)
}

fn shared_keys(a: &NeighborList, b: &NeighborList) -> usize {
    let left: HashSet<&PointKey> = a.keys().collect();
    b.keys().filter(|key| left.contains(key)).count()
}

/// Distance between the two unit-normalized representations of `id`.
pub fn pair_distance(corpus: &Corpus, id: &str, pair: Pair) -> Result<f64> {
    let left = unit_vector(corpus, id, pair.left)?;
    let right = unit_vector(corpus, id, pair.right)?;
    euclidean(&left, &right)
}

/// Mean distance from the `side` representation of `id` to its `k` nearest
/// native-English points of the `pool` agencies.
pub fn baseline_distance(
    corpus: &Corpus,
    id: &str,
    side: CoordinateType,
    pool: &Pool,
    k: usize,
    index: &dyn NeighborSearch,
) -> Result<f64> {
    let query = unit_vector(corpus, id, side)?;
    let hits = pool_neighbors(&query, pool, k, index)?;
    Ok(hits.mean_distance().expect("k >= 1 neighbors"))
}

/// Number of pool projects among the `k` nearest neighbors of both sides of `id`.
pub fn neighborhood_overlap(
    corpus: &Corpus,
    id: &str,
    pair: Pair,
    pool: &Pool,
    k: usize,
    index: &dyn NeighborSearch,
) -> Result<usize> {
    let left = pool_neighbors(&unit_vector(corpus, id, pair.left)?, pool, k, index)?;
    let right = pool_neighbors(&unit_vector(corpus, id, pair.right)?, pool, k, index)?;
    Ok(shared_keys(&left, &right))
}

/// Everything the protocol measures for one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdMeasurement {
    pub id: String,
    pub pair_distance: f64,
    pub left_baseline: f64,
    pub right_baseline: f64,
    pub overlap: usize,
}

/// Samples per `spec` and measures every sampled project.
///
/// Results are sorted by id and all neighbor queries go through one
/// [`NeighborSearch::search_batch`] call, so the output never depends on the
/// thread count. The first failing id (in id order) determines the error.
pub fn measure_sample(
    corpus: &Corpus,
    spec: &SampleSpec,
    pool: &Pool,
    k: usize,
    index: &dyn NeighborSearch,
) -> Result<Vec<IdMeasurement>> {
    if pool.is_empty() {
        return Err(Error::InvalidParameter("empty agency pool".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut ids = sample_ids(corpus, spec)?;
    ids.sort();
    let mut queries = Vec::with_capacity(2 * ids.len());
    for id in &ids {
        queries.push(unit_vector(corpus, id, spec.pair.left)?);
        queries.push(unit_vector(corpus, id, spec.pair.right)?);
    }
    let filter = |key: &PointKey, agency: &Agency| in_pool(pool, key, agency);
    let hits = index.search_batch(&queries, k, &filter);
    ids.into_iter()
        .zip(queries.chunks(2).zip(hits.chunks(2)))
        .map(|(id, (q, h))| {
            for list in h {
                if list.len() < k {
                    return Err(Error::InsufficientPool {
                        available: list.len(),
                        k,
                    });
                }
            }
            Ok(IdMeasurement {
                pair_distance: euclidean(&q[0], &q[1])?,
                left_baseline: h[0].mean_distance().expect("k >= 1 neighbors"),
                right_baseline: h[1].mean_distance().expect("k >= 1 neighbors"),
                overlap: shared_keys(&h[0], &h[1]),
                id,
            })
        })
        .collect()
}

/// One row of a distance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub label: String,
    pub stats: SummaryStats,
}

/// Within-pair distance and both baselines over one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub spec: SampleSpec,
    pub pool: Pool,
    pub k: usize,
    /// Within-pair, left-to-pool, right-to-pool.
    pub rows: [DistanceRow; 3],
    /// Per-project values, sorted by id.
    pub samples: Vec<IdMeasurement>,
}

impl DistanceReport {
    pub fn from_measurements(
        spec: &SampleSpec,
        pool: &Pool,
        k: usize,
        samples: Vec<IdMeasurement>,
    ) -> Result<Self> {
        let column = |f: fn(&IdMeasurement) -> f64| -> Vec<f64> { samples.iter().map(f).collect() };
        let pair = spec.pair;
        let rows = [
            DistanceRow {
                label: format!(
                    "Between {} and {} (same project)",
                    pair.left.label(),
                    pair.right.label()
                ),
                stats: summary_stats(&column(|m| m.pair_distance))?,
            },
            DistanceRow {
                label: format!("Between {} and Native English", pair.left.label()),
                stats: summary_stats(&column(|m| m.left_baseline))?,
            },
            DistanceRow {
                label: format!("Between {} and Native English", pair.right.label()),
                stats: summary_stats(&column(|m| m.right_baseline))?,
            },
        ];
        Ok(Self {
            spec: spec.clone(),
            pool: pool.clone(),
            k,
            rows,
            samples,
        })
    }

    pub fn within_pair(&self) -> &SummaryStats {
        &self.rows[0].stats
    }

    pub fn left_baseline(&self) -> &SummaryStats {
        &self.rows[1].stats
    }

    pub fn right_baseline(&self) -> &SummaryStats {
        &self.rows[2].stats
    }
}

/// Shared pool neighbors per sampled project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub spec: SampleSpec,
    pub pool: Pool,
    pub k: usize,
    /// `(id, overlap)` sorted by id; every overlap is at most `k`.
    pub per_id: Vec<(String, usize)>,
    pub average: f64,
}

impl OverlapReport {
    pub fn from_measurements(
        spec: &SampleSpec,
        pool: &Pool,
        k: usize,
        samples: &[IdMeasurement],
    ) -> Self {
        let per_id: Vec<(String, usize)> =
            samples.iter().map(|m| (m.id.clone(), m.overlap)).collect();
        let average = if per_id.is_empty() {
            0.0
        } else {
            per_id.iter().map(|(_, o)| *o as f64).sum::<f64>() / per_id.len() as f64
        };
        Self {
            spec: spec.clone(),
            pool: pool.clone(),
            k,
            per_id,
            average,
        }
    }
}

/// Distance table over the projects sampled by `spec`.
pub fn distance_table(
    corpus: &Corpus,
    spec: &SampleSpec,
    pool: &Pool,
    k: usize,
    index: &dyn NeighborSearch,
) -> Result<DistanceReport> {
    let samples = measure_sample(corpus, spec, pool, k, index)?;
    DistanceReport::from_measurements(spec, pool, k, samples)
}

/// Overlap table over the projects sampled by `spec`.
pub fn overlap_table(
    corpus: &Corpus,
    spec: &SampleSpec,
    pool: &Pool,
    k: usize,
    index: &dyn NeighborSearch,
) -> Result<OverlapReport> {
    let samples = measure_sample(corpus, spec, pool, k, index)?;
    Ok(OverlapReport::from_measurements(spec, pool, k, &samples))
}
