//! Exact and graph-based k-nearest-neighbor retrieval over embedded points.
//!
//! Both index types return neighbors ordered by ascending distance with ties
//! broken by ascending key, and both apply the caller's filter during the
//! search: filtered-out points can still be traversed but are never returned.

mod exact;
mod graph;
pub mod index_file;

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use exact::ExactIndex;
pub use graph::{GraphIndex, GraphSearcher, DEFAULT_DEGREE};

use crate::corpus::{Agency, EmbeddedPoint, PointKey};
use crate::error::{Error, Result};

/// Predicate deciding which indexed points may be returned.
pub type Filter<'a> = &'a (dyn Fn(&PointKey, &Agency) -> bool + Sync);

/// Filter that accepts every point.
pub fn accept_all(_: &PointKey, _: &Agency) -> bool {
    true
}

/// Anything that can answer filtered k-NN queries.
pub trait NeighborSearch: Sync {
    fn search(&self, query: &[f32], k: usize, filter: Filter<'_>) -> NeighborList;

    /// Answers every query; element `i` equals `search(&queries[i], ..)`.
    fn search_batch(
        &self,
        queries: &[Vec<f32>],
        k: usize,
        filter: Filter<'_>,
    ) -> Vec<NeighborList> {
        queries
            .par_iter()
            .map(|q| self.search(q, k, filter))
            .collect()
    }

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub key: PointKey,
    pub distance: f64,
}

/// Neighbors by ascending distance, then ascending key. Keys are unique.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborList(Vec<Neighbor>);

impl NeighborList {
    /// Sorts `neighbors` into canonical order.
    pub fn from_unsorted(mut neighbors: Vec<Neighbor>) -> Self {
        neighbors.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then_with(|| a.key.cmp(&b.key))
        });
        Self(neighbors)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Neighbor> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Neighbor] {
        &self.0
    }

    pub fn keys(&self) -> impl Iterator<Item = &PointKey> {
        self.0.iter().map(|n| &n.key)
    }

    pub fn mean_distance(&self) -> Option<f64> {
        if self.0.is_empty() {
            return None;
        }
        Some(self.0.iter().map(|n| n.distance).sum::<f64>() / self.0.len() as f64)
    }
}

impl<'a> IntoIterator for &'a NeighborList {
    type Item = &'a Neighbor;
    type IntoIter = std::slice::Iter<'a, Neighbor>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Graph search knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Capacity of the candidate pool; must be at least `k`.
    pub pool_size: usize,
    /// Entry points per query: this many nearest landmarks plus this many random points.
    pub entry_count: usize,
    /// Distance evaluations allowed beyond the landmarks and entry points.
    pub max_evaluations: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            pool_size: 64,
            entry_count: 4,
            max_evaluations: 4096,
        }
    }
}

impl SearchParams {
    pub fn validate(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.pool_size < k {
            return Err(Error::InvalidParameter(format!(
                "pool_size {} is smaller than k = {k}",
                self.pool_size
            )));
        }
        if self.entry_count == 0 {
            return Err(Error::InvalidParameter(
                "entry_count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Fraction of the first `k` exact neighbors present in `approx`.
pub fn recall_at_k(approx: &NeighborList, exact: &NeighborList, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if exact.len() < k {
        return Err(Error::InsufficientGroundTruth {
            k,
            got: exact.len(),
        });
    }
    let truth: HashSet<&PointKey> = exact.keys().take(k).collect();
    let hits = approx
        .keys()
        .take(k)
        .filter(|key| truth.contains(key))
        .count();
    Ok(hits as f64 / k as f64)
}

/// Heap entry ordered by distance, then point index. Points inside an index
/// are sorted by key, so index order doubles as the key tie-break.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub distance: f64,
    pub index: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.index.cmp(&other.index))
    }
}

/// Slack on approximate squared distances when shortlisting.
///
/// A single-precision dot product of length `dim` errs by at most about
/// `dim * EPSILON / 2 * |q| |p|`, so an approximate squared distance errs by
/// at most `dim * EPSILON / 2 * (|q|^2 + |p|^2)`. The shortlist compares two
/// such values, and a further factor of two covers the bound's looseness.
pub(crate) fn shortlist_slack(dim: usize, query_sq_norm: f64, max_sq_norm: f64) -> f64 {
    2.0 * dim as f64 * f32::EPSILON as f64 * (query_sq_norm + max_sq_norm) + 1e-12
}

/// Exact `k` best among `approx`, a list of `(approximate squared distance,
/// point index)`. Entries more than `slack` above the `k`-th approximate
/// value are skipped; the rest are re-ranked with double-precision distances.
pub(crate) fn shortlist_rerank(
    query: &[f32],
    points: &[EmbeddedPoint],
    approx: &[(f64, u32)],
    k: usize,
    slack: f64,
) -> Vec<Candidate> {
    let k = k.min(approx.len());
    if k == 0 {
        return Vec::new();
    }
    let threshold = kth_smallest(approx.iter().map(|a| a.0), k) + slack;
    let mut shortlist: Vec<Candidate> = approx
        .iter()
        .filter(|(d2, _)| *d2 <= threshold)
        .map(|&(_, j)| Candidate {
            distance: crate::metrics::euclidean_unchecked(query, &points[j as usize].vector),
            index: j,
        })
        .collect();
    shortlist.sort_unstable();
    shortlist.truncate(k);
    shortlist
}

/// The `k`-th smallest of `values` (counting repeats), for `1 <= k <= len`.
/// A sorted buffer of the best `k` so far; most values fail the first comparison.
fn kth_smallest(values: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for v in values {
        if best.len() == k {
            if v.total_cmp(&best[k - 1]).is_ge() {
                continue;
            }
            best.pop();
        }
        let at = best.partition_point(|b| b.total_cmp(&v).is_le());
        best.insert(at, v);
    }
    best[k - 1]
}

/// Sorts points by key and checks they are non-empty, uniquely keyed and of
/// one dimension.
pub(crate) fn prepare_points(mut points: Vec<EmbeddedPoint>) -> Result<Vec<EmbeddedPoint>> {
    if points.is_empty() {
        return Err(Error::EmptyIndex);
    }
    if points.len() > u32::MAX as usize {
        return Err(Error::InvalidParameter("more than 2^32 points".into()));
    }
    points.sort_by(|a, b| a.key.cmp(&b.key));
    let dim = points[0].vector.len();
    for pair in points.windows(2) {
        if pair[0].key == pair[1].key {
            return Err(Error::DuplicateKey(pair[0].key.clone()));
        }
    }
    if let Some(p) = points.iter().find(|p| p.vector.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: p.vector.len(),
        });
    }
    Ok(points)
}

fn to_neighbors(points: &[EmbeddedPoint], mut found: Vec<Candidate>) -> NeighborList {
    found.sort();
    NeighborList(
        found
            .into_iter()
            .map(|c| Neighbor {
                key: points[c.index as usize].key.clone(),
                distance: c.distance,
            })
            .collect(),
    )
}
