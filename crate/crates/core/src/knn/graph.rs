use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    prepare_points, shortlist_rerank, shortlist_slack, to_neighbors, Candidate, Filter,
    NeighborList, NeighborSearch, SearchParams,
};
use crate::corpus::EmbeddedPoint;
use crate::error::{Error, Result};
use crate::metrics::{euclidean_unchecked, squared_euclidean_unchecked};

pub const DEFAULT_DEGREE: usize = 16;

/// Rows per similarity block during construction.
const BUILD_BLOCK: usize = 256;

/// k-NN graph: each point links to its `degree` exact nearest neighbors.
///
/// Search walks the links in both directions. The reverse links and a set of
/// landmark points used to seed queries are derived from the points, links
/// and build seed, and never stored.
#[derive(Debug, Clone)]
pub struct GraphIndex {
    points: Vec<EmbeddedPoint>,
    adjacency: Vec<Vec<u32>>,
    reverse: Vec<Vec<u32>>,
    landmarks: Vec<u32>,
    degree: usize,
    build_seed: u64,
}

impl GraphIndex {
    /// Builds the exact `degree`-NN graph.
    ///
    /// Pairwise similarities come from blocked single-precision matrix
    /// products; a shortlist around each row's `degree`-th value is then
    /// re-ranked with double-precision distances, so the result equals a
    /// full double-precision scan.
    pub fn build(points: Vec<EmbeddedPoint>, degree: usize, build_seed: u64) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParameter(format!(
                "graph degree must be at least 2, got {degree}"
            )));
        }
        if points.len() <= degree {
            return Err(Error::UnderfullGraph {
                degree,
                points: points.len(),
            });
        }
        let points = prepare_points(points)?;
        let n = points.len();
        let dim = points[0].vector.len();

        let mut data = Array2::<f32>::zeros((n, dim));
        for (mut row, p) in data.outer_iter_mut().zip(&points) {
            row.assign(&ndarray::ArrayView1::from(p.vector.as_slice()));
        }
        let sq_norms: Vec<f64> = points
            .iter()
            .map(|p| crate::metrics::dot(&p.vector, &p.vector))
            .collect();
        let max_sq_norm = sq_norms.iter().cloned().fold(0.0, f64::max);

        let blocks: Vec<usize> = (0..n).step_by(BUILD_BLOCK).collect();
        let adjacency: Vec<Vec<u32>> = blocks
            .par_iter()
            .flat_map_iter(|&start| {
                let end = (start + BUILD_BLOCK).min(n);
                let sims = data.slice(s![start..end, ..]).dot(&data.t());
                let mut rows = Vec::with_capacity(end - start);
                let mut approx: Vec<(f64, u32)> = Vec::with_capacity(n);
                for (offset, sim_row) in sims.outer_iter().enumerate() {
                    let i = start + offset;
                    approx.clear();
                    approx.extend(
                        sim_row
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != i)
                            .map(|(j, &s)| (sq_norms[i] + sq_norms[j] - 2.0 * s as f64, j as u32)),
                    );
                    rows.push(exact_row(&points, i, degree, &approx, max_sq_norm));
                }
                rows
            })
            .collect();

        Ok(Self::assemble(points, adjacency, degree, build_seed))
    }

    pub(crate) fn assemble(
        points: Vec<EmbeddedPoint>,
        adjacency: Vec<Vec<u32>>,
        degree: usize,
        build_seed: u64,
    ) -> Self {
        let mut reverse = vec![Vec::new(); points.len()];
        for (i, links) in adjacency.iter().enumerate() {
            for &j in links {
                reverse[j as usize].push(i as u32);
            }
        }
        let landmarks = farthest_point_landmarks(&points, landmark_count(points.len()), build_seed);
        Self {
            points,
            adjacency,
            reverse,
            landmarks,
            degree,
            build_seed,
        }
    }

    pub fn points(&self) -> &[EmbeddedPoint] {
        &self.points
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adjacency
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn build_seed(&self) -> u64 {
        self.build_seed
    }

    pub fn dim(&self) -> usize {
        self.points[0].vector.len()
    }

    /// Indices of the landmark points, in selection order.
    pub fn landmarks(&self) -> &[u32] {
        &self.landmarks
    }

    /// Bundles the index with search parameters for use through [`NeighborSearch`].
    pub fn searcher(&self, params: SearchParams) -> GraphSearcher<'_> {
        GraphSearcher {
            index: self,
            params,
        }
    }

    /// Greedy best-first search.
    ///
    /// Starts from the `entry_count` landmarks nearest to the query plus
    /// `entry_count` points drawn by an RNG seeded from the build seed and
    /// the query bits. It keeps the `pool_size` best points seen and expands
    /// the nearest unexpanded candidate until none can improve the pool or
    /// `max_evaluations` further distance computations have been spent.
    /// Points failing `filter` are expanded like any other but never
    /// returned. Results are approximate.
    pub fn query(
        &self,
        query: &[f32],
        k: usize,
        params: &SearchParams,
        filter: Filter<'_>,
    ) -> NeighborList {
        assert_eq!(query.len(), self.dim(), "query dimension mismatch");
        if k == 0 {
            return NeighborList::default();
        }
        let n = self.points.len();
        let pool_size = params.pool_size.max(k);
        let mut visited = VisitedSet::new(n);
        let mut frontier: BinaryHeap<Reverse<Candidate>> = BinaryHeap::new();
        let mut pool: BinaryHeap<Candidate> = BinaryHeap::with_capacity(pool_size + 1);
        let mut results: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);

        let consider = |index: u32,
                        frontier: &mut BinaryHeap<Reverse<Candidate>>,
                        pool: &mut BinaryHeap<Candidate>,
                        results: &mut BinaryHeap<Candidate>| {
            let p = &self.points[index as usize];
            let c = Candidate {
                distance: euclidean_unchecked(query, &p.vector),
                index,
            };
            if filter(&p.key, &p.agency) {
                push_bounded(results, c, k);
            }
            let improves_pool = pool.len() < pool_size || c < *pool.peek().expect("pool is full");
            if improves_pool {
                push_bounded(pool, c, pool_size);
            }
            // While results are short, keep walking past the pool frontier.
            if improves_pool || results.len() < k {
                frontier.push(Reverse(c));
            }
        };

        let entry_count = params.entry_count.clamp(1, n);
        let mut near: Vec<Candidate> = self
            .landmarks
            .iter()
            .map(|&l| Candidate {
                distance: euclidean_unchecked(query, &self.points[l as usize].vector),
                index: l,
            })
            .collect();
        near.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(self.build_seed ^ query_hash(query));
        let random = rand::seq::index::sample(&mut rng, n, entry_count);
        let entries = near
            .iter()
            .take(entry_count)
            .map(|c| c.index as usize)
            .chain(random.iter());
        for e in entries {
            if visited.contains(e) {
                continue;
            }
            visited.insert(e);
            consider(e as u32, &mut frontier, &mut pool, &mut results);
        }

        let mut evaluations = 0usize;
        'search: while let Some(Reverse(current)) = frontier.pop() {
            let pool_full = pool.len() >= pool_size;
            if pool_full && current > *pool.peek().expect("pool is full") && results.len() >= k {
                break;
            }
            let i = current.index as usize;
            for &next in self.adjacency[i].iter().chain(&self.reverse[i]) {
                if visited.contains(next as usize) {
                    continue;
                }
                if evaluations >= params.max_evaluations {
                    break 'search;
                }
                evaluations += 1;
                visited.insert(next as usize);
                consider(next, &mut frontier, &mut pool, &mut results);
            }
        }

        to_neighbors(&self.points, results.into_vec())
    }
}

/// Picks the `degree` nearest points for row `i` from its approximate
/// squared distances.
fn exact_row(
    points: &[EmbeddedPoint],
    i: usize,
    degree: usize,
    approx: &[(f64, u32)],
    max_sq_norm: f64,
) -> Vec<u32> {
    let slack = shortlist_slack(points[i].vector.len(), max_sq_norm, max_sq_norm);
    shortlist_rerank(&points[i].vector, points, approx, degree, slack)
        .into_iter()
        .map(|c| c.index)
        .collect()
}

/// About twice the square root of the point count.
fn landmark_count(n: usize) -> usize {
    ((2.0 * (n as f64).sqrt()).ceil() as usize).clamp(1, n)
}

/// Farthest-point sampling: start from a point chosen by `seed`, then
/// repeatedly add the point farthest from every landmark so far (lowest
/// index on ties). Well-separated clusters each receive a landmark early.
/// Stops early once every point coincides with a landmark.
fn farthest_point_landmarks(points: &[EmbeddedPoint], count: usize, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..points.len());
    let mut landmarks = vec![first as u32];
    let mut nearest: Vec<f64> = points
        .par_iter()
        .map(|p| squared_euclidean_unchecked(&p.vector, &points[first].vector))
        .collect();
    while landmarks.len() < count {
        let (next, farthest) =
            nearest
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &d)| {
                    if d > best.1 {
                        (i, d)
                    } else {
                        best
                    }
                });
        if farthest <= 0.0 {
            break;
        }
        landmarks.push(next as u32);
        let anchor = &points[next].vector;
        nearest.par_iter_mut().zip(points).for_each(|(m, p)| {
            *m = m.min(squared_euclidean_unchecked(&p.vector, anchor));
        });
    }
    landmarks
}

fn push_bounded(heap: &mut BinaryHeap<Candidate>, c: Candidate, cap: usize) {
    if heap.len() < cap {
        heap.push(c);
    } else if c < *heap.peek().expect("heap is full") {
        heap.pop();
        heap.push(c);
    }
}

/// FNV-1a over the query's bit pattern.
fn query_hash(query: &[f32]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in query {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

struct VisitedSet(Vec<u64>);

impl VisitedSet {
    fn new(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
}

/// A [`GraphIndex`] paired with fixed search parameters.
#[derive(Debug, Clone, Copy)]
pub struct GraphSearcher<'a> {
    pub index: &'a GraphIndex,
    pub params: SearchParams,
}

impl NeighborSearch for GraphSearcher<'_> {
    fn search(&self, query: &[f32], k: usize, filter: Filter<'_>) -> NeighborList {
        self.index.query(query, k, &self.params, filter)
    }

    fn len(&self) -> usize {
        self.index.points.len()
    }
}
