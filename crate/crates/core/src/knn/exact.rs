use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use super::{
    prepare_points, shortlist_rerank, shortlist_slack, to_neighbors, Candidate, Filter,
    NeighborList, NeighborSearch,
};
use crate::corpus::EmbeddedPoint;
use crate::error::Result;
use crate::metrics::{dot, euclidean_unchecked};

/// Queries per similarity block in [`ExactIndex::query_batch`].
const QUERY_BLOCK: usize = 256;

/// Brute-force index: every query scans every point.
#[derive(Debug, Clone)]
pub struct ExactIndex {
    points: Vec<EmbeddedPoint>,
}

impl ExactIndex {
    pub fn build(points: Vec<EmbeddedPoint>) -> Result<Self> {
        Ok(Self {
            points: prepare_points(points)?,
        })
    }

    pub fn points(&self) -> &[EmbeddedPoint] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].vector.len()
    }

    /// The `k` closest points passing `filter`. Fewer are returned only when
    /// fewer than `k` points pass.
    pub fn query(&self, query: &[f32], k: usize, filter: Filter<'_>) -> NeighborList {
        assert_eq!(query.len(), self.dim(), "query dimension mismatch");
        if k == 0 {
            return NeighborList::default();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        for (i, p) in self.points.iter().enumerate() {
            if !filter(&p.key, &p.agency) {
                continue;
            }
            let c = Candidate {
                distance: euclidean_unchecked(query, &p.vector),
                index: i as u32,
            };
            if heap.len() < k {
                heap.push(c);
            } else if c < *heap.peek().expect("heap is full") {
                heap.pop();
                heap.push(c);
            }
        }
        to_neighbors(&self.points, heap.into_vec())
    }

    /// Same answers as [`query`](Self::query) on each element, computed with
    /// blocked single-precision similarity products and an exact re-rank of
    /// a shortlist per query.
    ///
    /// `filter` is evaluated once per point for the whole batch.
    pub fn query_batch(
        &self,
        queries: &[Vec<f32>],
        k: usize,
        filter: Filter<'_>,
    ) -> Vec<NeighborList> {
        let dim = self.dim();
        assert!(
            queries.iter().all(|q| q.len() == dim),
            "query dimension mismatch"
        );
        let eligible: Vec<u32> = (0..self.points.len() as u32)
            .filter(|&i| {
                let p = &self.points[i as usize];
                filter(&p.key, &p.agency)
            })
            .collect();
        if k == 0 || eligible.is_empty() {
            return vec![NeighborList::default(); queries.len()];
        }
        let mut data = Array2::<f32>::zeros((eligible.len(), dim));
        for (mut row, &i) in data.outer_iter_mut().zip(&eligible) {
            row.assign(&ArrayView1::from(self.points[i as usize].vector.as_slice()));
        }
        let sq_norms: Vec<f64> = eligible
            .iter()
            .map(|&i| {
                dot(
                    &self.points[i as usize].vector,
                    &self.points[i as usize].vector,
                )
            })
            .collect();
        let max_sq_norm = sq_norms.iter().cloned().fold(0.0, f64::max);

        queries
            .par_chunks(QUERY_BLOCK)
            .flat_map_iter(|block| {
                let mut qmat = Array2::<f32>::zeros((block.len(), dim));
                for (mut row, q) in qmat.outer_iter_mut().zip(block) {
                    row.assign(&ArrayView1::from(q.as_slice()));
                }
                let sims = qmat.dot(&data.t());
                let mut approx: Vec<(f64, u32)> = Vec::with_capacity(eligible.len());
                block
                    .iter()
                    .zip(sims.outer_iter())
                    .map(|(q, sim_row)| {
                        let q_sq = dot(q, q);
                        approx.clear();
                        approx.extend(
                            sim_row
                                .iter()
                                .zip(&sq_norms)
                                .zip(&eligible)
                                .map(|((&s, &p_sq), &i)| (q_sq + p_sq - 2.0 * s as f64, i)),
                        );
                        let slack = shortlist_slack(dim, q_sq, max_sq_norm);
                        let found = shortlist_rerank(q, &self.points, &approx, k, slack);
                        to_neighbors(&self.points, found)
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

impl NeighborSearch for ExactIndex {
    fn search(&self, query: &[f32], k: usize, filter: Filter<'_>) -> NeighborList {
        self.query(query, k, filter)
    }

    fn search_batch(
        &self,
        queries: &[Vec<f32>],
        k: usize,
        filter: Filter<'_>,
    ) -> Vec<NeighborList> {
        self.query_batch(queries, k, filter)
    }

    fn len(&self) -> usize {
        self.points.len()
    }
}
