//! Cross-lingual drift measurement for paired embedding corpora.
//!
//! A corpus holds project records in several coordinate types (original
//! Japanese, machine-translated English, author-written English, native
//! English) and one 384-dimensional embedding per record. The crate measures
//! how far the representations of one project sit from each other, how far
//! each sits from its nearest native-English projects, and how much their
//! native-English neighborhoods overlap.
//!
//! Modules:
//!
//! - [`corpus`]: records, vectors, and their file formats
//! - [`metrics`]: normalization, distances, summary statistics
//! - [`knn`]: exact oracle and k-NN graph index
//! - [`analysis`]: sampling, distance and overlap tables, histograms
//! - [`projection`]: two-dimensional PCA projection and plot export
//! - [`synthetic`]: seeded generators for benchmarks and tests

pub mod analysis;
pub mod corpus;
mod error;
pub mod knn;
pub mod metrics;
pub mod projection;
pub mod synthetic;

pub use corpus::{Agency, CoordinateType, Corpus, EmbeddedPoint, PointKey, ProjectRecord};
pub use error::{Error, Result};
pub use knn::{ExactIndex, GraphIndex, NeighborList, NeighborSearch, SearchParams};
pub use metrics::SummaryStats;

/// Dimension of every embedding handled by the crate.
pub const EMBEDDING_DIM: usize = 384;
