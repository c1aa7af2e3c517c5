//! The drift measurement protocol.
//!
//! For each sampled project the protocol measures:
//!
//! 1. the distance between its two coordinate-type representations,
//! 2. the mean distance from each representation to its `k` nearest
//!    native-English pool points,
//! 3. how many of those `k` pool neighbors the two representations share.
//!
//! The first two feed [`DistanceReport`], the third [`OverlapReport`].

mod histogram;
mod measure;
mod report;
mod sampling;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use histogram::{distance_histogram, Histogram, MAX_UNIT_DISTANCE};
pub use measure::{
    baseline_distance, distance_table, measure_sample, neighborhood_overlap, overlap_table,
    pair_distance, DistanceReport, DistanceRow, IdMeasurement, OverlapReport,
};
pub use sampling::{sample_ids, shuffle_prefix, SampleSpec};

use crate::corpus::{Agency, CoordinateType, PointKey};
use crate::error::{Error, Result};

/// Neighbors retrieved per representation unless configured otherwise.
pub const DEFAULT_K: usize = 10;
/// Projects sampled per table unless configured otherwise.
pub const DEFAULT_SAMPLE_SIZE: usize = 1000;

/// Two distinct coordinate types compared for the same project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub left: CoordinateType,
    pub right: CoordinateType,
}

impl Pair {
    pub fn new(left: CoordinateType, right: CoordinateType) -> Result<Self> {
        if left == right {
            return Err(Error::InvalidParameter(format!(
                "pair sides must differ, got {left} twice"
            )));
        }
        Ok(Self { left, right })
    }

    pub fn swapped(self) -> Self {
        Self {
            left: self.right,
            right: self.left,
        }
    }
}

impl Default for Pair {
    fn default() -> Self {
        Self {
            left: CoordinateType::NativeJa,
            right: CoordinateType::MtEn,
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.left, self.right)
    }
}

impl FromStr for Pair {
    type Err = Error;

    /// Parses `left,right` (a `:` separator is also accepted).
    fn from_str(s: &str) -> Result<Self> {
        let (l, r) = s.split_once([',', ':']).ok_or_else(|| {
            Error::InvalidParameter(format!("pair {s:?} should look like NativeJa,MtEn"))
        })?;
        Pair::new(l.parse()?, r.parse()?)
    }
}

/// Agencies whose native-English projects form the retrieval pool.
pub type Pool = BTreeSet<Agency>;

/// NIH, NSF and UKRI.
pub fn default_pool() -> Pool {
    [Agency::Nih, Agency::Nsf, Agency::Ukri]
        .into_iter()
        .collect()
}

/// Parses a comma-separated agency list.
pub fn parse_pool(s: &str) -> Result<Pool> {
    let pool: Pool = s
        .split(',')
        .filter(|part| !part.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if pool.is_empty() {
        return Err(Error::InvalidParameter("empty agency pool".into()));
    }
    Ok(pool)
}

pub fn format_pool(pool: &Pool) -> String {
    pool.iter()
        .map(Agency::as_str)
        .collect::<Vec<_>>()
        .join(",")
}

/// Whether a point belongs to the native-English pool of `pool`'s agencies.
pub fn in_pool(pool: &Pool, key: &PointKey, agency: &Agency) -> bool {
    key.coordinate_type == CoordinateType::NativeEn && pool.contains(agency)
}
