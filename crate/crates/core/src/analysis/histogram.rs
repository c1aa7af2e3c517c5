use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the distance between unit vectors.
pub const MAX_UNIT_DISTANCE: f64 = 2.0;

/// Slack for rounding above [`MAX_UNIT_DISTANCE`].
const RANGE_SLACK: f64 = 1e-9;

/// Counts of distances in uniform bins over `[0, 2]`.
///
/// Bins are right-open except the last, which also holds 2 (and values up
/// to `2 + 1e-9`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub label: String,
    /// `bins + 1` strictly increasing edges from 0 to 2.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Two tab-separated columns, `bin_left` and `count`, under a header row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin_left\tcount\n");
        for (left, count) in self.edges.iter().zip(&self.counts) {
            out.push_str(&format!("{left}\t{count}\n"));
        }
        out
    }
}

pub fn distance_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    let width = MAX_UNIT_DISTANCE / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| {
            if i == bins {
                MAX_UNIT_DISTANCE
            } else {
                i as f64 * width
            }
        })
        .collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        if !(0.0..=MAX_UNIT_DISTANCE + RANGE_SLACK).contains(&v) {
            return Err(Error::Range(v));
        }
        let mut bin = ((v / width) as usize).min(bins - 1);
        // Guard against the division landing one bin off an edge.
        while bin > 0 && v < edges[bin] {
            bin -= 1;
        }
        while bin + 1 < bins && v >= edges[bin + 1] {
            bin += 1;
        }
        counts[bin] += 1;
    }
    Ok(Histogram {
        label: String::new(),
        edges,
        counts,
    })
}
