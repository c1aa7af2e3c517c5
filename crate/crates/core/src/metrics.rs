//! Normalization, distances and summary statistics.
//!
//! Vectors are stored as `f32`; every reduction here accumulates in `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms at or below this are treated as zero.
pub const MIN_NORM: f64 = 1e-12;

const LANES: usize = 4;

/// Sum of `f(a[i], b[i])` in `f64` with a fixed four-lane accumulation order.
#[inline]
fn reduce(a: &[f32], b: &[f32], f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut acc = [0.0f64; LANES];
    let chunks_a = a.chunks_exact(LANES);
    let chunks_b = b.chunks_exact(LANES);
    let tail = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .fold(0.0, |s, (&x, &y)| s + f(x as f64, y as f64));
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for lane in 0..LANES {
            acc[lane] += f(ca[lane] as f64, cb[lane] as f64);
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn check_dims(a: &[f32], b: &[f32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    reduce(a, b, |x, y| x * y)
}

pub fn norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

/// Squared Euclidean distance without the dimension check.
#[inline]
pub(crate) fn squared_euclidean_unchecked(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    reduce(a, b, |x, y| {
        let d = x - y;
        d * d
    })
}

#[inline]
pub(crate) fn euclidean_unchecked(a: &[f32], b: &[f32]) -> f64 {
    squared_euclidean_unchecked(a, b).sqrt()
}

/// Scales `v` to unit L2 norm.
pub fn normalize(v: &[f32]) -> Result<Vec<f32>> {
    let n = norm(v);
    if n.is_nan() || n <= MIN_NORM {
        return Err(Error::DegenerateVector(n));
    }
    if (n * n - 1.0).abs() < UNIT_SLACK {
        return Ok(v.to_vec());
    }
    let mut u: Vec<f32> = v.iter().map(|&x| (x as f64 / n) as f32).collect();
    refine_unit_norm(&mut u);
    Ok(u)
}

/// Squared-norm slack within which a vector already counts as unit length.
const UNIT_SLACK: f64 = 1e-12;

/// Largest number of ulps a single component may move during refinement.
const MAX_ULP_SHIFT: i64 = 4;

/// Rounding to `f32` leaves the squared norm off by roughly 1e-8. Nudge
/// components by a few ulps each, so the `f64` squared norm lands
/// within about 1e-12 of one. Inputs already that close are left untouched.
fn refine_unit_norm(u: &mut [f32]) {
    let mut residual = 1.0 - dot(u, u);
    for _ in 0..3 {
        for slot in u.iter_mut() {
            if residual.abs() < UNIT_SLACK / 10.0 {
                return;
            }
            let x = *slot;
            let mag = x.abs();
            let ulp = (f32::from_bits(mag.to_bits() + 1) - mag) as f64;
            let step = 2.0 * mag as f64 * ulp;
            let k = (residual / step).round() as i64;
            let k = k.clamp(-MAX_ULP_SHIFT, MAX_ULP_SHIFT);
            if k == 0 || (mag.to_bits() as i64) <= MAX_ULP_SHIFT {
                continue;
            }
            let moved = f32::from_bits((mag.to_bits() as i64 + k) as u32).copysign(x);
            residual -= (moved as f64).powi(2) - (x as f64).powi(2);
            *slot = moved;
        }
    }
}

/// Euclidean distance between two vectors of equal dimension.
pub fn euclidean(a: &[f32], b: &[f32]) -> Result<f64> {
    check_dims(a, b)?;
    Ok(euclidean_unchecked(a, b))
}

/// Cosine similarity. Errors when either vector is (near) zero.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    check_dims(a, b)?;
    let na = norm(a);
    let nb = norm(b);
    if na.is_nan() || na <= MIN_NORM {
        return Err(Error::DegenerateVector(na));
    }
    if nb.is_nan() || nb <= MIN_NORM {
        return Err(Error::DegenerateVector(nb));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Mean, sample standard deviation and sample variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub sd: f64,
    pub var: f64,
    pub n: usize,
}

/// Summary statistics with the `n - 1` denominator. Requires two or more values.
pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n - 1) as f64;
    Ok(SummaryStats {
        mean,
        sd: var.sqrt(),
        var,
        n,
    })
}

/// Formats `x` with `places` decimals, ties rounded to even.
///
/// Rust's float formatting rounds the exact binary value and breaks exact
/// decimal ties toward the even digit, which is the convention wanted for
/// report tables.
pub fn format_fixed(x: f64, places: usize) -> String {
    let s = format!("{x:.places$}");
    // "-0.00" reads badly in a table
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}
