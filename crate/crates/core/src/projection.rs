//! Two-dimensional principal-component projection for visual inspection of
//! paired embeddings, plus a tab-separated export for external plotters.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::{CoordinateType, EmbeddedPoint, PointKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub key: PointKey,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    /// Input order is preserved.
    pub points: Vec<ProjectedPoint>,
    /// Two orthonormal directions; a direction is all zeros when the data
    /// has no variance left for it.
    pub components: [Vec<f64>; 2],
    /// Share of total variance along each component, non-increasing.
    pub explained_variance: [f64; 2],
    pub mean: Vec<f64>,
}

/// Eigenvalues at or below this fraction of the total variance count as zero.
const RANK_TOLERANCE: f64 = 1e-12;
/// Eigenpair residual `|A v - lambda v|` target, relative to the spectral bound.
const RESIDUAL_TOLERANCE: f64 = 1e-10;
const INVERSE_ITERATIONS: usize = 8;
const BISECTION_STEPS: usize = 200;

/// Symmetric `n x n` row-major matrix.
struct Symmetric {
    n: usize,
    a: Vec<f64>,
}

impl Symmetric {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.a
            .chunks_exact(self.n)
            .map(|row| dot64(row, v))
            .collect()
    }

    /// Diagonal and sub-diagonal of a similar tridiagonal matrix, by
    /// Householder reflections.
    fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut a = self.a.clone();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(2) {
            diag[k] = a[k * n + k];
            let mut v: Vec<f64> = (k + 1..n).map(|i| a[i * n + k]).collect();
            let alpha = dot64(&v, &v).sqrt();
            if alpha == 0.0 {
                continue;
            }
            let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += sign * alpha;
            off[k] = -sign * alpha;
            let beta = 2.0 / dot64(&v, &v);
            // trailing block A22 <- H A22 H with H = I - beta v v^T
            let m = n - k - 1;
            let block = |i: usize, j: usize| (k + 1 + i) * n + (k + 1 + j);
            let p: Vec<f64> = (0..m)
                .map(|i| beta * (0..m).map(|j| a[block(i, j)] * v[j]).sum::<f64>())
                .collect();
            let half = beta * dot64(&p, &v) / 2.0;
            let w: Vec<f64> = p.iter().zip(&v).map(|(p, v)| p - half * v).collect();
            for i in 0..m {
                for j in 0..m {
                    a[block(i, j)] -= v[i] * w[j] + w[i] * v[j];
                }
            }
        }
        if n >= 2 {
            diag[n - 2] = a[(n - 2) * n + n - 2];
            off[n - 2] = a[(n - 1) * n + n - 2];
        }
        if n >= 1 {
            diag[n - 1] = a[n * n - 1];
        }
        (diag, off)
    }
}

fn dot64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of eigenvalues of the tridiagonal matrix below `x` (Sturm count).
fn count_below(diag: &[f64], off: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 {
            0.0
        } else {
            off[i - 1] * off[i - 1] / q
        };
        q = diag[i] - x - coupling;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `rank`-th largest eigenvalue (0 = largest) of a symmetric tridiagonal matrix.
fn tridiagonal_eigenvalue(diag: &[f64], off: &[f64], rank: usize) -> f64 {
    let n = diag.len();
    let radius = |i: usize| {
        (if i > 0 { off[i - 1].abs() } else { 0.0 }) + (if i + 1 < n { off[i].abs() } else { 0.0 })
    };
    let mut lo = (0..n)
        .map(|i| diag[i] - radius(i))
        .fold(f64::INFINITY, f64::min);
    let mut hi = (0..n)
        .map(|i| diag[i] + radius(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let pivmin = f64::MIN_POSITIVE * off.iter().map(|e| e * e).fold(1.0, f64::max);
    let target = n - 1 - rank;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(diag, off, mid, pivmin) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// LU factorization of `m - shift * I` with partial pivoting. Exactly zero
/// pivots are nudged so the near-singular systems of inverse iteration stay
/// solvable.
struct ShiftedLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl ShiftedLu {
    fn new(m: &Symmetric, shift: f64, scale: f64) -> Self {
        let n = m.n;
        let mut lu = m.a.clone();
        for i in 0..n {
            lu[i * n + i] -= shift;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let floor = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let pivot_row = (k..n)
                .max_by(|&x, &y| {
                    lu[x * n + k]
                        .abs()
                        .total_cmp(&lu[y * n + k].abs())
                        .then(y.cmp(&x))
                })
                .expect("non-empty range");
            if pivot_row != k {
                for j in 0..n {
                    lu.swap(k * n + j, pivot_row * n + j);
                }
                perm.swap(k, pivot_row);
            }
            if lu[k * n + k].abs() < floor {
                lu[k * n + k] = floor;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }
        Self { n, lu, perm }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

fn remove_components(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot64(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

/// Eigenvector for `lambda` by inverse iteration, kept orthogonal to `found`.
fn inverse_iteration(m: &Symmetric, lambda: f64, scale: f64, found: &[Vec<f64>]) -> Vec<f64> {
    let n = m.n;
    let lu = ShiftedLu::new(m, lambda, scale);
    // fixed, irregular start vector
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0)
        .collect();
    for _ in 0..INVERSE_ITERATIONS {
        remove_components(&mut v, found);
        let norm = dot64(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mv = m.mul(&v);
        let residual: f64 = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= RESIDUAL_TOLERANCE * scale {
            break;
        }
        v = lu.solve(&v);
    }
    remove_components(&mut v, found);
    let norm = dot64(&v, &v).sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// Two largest eigenpairs of a symmetric matrix, largest first.
fn top_eigenpairs(m: &Symmetric) -> Vec<(f64, Vec<f64>)> {
    let (diag, off) = m.tridiagonal();
    let scale = (0..m.n)
        .map(|i| (0..m.n).map(|j| m.at(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut pairs = Vec::new();
    for rank in 0..2.min(m.n) {
        let lambda = tridiagonal_eigenvalue(&diag, &off, rank);
        let v = inverse_iteration(m, lambda, scale, &found);
        found.push(v.clone());
        pairs.push((lambda, v));
    }
    pairs
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.into_iter().map(|x| x / n).collect()
    } else {
        v
    }
}

/// Top two eigenpairs of the sample covariance of the centered rows of `x`.
///
/// Works on the `d x d` covariance, or on the `n x n` Gram matrix when there
/// are fewer points than dimensions; both share their nonzero spectrum.
fn top_two(x: &Array2<f64>) -> ([f64; 2], [Vec<f64>; 2], f64) {
    let (n, d) = x.dim();
    let scale = 1.0 / (n - 1) as f64;
    let gram = n < d;
    let matrix = if gram {
        x.dot(&x.t()) * scale
    } else {
        x.t().dot(x) * scale
    };
    let m = Symmetric {
        n: matrix.nrows(),
        a: matrix.iter().cloned().collect(),
    };
    let total: f64 = (0..m.n).map(|i| m.at(i, i).max(0.0)).sum();

    let mut values = [0.0; 2];
    let mut directions = [vec![0.0; d], vec![0.0; d]];
    if total <= 0.0 {
        return (values, directions, total);
    }
    for (slot, (lambda, vector)) in top_eigenpairs(&m).into_iter().enumerate() {
        if lambda <= RANK_TOLERANCE * total {
            continue;
        }
        let mut dir = if gram {
            // v = X^T u, normalized
            unit(x.t().dot(&ndarray::Array1::from(vector)).to_vec())
        } else {
            vector
        };
        fix_sign(&mut dir);
        values[slot] = lambda;
        directions[slot] = dir;
    }
    (values, directions, total)
}

/// Projects points onto their top two principal directions.
///
/// Needs at least three points. When the data has rank below two, the
/// missing components come back as zero vectors with zero variance share.
pub fn pca_2d(points: &[EmbeddedPoint]) -> Result<Projection2D> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let d = points[0].vector.len();
    if let Some(p) = points.iter().find(|p| p.vector.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            found: p.vector.len(),
        });
    }
    let mut x = Array2::<f64>::zeros((points.len(), d));
    for (mut row, p) in x.outer_iter_mut().zip(points) {
        row.iter_mut()
            .zip(&p.vector)
            .for_each(|(a, &b)| *a = b as f64);
    }
    let mean = x.mean_axis(Axis(0)).expect("at least three rows");
    x -= &mean;

    let (values, components, total) = top_two(&x);
    let explained_variance = values.map(|v| if total > 0.0 { v / total } else { 0.0 });
    let projected_points = x
        .outer_iter()
        .zip(points)
        .map(|(row, p)| {
            let along = |c: &Vec<f64>| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            ProjectedPoint {
                key: p.key.clone(),
                x: along(&components[0]),
                y: along(&components[1]),
            }
        })
        .collect();
    Ok(Projection2D {
        points: projected_points,
        components,
        explained_variance,
        mean: mean.to_vec(),
    })
}

/// One row of a plot-data file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub key: String,
    pub series: CoordinateType,
    pub x: f64,
    pub y: f64,
}

pub const PLOT_HEADER: &str = "key\tseries\tx\ty";

/// Writes `key  series  x  y` rows, tab-separated, with the coordinate type
/// as the series label. Coordinates use shortest round-trip formatting.
pub fn export_plot_data(projection: &Projection2D, path: &Path) -> Result<()> {
    if projection.points.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{PLOT_HEADER}")?;
    for p in &projection.points {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            p.key.id, p.key.coordinate_type, p.x, p.y
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_plot_data(path: &Path) -> Result<Vec<PlotRow>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        if idx == 0 {
            if line != PLOT_HEADER {
                return Err(parse_err(format!("expected header {PLOT_HEADER:?}")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(format!(
                "expected 4 fields, found {}",
                fields.len()
            )));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(e.to_string()));
        rows.push(PlotRow {
            key: fields[0].to_string(),
            series: fields[1]
                .parse()
                .map_err(|e: Error| parse_err(e.to_string()))?,
            x: num(fields[2])?,
            y: num(fields[3])?,
        });
    }
    Ok(rows)
}
