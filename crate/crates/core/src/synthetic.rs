//! Seeded generators for synthetic corpora.
//!
//! All generators draw from the caller's RNG, so a fixed seed reproduces the
//! same data on every platform.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::corpus::{Agency, CoordinateType, Corpus, EmbeddedPoint, PointKey, ProjectRecord};
use crate::error::Result;
use crate::metrics;
use crate::EMBEDDING_DIM;

fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    (0..dim)
        .map(|_| rng.sample::<f32, _>(StandardNormal))
        .collect()
}

/// Uniformly distributed unit vector.
pub fn unit_vector(rng: &mut impl Rng) -> Vec<f32> {
    loop {
        if let Ok(v) = metrics::normalize(&gaussian(rng, EMBEDDING_DIM)) {
            return v;
        }
    }
}

/// `center + spread * g` for standard normal `g`, normalized.
pub fn perturb(center: &[f32], spread: f32, rng: &mut impl Rng) -> Vec<f32> {
    loop {
        let v: Vec<f32> = center
            .iter()
            .map(|&c| c + spread * rng.sample::<f32, _>(StandardNormal))
            .collect();
        if let Ok(v) = metrics::normalize(&v) {
            return v;
        }
    }
}

fn native_en_point(id: String, agency: Agency, vector: &[f32]) -> EmbeddedPoint {
    EmbeddedPoint::new(PointKey::new(id, CoordinateType::NativeEn), agency, vector)
        .expect("generated vectors are non-degenerate")
}

/// Unit vectors near a random low-dimensional subspace.
///
/// A vector is `B z + noise * g`, normalized, with `z` standard normal in
/// `latent_dim` dimensions, `B` a fixed random 384 x `latent_dim` Gaussian
/// basis scaled by `1 / sqrt(latent_dim)`, and `g` isotropic. Sentence
/// embeddings concentrate near low-dimensional structure in the same way,
/// which is what makes graph search over them effective.
#[derive(Debug, Clone)]
pub struct LowRankSphere {
    basis: Vec<Vec<f32>>,
    noise: f32,
}

impl LowRankSphere {
    pub fn new(latent_dim: usize, noise: f32, rng: &mut impl Rng) -> Self {
        let scale = 1.0 / (latent_dim as f32).sqrt();
        let basis = (0..latent_dim)
            .map(|_| {
                gaussian(rng, EMBEDDING_DIM)
                    .into_iter()
                    .map(|x| x * scale)
                    .collect()
            })
            .collect();
        Self { basis, noise }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f32> {
        loop {
            let mut v = vec![0.0f32; EMBEDDING_DIM];
            for row in &self.basis {
                let z: f32 = rng.sample(StandardNormal);
                for (x, b) in v.iter_mut().zip(row) {
                    *x += z * b;
                }
            }
            for x in v.iter_mut() {
                *x += self.noise * rng.sample::<f32, _>(StandardNormal);
            }
            if let Ok(v) = metrics::normalize(&v) {
                return v;
            }
        }
    }

    /// `n` native-English points keyed `{prefix}{i:06}`, agencies cycling NIH, NSF, UKRI.
    pub fn points(&self, n: usize, prefix: &str, rng: &mut impl Rng) -> Vec<EmbeddedPoint> {
        (0..n)
            .map(|i| native_en_point(format!("{prefix}{i:06}"), pool_agency(i), &self.sample(rng)))
            .collect()
    }
}

/// Latent dimension of the recall benchmark distribution.
pub const RECALL_LATENT_DIM: usize = 16;
/// Isotropic noise of the recall benchmark distribution.
pub const RECALL_NOISE: f32 = 0.02;

/// The recall benchmark distribution: [`LowRankSphere`] with
/// [`RECALL_LATENT_DIM`] and [`RECALL_NOISE`].
pub fn recall_benchmark(rng: &mut impl Rng) -> LowRankSphere {
    LowRankSphere::new(RECALL_LATENT_DIM, RECALL_NOISE, rng)
}

/// `n` points from a freshly drawn recall benchmark distribution.
pub fn recall_benchmark_points(n: usize, rng: &mut impl Rng) -> Vec<EmbeddedPoint> {
    recall_benchmark(rng).points(n, "p", rng)
}

fn pool_agency(i: usize) -> Agency {
    match i % 3 {
        0 => Agency::Nih,
        1 => Agency::Nsf,
        _ => Agency::Ukri,
    }
}

fn synthetic_record(id: String, agency: Agency, coordinate_type: CoordinateType) -> ProjectRecord {
    ProjectRecord {
        title: format!("synthetic title {id}"),
        abstract_text: format!("synthetic abstract {id}"),
        id,
        agency,
        coordinate_type,
        fiscal_year: None,
    }
}

/// Paired corpus mimicking the drift regime of real funding data.
///
/// - `topics` random unit centers.
/// - `pool_size` native-English points (agencies cycling NIH, NSF, UKRI),
///   point `i` drawn around center `i % topics` with [`perturb`] at `topic_spread`.
/// - `pairs` KAKENHI projects: a project vector is drawn like a pool point
///   around a uniformly chosen center, and the `left` and `right` vectors
///   are two independent perturbations of it at `pair_noise`.
///
/// Both sides are statistically alike, so their pool baselines agree. With
/// `pair_noise = 0` both sides are identical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedCorpusSpec {
    pub pairs: usize,
    pub pool_size: usize,
    pub topics: usize,
    pub topic_spread: f32,
    pub pair_noise: f32,
    pub left: CoordinateType,
    pub right: CoordinateType,
}

impl Default for PairedCorpusSpec {
    /// 1,000 pairs and 5,000 pool points calibrated so that the mean
    /// within-pair distance is about 0.6 and the mean distance to the ten
    /// nearest pool points is about 0.75.
    fn default() -> Self {
        Self {
            pairs: 1000,
            pool_size: 5000,
            topics: 50,
            topic_spread: 0.0284,
            pair_noise: 0.0240,
            left: CoordinateType::NativeJa,
            right: CoordinateType::MtEn,
        }
    }
}

impl PairedCorpusSpec {
    pub fn generate(&self, rng: &mut impl Rng) -> Result<Corpus> {
        let centers: Vec<Vec<f32>> = (0..self.topics.max(1)).map(|_| unit_vector(rng)).collect();
        let mut corpus = Corpus::new();
        for i in 0..self.pool_size {
            let id = format!("P{i:06}");
            let v = perturb(&centers[i % centers.len()], self.topic_spread, rng);
            corpus.insert_record(synthetic_record(
                id.clone(),
                pool_agency(i),
                CoordinateType::NativeEn,
            ))?;
            corpus.attach_vector(PointKey::new(id, CoordinateType::NativeEn), v)?;
        }
        for j in 0..self.pairs {
            let id = format!("K{j:06}");
            let center = &centers[rng.random_range(0..centers.len())];
            let project = perturb(center, self.topic_spread, rng);
            let (left, right) = if self.pair_noise > 0.0 {
                (
                    perturb(&project, self.pair_noise, rng),
                    perturb(&project, self.pair_noise, rng),
                )
            } else {
                (project.clone(), project)
            };
            for (ct, v) in [(self.left, left), (self.right, right)] {
                corpus.insert_record(synthetic_record(id.clone(), Agency::Kakenhi, ct))?;
                corpus.attach_vector(PointKey::new(id.clone(), ct), v)?;
            }
        }
        Ok(corpus)
    }
}

/// Corpus whose pair sides sit in two far-apart pool clusters.
///
/// Cluster A surrounds the first basis vector and cluster B the second, each
/// with `cluster_size` native-English points. Every left vector lies near A
/// and every right vector near B, so with `k <= cluster_size` the two
/// neighbor sets of a project are disjoint.
pub fn separated_pair_corpus(
    pairs: usize,
    cluster_size: usize,
    rng: &mut impl Rng,
) -> Result<Corpus> {
    let mut a = vec![0.0f32; EMBEDDING_DIM];
    a[0] = 1.0;
    let mut b = vec![0.0f32; EMBEDDING_DIM];
    b[1] = 1.0;
    let spread = 0.01;
    let mut corpus = Corpus::new();
    for i in 0..2 * cluster_size {
        let id = format!("P{i:06}");
        let center = if i < cluster_size { &a } else { &b };
        corpus.insert_record(synthetic_record(
            id.clone(),
            pool_agency(i),
            CoordinateType::NativeEn,
        ))?;
        corpus.attach_vector(
            PointKey::new(id, CoordinateType::NativeEn),
            perturb(center, spread, rng),
        )?;
    }
    for j in 0..pairs {
        let id = format!("K{j:06}");
        for (ct, center) in [(CoordinateType::NativeJa, &a), (CoordinateType::MtEn, &b)] {
            corpus.insert_record(synthetic_record(id.clone(), Agency::Kakenhi, ct))?;
            corpus.attach_vector(PointKey::new(id.clone(), ct), perturb(center, spread, rng))?;
        }
    }
    Ok(corpus)
}
