//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs on synthetic data only.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xldrift_core::analysis::{
    default_pool, distance_histogram, distance_table, overlap_table, Pair, SampleSpec, DEFAULT_K,
};
use xldrift_core::knn::{accept_all, recall_at_k};
use xldrift_core::metrics::{cosine, euclidean, normalize};
use xldrift_core::projection::pca_2d;
use xldrift_core::synthetic::{
    recall_benchmark, separated_pair_corpus, unit_vector, PairedCorpusSpec,
};
use xldrift_core::{
    Agency, CoordinateType, Corpus, EmbeddedPoint, ExactIndex, GraphIndex, NeighborSearch,
    PointKey, SearchParams, EMBEDDING_DIM,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Runs `body` and fails it if it overruns `limit`.
fn criterion(name: &str, limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut outcome = body();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            outcome.passed = false;
            outcome.detail += &format!("; over the {limit:?} limit");
        }
    }
    println!(
        "{} {name}: {} [{elapsed:.2?}]",
        if outcome.passed { "PASS" } else { "FAIL" },
        outcome.detail
    );
    outcome.passed
}

fn point(id: String, ct: CoordinateType, agency: Agency, v: &[f32]) -> EmbeddedPoint {
    EmbeddedPoint::new(PointKey::new(id, ct), agency, v).unwrap()
}

fn metric_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_identity, mut worst_idempotence) = (0.0f64, 0.0f64);
    let mut asymmetric = 0;
    for _ in 0..10_000 {
        let u = unit_vector(&mut rng);
        let v = unit_vector(&mut rng);
        let d = euclidean(&u, &v).unwrap();
        let c = cosine(&u, &v).unwrap();
        worst_identity = worst_identity.max((d * d - (2.0 - 2.0 * c)).abs());
        if d.to_bits() != euclidean(&v, &u).unwrap().to_bits() {
            asymmetric += 1;
        }
        let raw: Vec<f32> = (0..EMBEDDING_DIM)
            .map(|_| rng.random_range(-3.0f32..3.0))
            .collect();
        let once = normalize(&raw).unwrap();
        let twice = normalize(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            worst_idempotence = worst_idempotence.max((a - b).abs() as f64);
        }
    }
    check(
        worst_identity < 1e-9 && worst_idempotence <= 1e-7 && asymmetric == 0,
        format!(
            "max |d^2-(2-2cos)| {worst_identity:.2e}, max normalize drift {worst_idempotence:.2e}, asymmetric pairs {asymmetric}"
        ),
    )
}

fn naive_knn(
    points: &[EmbeddedPoint],
    query: &[f32],
    k: usize,
    keep: &[Agency],
) -> Vec<(PointKey, u64)> {
    let mut all: Vec<(PointKey, f64)> = points
        .iter()
        .filter(|p| keep.contains(&p.agency))
        .map(|p| (p.key.clone(), euclidean(query, &p.vector).unwrap()))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    all.into_iter()
        .take(k)
        .map(|(key, d)| (key, d.to_bits()))
        .collect()
}

/// Points with many exact distance ties: lattice coordinates on a few axes
/// plus verbatim copies under new keys.
fn tie_heavy(n: usize, rng: &mut impl Rng) -> Vec<EmbeddedPoint> {
    let agencies = [Agency::Nih, Agency::Nsf, Agency::Ukri];
    let mut vectors: Vec<Vec<f32>> = Vec::with_capacity(n);
    for _ in 0..n {
        let v = if !vectors.is_empty() && rng.random_bool(0.1) {
            vectors[rng.random_range(0..vectors.len())].clone()
        } else {
            let mut v = vec![0.0f32; EMBEDDING_DIM];
            while v.iter().all(|&x| x == 0.0) {
                for x in v.iter_mut().take(5) {
                    *x = rng.random_range(-2i32..=2) as f32;
                }
            }
            v
        };
        vectors.push(v);
    }
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let id = format!("{:08x}", (i as u64).wrapping_mul(0x9e37_79b9) as u32);
            point(id, CoordinateType::NativeEn, agencies[i % 3].clone(), v)
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut queries, mut mismatches) = (0, 0);
    for corpus in 0..50 {
        let n = rng.random_range(20..=2000);
        let points = if corpus % 2 == 0 {
            tie_heavy(n, &mut rng)
        } else {
            (0..n)
                .map(|i| {
                    let agency = [Agency::Nih, Agency::Nsf, Agency::Ukri][i % 3].clone();
                    point(
                        format!("r{i:05}"),
                        CoordinateType::NativeEn,
                        agency,
                        &unit_vector(&mut rng),
                    )
                })
                .collect()
        };
        let index = ExactIndex::build(points.clone()).unwrap();
        let keep: Vec<Agency> = if corpus % 3 == 0 {
            vec![Agency::Nsf, Agency::Ukri]
        } else {
            vec![Agency::Nih, Agency::Nsf, Agency::Ukri]
        };
        let filter = |_: &PointKey, a: &Agency| keep.contains(a);
        let k = [1, 10, 25][corpus % 3];
        let batch: Vec<Vec<f32>> = (0..20)
            .map(|q| {
                if q % 2 == 0 {
                    points[rng.random_range(0..n)].vector.clone()
                } else {
                    normalize(&tie_heavy(1, &mut rng)[0].vector).unwrap()
                }
            })
            .collect();
        let batched = index.query_batch(&batch, k, &filter);
        for (query, from_batch) in batch.iter().zip(&batched) {
            let want = naive_knn(&points, query, k, &keep);
            let got: Vec<(PointKey, u64)> = index
                .query(query, k, &filter)
                .iter()
                .map(|nb| (nb.key.clone(), nb.distance.to_bits()))
                .collect();
            let got_batch: Vec<(PointKey, u64)> = from_batch
                .iter()
                .map(|nb| (nb.key.clone(), nb.distance.to_bits()))
                .collect();
            queries += 1;
            if got != want || got_batch != want {
                mismatches += 1;
            }
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} of {queries} queries differ from the all-pairs scan"),
    )
}

fn ann_recall() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dist = recall_benchmark(&mut rng);
    let points = dist.points(10_000, "p", &mut rng);
    let queries: Vec<Vec<f32>> = (0..1000)
        .map(|_| normalize(&dist.sample(&mut rng)).unwrap())
        .collect();
    let exact = ExactIndex::build(points.clone())
        .unwrap()
        .query_batch(&queries, 10, &accept_all);

    let start = Instant::now();
    let graph = GraphIndex::build(points, xldrift_core::knn::DEFAULT_DEGREE, 3).unwrap();
    let searcher = graph.searcher(SearchParams::default());
    let approx = searcher.search_batch(&queries, 10, &accept_all);
    let timed = start.elapsed();

    let recall = approx
        .iter()
        .zip(&exact)
        .map(|(a, e)| recall_at_k(a, e, 10).unwrap())
        .sum::<f64>()
        / queries.len() as f64;
    check(
        recall >= 0.95 && timed < Duration::from_secs(60),
        format!("mean recall@10 {recall:.4} over 1000 queries, graph build + queries {timed:.2?}"),
    )
}

fn table_ordering() -> Outcome {
    let spec = PairedCorpusSpec::default();
    let pool = default_pool();
    let mut held = 0;
    let (mut within, mut left, mut right) = (0.0, 0.0, 0.0);
    let runs = 100;
    for seed in 0..runs {
        let corpus = spec.generate(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let index = ExactIndex::build(corpus.pool_points(&pool).unwrap()).unwrap();
        let sample = SampleSpec {
            seed,
            n: spec.pairs,
            pair: Pair::default(),
            agency: Agency::Kakenhi,
        };
        let report = distance_table(&corpus, &sample, &pool, DEFAULT_K, &index).unwrap();
        let (w, l, r) = (
            report.within_pair().mean,
            report.left_baseline().mean,
            report.right_baseline().mean,
        );
        within += w / runs as f64;
        left += l / runs as f64;
        right += r / runs as f64;
        if w < l && w < r {
            held += 1;
        }
    }
    check(
        held == runs,
        format!(
            "ordering held in {held}/{runs} runs (exact oracle); mean rows {within:.3} / {left:.3} / {right:.3}"
        ),
    )
}

fn overlap_extremes() -> Outcome {
    let pool = default_pool();
    let spec_for = |corpus: &Corpus, seed| SampleSpec {
        seed,
        n: corpus
            .filter_complete_pairs(CoordinateType::NativeJa, CoordinateType::MtEn)
            .unwrap()
            .len(),
        pair: Pair::default(),
        agency: Agency::Kakenhi,
    };
    let mut failures = Vec::new();

    let identical = PairedCorpusSpec {
        pairs: 200,
        pool_size: 1000,
        pair_noise: 0.0,
        ..Default::default()
    }
    .generate(&mut ChaCha8Rng::seed_from_u64(4))
    .unwrap();
    let exact = ExactIndex::build(identical.pool_points(&pool).unwrap()).unwrap();
    let graph = GraphIndex::build(identical.pool_points(&pool).unwrap(), 16, 4).unwrap();
    let searcher = graph.searcher(SearchParams::default());
    let indexes: [(&str, &dyn NeighborSearch); 2] = [("exact", &exact), ("graph", &searcher)];
    for (name, index) in indexes {
        let avg = overlap_table(
            &identical,
            &spec_for(&identical, 4),
            &pool,
            DEFAULT_K,
            index,
        )
        .unwrap()
        .average;
        if avg != DEFAULT_K as f64 {
            failures.push(format!("identical pairs via {name}: {avg}"));
        }
    }

    let separated = separated_pair_corpus(100, 50, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let exact = ExactIndex::build(separated.pool_points(&pool).unwrap()).unwrap();
    let avg = overlap_table(
        &separated,
        &spec_for(&separated, 5),
        &pool,
        DEFAULT_K,
        &exact,
    )
    .unwrap()
    .average;
    if avg != 0.0 {
        failures.push(format!("separated clusters: {avg}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for round in 0..20 {
        let spec = PairedCorpusSpec {
            pairs: rng.random_range(10..200),
            pool_size: rng.random_range(60..800),
            topics: rng.random_range(1..40),
            topic_spread: rng.random_range(0.0..0.1),
            pair_noise: rng.random_range(0.0..0.1),
            ..Default::default()
        };
        let corpus = spec.generate(&mut rng).unwrap();
        let k = rng.random_range(1..=20);
        let exact = ExactIndex::build(corpus.pool_points(&pool).unwrap()).unwrap();
        let report = overlap_table(&corpus, &spec_for(&corpus, round), &pool, k, &exact).unwrap();
        if !(0.0..=k as f64).contains(&report.average) || report.per_id.iter().any(|&(_, o)| o > k)
        {
            failures.push(format!(
                "random corpus {round}: average {} with k {k}",
                report.average
            ));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "identical pairs average k, separated clusters average 0, 20 random corpora within [0, k]"
                .to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn run_binary(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_xldrift"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let inputs = [
        "--records",
        "data/records.jsonl",
        "--vectors",
        "data/vectors.xldv",
    ];
    let run = || -> Result<Vec<String>, String> {
        run_binary(d, &["synth", "--seed", "11", "--out", "data"])?;
        for (out, threads) in [("t1", "1"), ("t8", "8"), ("t1b", "1"), ("t8b", "8")] {
            let mut args = vec!["analyze", "--threads", threads, "--out", out];
            args.extend(inputs);
            run_binary(d, &args)?;
        }
        let mut names: Vec<String> = fs::read_dir(d.join("t1"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        let mut differing = Vec::new();
        for name in &names {
            let reference = fs::read(d.join("t1").join(name)).unwrap();
            for other in ["t8", "t1b", "t8b"] {
                if fs::read(d.join(other).join(name)).ok().as_ref() != Some(&reference) {
                    differing.push(format!("{other}/{name}"));
                }
            }
        }
        if names.len() != 8 {
            differing.push(format!("expected 8 outputs, found {}", names.len()));
        }
        Ok(differing)
    };
    match run() {
        Ok(differing) if differing.is_empty() => check(
            true,
            "two runs each at 1 and 8 threads produced byte-identical reports, histograms and manifests",
        ),
        Ok(differing) => check(false, format!("differing outputs: {}", differing.join(", "))),
        Err(e) => check(false, e),
    }
}

fn oracle_fractions(points: &[EmbeddedPoint]) -> [f64; 2] {
    let n = points.len();
    let x = DMatrix::from_fn(n, EMBEDDING_DIM, |r, c| points[r].vector[c] as f64);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, EMBEDDING_DIM, |r, c| x[(r, c)] - mean[c]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let mut values: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    [values[0] / total, values[1] / total]
}

fn pca_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for cloud in 0..20 {
        let n = [40, 150, 400, 900][cloud % 4];
        let scales: Vec<f32> = (0..EMBEDDING_DIM)
            .map(|_| rng.random_range(0.05f32..1.0).powi(4))
            .collect();
        let points: Vec<EmbeddedPoint> = (0..n)
            .map(|i| {
                let v: Vec<f32> = scales
                    .iter()
                    .map(|s| s * rng.random_range(-1.0f32..1.0))
                    .collect();
                point(
                    format!("c{i:04}"),
                    CoordinateType::NativeJa,
                    Agency::Kakenhi,
                    &v,
                )
            })
            .collect();
        let got = pca_2d(&points).unwrap().explained_variance;
        for (g, w) in got.iter().zip(oracle_fractions(&points)) {
            worst = worst.max((g - w).abs());
        }
    }

    // Unit vectors on a random great circle span a plane through the origin,
    // so the projection must preserve every pairwise distance.
    let a = unit_vector(&mut rng);
    let b0 = unit_vector(&mut rng);
    let ab: f32 = a.iter().zip(&b0).map(|(x, y)| x * y).sum();
    let b = normalize(
        &b0.iter()
            .zip(&a)
            .map(|(y, x)| y - ab * x)
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let planar: Vec<EmbeddedPoint> = (0..200)
        .map(|i| {
            let t = rng.random_range(0.0f32..std::f32::consts::TAU);
            let v: Vec<f32> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| t.cos() * x + t.sin() * y)
                .collect();
            point(
                format!("g{i:04}"),
                CoordinateType::MtEn,
                Agency::Kakenhi,
                &v,
            )
        })
        .collect();
    let proj = pca_2d(&planar).unwrap();
    let mut worst_planar = 0.0f64;
    for i in 0..planar.len() {
        for j in i + 1..planar.len() {
            let (p, q) = (&proj.points[i], &proj.points[j]);
            let flat = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
            let full = euclidean(&planar[i].vector, &planar[j].vector).unwrap();
            worst_planar = worst_planar.max((flat - full).abs());
        }
    }
    check(
        worst < 1e-6 && worst_planar < 1e-6,
        format!(
            "max variance-fraction error {worst:.2e} over 20 clouds, max planar distance error {worst_planar:.2e}"
        ),
    )
}

fn histogram_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut lost = 0;
    for _ in 0..2000 {
        let bins = rng.random_range(1..=100);
        let len = rng.random_range(0..500);
        let values: Vec<f64> = (0..len)
            .map(|_| match rng.random_range(0..6) {
                0 => 0.0,
                1 => 2.0,
                2 => 2.0 + 1e-10,
                // exact bin edges
                3 => 2.0 * rng.random_range(0..=bins) as f64 / bins as f64,
                _ => rng.random_range(0.0..=2.0),
            })
            .collect();
        let h = distance_histogram(&values, bins).unwrap();
        if h.total() != values.len() || h.counts.len() != bins {
            lost += 1;
        }
    }

    let mut distances = Vec::new();
    for _ in 0..5000 {
        let u = unit_vector(&mut rng);
        let v = if rng.random_bool(0.2) {
            u.iter().map(|x| -x).collect()
        } else {
            unit_vector(&mut rng)
        };
        distances.push(euclidean(&u, &v).unwrap());
    }
    let max = distances.iter().cloned().fold(0.0, f64::max);
    let unit_ok =
        max <= 2.0 + 1e-9 && distance_histogram(&distances, 40).unwrap().total() == distances.len();
    check(
        lost == 0 && unit_ok,
        format!("{lost} of 2000 fuzzed histograms lost values; max unit-vector distance {max:.12}"),
    )
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        criterion("metric identity", secs(5), metric_identity),
        criterion("oracle equivalence", secs(30), oracle_equivalence),
        criterion("ANN recall", None, ann_recall),
        criterion("distance-table ordering", secs(60), table_ordering),
        criterion("overlap bounds and extremes", None, overlap_extremes),
        criterion("determinism", None, determinism),
        criterion("PCA oracle", None, pca_oracle),
        criterion("histogram conservation", None, histogram_conservation),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
