//! One function per subcommand. Each stages its files in an [`Outputs`] and
//! commits them only after every step has succeeded.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use xldrift_core::analysis::{
    distance_histogram, format_pool, measure_sample, sample_ids, DistanceReport, OverlapReport,
    SampleSpec,
};
use xldrift_core::knn::index_file;
use xldrift_core::projection::{export_plot_data, pca_2d};
use xldrift_core::{Corpus, EmbeddedPoint, ExactIndex, GraphIndex, NeighborSearch, PointKey};

use crate::config::{FileSynth, RunConfig, SynthOverrides};
use crate::failure::{Stage, StageExt};
use crate::output::{FileDigest, Outputs};

fn load_corpus(config: &RunConfig) -> Result<(Corpus, Vec<FileDigest>)> {
    let records = config.records()?;
    let vectors = config.vectors()?;
    let corpus = Corpus::load_records(records)
        .with_context(|| format!("reading {}", records.display()))
        .and_then(|c| {
            c.load_vectors(vectors)
                .with_context(|| format!("reading {}", vectors.display()))
        })
        .stage(Stage::Load)?;
    let inputs = vec![
        FileDigest::of("records", records).stage(Stage::Load)?,
        FileDigest::of("vectors", vectors).stage(Stage::Load)?,
    ];
    Ok((corpus, inputs))
}

fn sample_spec(config: &RunConfig) -> SampleSpec {
    SampleSpec {
        seed: config.seed,
        n: config.n,
        pair: config.pair,
        agency: config.agency.clone(),
    }
}

fn pool_points(corpus: &Corpus, config: &RunConfig) -> Result<Vec<EmbeddedPoint>> {
    corpus.pool_points(&config.pool).stage(Stage::Index)
}

fn to_json_line(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json values serialize") + "\n"
}

pub fn ingest(config: &RunConfig) -> Result<()> {
    let records = config.records()?;
    let mut corpus = Corpus::load_records(records)
        .with_context(|| format!("reading {}", records.display()))
        .stage(Stage::Load)?;
    let mut inputs = vec![FileDigest::of("records", records).stage(Stage::Load)?];
    if let Some(vectors) = config.vectors.as_deref() {
        corpus = corpus
            .load_vectors(vectors)
            .with_context(|| format!("reading {}", vectors.display()))
            .stage(Stage::Load)?;
        inputs.push(FileDigest::of("vectors", vectors).stage(Stage::Load)?);
    }
    let counts = corpus.agency_counts();

    println!("{:<10} {:>10} {:>10}", "agency", "records", "projects");
    for (agency, c) in &counts {
        println!(
            "{:<10} {:>10} {:>10}",
            agency.as_str(),
            c.records,
            c.projects
        );
    }
    println!("vectors {}", corpus.vector_count());

    let agencies: BTreeMap<&str, _> = counts.iter().map(|(a, c)| (a.as_str(), c)).collect();
    let summary = json!({
        "records": corpus.len(),
        "vectors": corpus.vector_count(),
        "agencies": agencies,
    });
    let mut out = Outputs::new(&config.out).stage(Stage::Write)?;
    out.write("ingest_summary.json", to_json_line(&summary))
        .stage(Stage::Write)?;
    out.commit("ingest", config, inputs).stage(Stage::Write)?;
    Ok(())
}

pub fn index(config: &RunConfig) -> Result<()> {
    let (corpus, inputs) = load_corpus(config)?;
    let points = pool_points(&corpus, config)?;
    let count = points.len();
    let started = Instant::now();
    let graph = if config.exact {
        ExactIndex::build(points).stage(Stage::Index)?;
        None
    } else {
        Some(GraphIndex::build(points, config.degree, config.seed).stage(Stage::Index)?)
    };
    let seconds = started.elapsed().as_secs_f64();

    let mut out = Outputs::new(&config.out).stage(Stage::Write)?;
    let meta = match &graph {
        None => json!({
            "mode": "exact",
            "points": count,
            "pool": format_pool(&config.pool),
        }),
        Some(graph) => {
            let path = out.stage("index.xlgi");
            index_file::write(graph, &path).stage(Stage::Write)?;
            json!({
            "mode": "graph",
            "points": count,
            "degree": graph.degree(),
            "build_seed": graph.build_seed(),
            "pool": format_pool(&config.pool),
            })
        }
    };
    out.write("index.meta.json", to_json_line(&meta))
        .stage(Stage::Write)?;
    out.commit("index", config, inputs).stage(Stage::Write)?;

    if config.exact {
        println!("mode exact points {count} seconds {seconds:.3}");
    } else {
        println!(
            "points {count} degree {} seconds {seconds:.3}",
            config.degree
        );
    }
    Ok(())
}

/// Exact oracle, a graph loaded from `--index`, or a graph built in memory.
enum Searcher {
    Exact(ExactIndex),
    Graph(GraphIndex),
}

fn searcher(config: &RunConfig, corpus: &Corpus, inputs: &mut Vec<FileDigest>) -> Result<Searcher> {
    let points = pool_points(corpus, config)?;
    if config.exact {
        return Ok(Searcher::Exact(
            ExactIndex::build(points).stage(Stage::Index)?,
        ));
    }
    let graph = match config.index.as_deref() {
        Some(path) => {
            inputs.push(FileDigest::of("index", path).stage(Stage::Load)?);
            index_file::read(path, points)
                .with_context(|| format!("reading {}", path.display()))
                .stage(Stage::Load)?
        }
        None => GraphIndex::build(points, config.degree, config.seed).stage(Stage::Index)?,
    };
    Ok(Searcher::Graph(graph))
}

pub fn analyze(config: &RunConfig) -> Result<()> {
    let (corpus, mut inputs) = load_corpus(config)?;
    let built = searcher(config, &corpus, &mut inputs)?;
    let graph_searcher;
    let index: &dyn NeighborSearch = match &built {
        Searcher::Exact(e) => e,
        Searcher::Graph(g) => {
            graph_searcher = g.searcher(config.search);
            &graph_searcher
        }
    };
    let spec = sample_spec(config);
    let samples =
        measure_sample(&corpus, &spec, &config.pool, config.k, index).stage(Stage::Analyze)?;
    let distances = DistanceReport::from_measurements(&spec, &config.pool, config.k, samples)
        .stage(Stage::Analyze)?;
    let overlap =
        OverlapReport::from_measurements(&spec, &config.pool, config.k, &distances.samples);

    let column = |f: fn(&xldrift_core::analysis::IdMeasurement) -> f64| -> Vec<f64> {
        distances.samples.iter().map(f).collect()
    };
    let histograms = [
        ("pair", column(|m| m.pair_distance), 0),
        ("left", column(|m| m.left_baseline), 1),
        ("right", column(|m| m.right_baseline), 2),
    ]
    .into_iter()
    .map(|(name, values, row)| {
        distance_histogram(&values, config.bins)
            .map(|h| (name, h.with_label(distances.rows[row].label.clone())))
    })
    .collect::<xldrift_core::Result<Vec<_>>>()
    .stage(Stage::Analyze)?;

    let mut out = Outputs::new(&config.out).stage(Stage::Write)?;
    let write =
        |out: &mut Outputs, name: &str, text: String| out.write(name, text).stage(Stage::Write);
    write(&mut out, "distance_report.jsonl", distances.to_jsonl())?;
    write(&mut out, "distance_report.txt", distances.to_table())?;
    write(&mut out, "overlap_report.jsonl", overlap.to_jsonl())?;
    write(&mut out, "overlap_report.txt", overlap.to_table())?;
    for (name, h) in &histograms {
        write(&mut out, &format!("histogram_{name}.tsv"), h.to_tsv())?;
    }
    out.commit("analyze", config, inputs).stage(Stage::Write)?;

    print!("{}", distances.to_table());
    print!("{}", overlap.to_table());
    Ok(())
}

pub fn project(config: &RunConfig) -> Result<()> {
    let (corpus, inputs) = load_corpus(config)?;
    let ids = sample_ids(&corpus, &sample_spec(config)).stage(Stage::Sample)?;
    let mut points = Vec::with_capacity(2 * ids.len());
    for id in &ids {
        for ct in config.series() {
            points.push(
                corpus
                    .embedded_point(&PointKey::new(id.clone(), ct))
                    .stage(Stage::Project)?,
            );
        }
    }
    let projection = pca_2d(&points).stage(Stage::Project)?;
    let mut out = Outputs::new(&config.out).stage(Stage::Write)?;
    let path = out.stage("plot_data.tsv");
    export_plot_data(&projection, &path).stage(Stage::Write)?;
    out.commit("project", config, inputs).stage(Stage::Write)?;
    println!(
        "points {} explained variance {:.4} {:.4}",
        projection.points.len(),
        projection.explained_variance[0],
        projection.explained_variance[1]
    );
    Ok(())
}

pub fn sample(config: &RunConfig) -> Result<()> {
    let (corpus, inputs) = load_corpus(config)?;
    let ids = sample_ids(&corpus, &sample_spec(config)).stage(Stage::Sample)?;
    let text: String = ids.iter().map(|id| format!("{id}\n")).collect();
    let mut out = Outputs::new(&config.out).stage(Stage::Write)?;
    out.write("sample.txt", text).stage(Stage::Write)?;
    out.commit("sample", config, inputs).stage(Stage::Write)?;
    println!("sampled {} ids", ids.len());
    Ok(())
}

pub fn synth(config: &RunConfig, file: &FileSynth, flags: &SynthOverrides) -> Result<()> {
    let mut spec = file.resolve(flags);
    spec.left = config.pair.left;
    spec.right = config.pair.right;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let corpus = spec.generate(&mut rng).stage(Stage::Synth)?;
    let mut out = Outputs::new(&config.out).stage(Stage::Write)?;
    write_corpus(&corpus, &mut out).stage(Stage::Write)?;
    out.commit("synth", config, Vec::new())
        .stage(Stage::Write)?;
    println!(
        "pairs {} pool points {} records {}",
        spec.pairs,
        spec.pool_size,
        corpus.len()
    );
    Ok(())
}

fn write_corpus(corpus: &Corpus, out: &mut Outputs) -> xldrift_core::Result<()> {
    let records = out.stage("records.jsonl");
    corpus.write_records(&records)?;
    let vectors = out.stage("vectors.xldv");
    corpus.write_vectors(&vectors)?;
    Ok(())
}
