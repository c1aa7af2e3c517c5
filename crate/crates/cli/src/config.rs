//! Run configuration: built-in defaults, then a TOML file, then `XLD_*`
//! environment variables and command-line flags (flags win over the
//! environment, both win over the file).

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use xldrift_core::analysis::{
    default_pool, format_pool, parse_pool, Pair, Pool, DEFAULT_K, DEFAULT_SAMPLE_SIZE,
};
use xldrift_core::knn::{SearchParams, DEFAULT_DEGREE};
use xldrift_core::synthetic::PairedCorpusSpec;
use xldrift_core::{Agency, CoordinateType};

use crate::failure::{usage, Stage};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BINS: usize = 40;

fn pair_arg(s: &str) -> Result<Pair, String> {
    s.parse().map_err(|e: xldrift_core::Error| e.to_string())
}

fn pool_arg(s: &str) -> Result<Pool, String> {
    parse_pool(s).map_err(|e| e.to_string())
}

/// Options shared by every subcommand. Unset values fall back to the
/// config file and then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long, global = true, env = "XLD_CONFIG")]
    pub config: Option<PathBuf>,
    /// Record file (line-delimited JSON).
    #[arg(long, global = true, env = "XLD_RECORDS")]
    pub records: Option<PathBuf>,
    /// Vector file (XLDV).
    #[arg(long, global = true, env = "XLD_VECTORS")]
    pub vectors: Option<PathBuf>,
    /// Graph index file written by `index`.
    #[arg(long, global = true, env = "XLD_INDEX")]
    pub index: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "XLD_OUT")]
    pub out: Option<PathBuf>,
    /// Seed for sampling, graph construction and synthetic data.
    #[arg(long, global = true, env = "XLD_SEED")]
    pub seed: Option<u64>,
    /// Neighbors per representation.
    #[arg(long, global = true, env = "XLD_K")]
    pub k: Option<usize>,
    /// Projects sampled.
    #[arg(long, global = true, env = "XLD_N")]
    pub n: Option<usize>,
    /// Comma-separated agencies forming the native-English pool.
    #[arg(long, global = true, env = "XLD_POOL", value_parser = pool_arg)]
    pub pool: Option<Pool>,
    /// Coordinate-type pair, e.g. `NativeJa,MtEn`.
    #[arg(long, global = true, env = "XLD_PAIR", value_parser = pair_arg)]
    pub pair: Option<Pair>,
    /// Agency owning the paired records.
    #[arg(long, global = true, env = "XLD_AGENCY")]
    pub agency: Option<Agency>,
    /// Use the brute-force oracle instead of the graph index.
    #[arg(long, global = true, env = "XLD_EXACT")]
    pub exact: bool,
    #[arg(long, global = true, env = "XLD_DEGREE")]
    pub degree: Option<usize>,
    #[arg(long, global = true, env = "XLD_POOL_SIZE")]
    pub pool_size: Option<usize>,
    #[arg(long, global = true, env = "XLD_ENTRY_COUNT")]
    pub entry_count: Option<usize>,
    #[arg(long, global = true, env = "XLD_MAX_EVALUATIONS")]
    pub max_evaluations: Option<usize>,
    /// Histogram bins over [0, 2].
    #[arg(long, global = true, env = "XLD_BINS")]
    pub bins: Option<usize>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "XLD_THREADS")]
    pub threads: Option<usize>,
}

/// Keys accepted in the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    records: Option<PathBuf>,
    vectors: Option<PathBuf>,
    index: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    k: Option<usize>,
    n: Option<usize>,
    pool: Option<String>,
    pair: Option<String>,
    agency: Option<String>,
    exact: Option<bool>,
    degree: Option<usize>,
    pool_size: Option<usize>,
    entry_count: Option<usize>,
    max_evaluations: Option<usize>,
    bins: Option<usize>,
    threads: Option<usize>,
    synth: Option<SynthFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthFile {
    pairs: Option<usize>,
    pool_points: Option<usize>,
    topics: Option<usize>,
    topic_spread: Option<f32>,
    pair_noise: Option<f32>,
}

/// Fully resolved settings. Serialized into run manifests, so it holds only
/// what can change results: the output directory and thread count are kept
/// outside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub records: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    #[serde(serialize_with = "ser_pool")]
    pub pool: Pool,
    #[serde(serialize_with = "ser_display")]
    pub pair: Pair,
    pub agency: Agency,
    pub exact: bool,
    pub degree: usize,
    pub search: SearchParams,
    pub bins: usize,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub threads: Option<usize>,
}

fn ser_pool<S: serde::Serializer>(pool: &Pool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_pool(pool))
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Synthetic-corpus knobs of the `synth` subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct SynthOverrides {
    /// Paired projects to generate.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Native-English pool points to generate.
    #[arg(long)]
    pub pool_points: Option<usize>,
    #[arg(long)]
    pub topics: Option<usize>,
    #[arg(long)]
    pub topic_spread: Option<f32>,
    /// Per-side perturbation; 0 stores identical vectors on both sides.
    #[arg(long)]
    pub pair_noise: Option<f32>,
}

impl RunConfig {
    pub fn resolve(flags: &Overrides) -> Result<(Self, FileSynth)> {
        let file = match &flags.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let pool = match (&flags.pool, &file.pool) {
            (Some(p), _) => p.clone(),
            (None, Some(s)) => parse_pool(s).map_err(|e| usage(Stage::Config, e))?,
            (None, None) => default_pool(),
        };
        let pair = match (flags.pair, &file.pair) {
            (Some(p), _) => p,
            (None, Some(s)) => s.parse().map_err(|e| usage(Stage::Config, e))?,
            (None, None) => Pair::default(),
        };
        let agency = match (&flags.agency, &file.agency) {
            (Some(a), _) => a.clone(),
            (None, Some(s)) => s.parse().map_err(|e| usage(Stage::Config, e))?,
            (None, None) => Agency::Kakenhi,
        };
        let defaults = SearchParams::default();
        let search = SearchParams {
            pool_size: flags
                .pool_size
                .or(file.pool_size)
                .unwrap_or(defaults.pool_size),
            entry_count: flags
                .entry_count
                .or(file.entry_count)
                .unwrap_or(defaults.entry_count),
            max_evaluations: flags
                .max_evaluations
                .or(file.max_evaluations)
                .unwrap_or(defaults.max_evaluations),
        };
        let config = Self {
            records: flags.records.clone().or(file.records),
            vectors: flags.vectors.clone().or(file.vectors),
            index: flags.index.clone().or(file.index),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            k: flags.k.or(file.k).unwrap_or(DEFAULT_K),
            n: flags.n.or(file.n).unwrap_or(DEFAULT_SAMPLE_SIZE),
            pool,
            pair,
            agency,
            exact: flags.exact || file.exact.unwrap_or(false),
            degree: flags.degree.or(file.degree).unwrap_or(DEFAULT_DEGREE),
            search,
            bins: flags.bins.or(file.bins).unwrap_or(DEFAULT_BINS),
            out: flags
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(".")),
            threads: flags.threads.or(file.threads),
        };
        config.validate()?;
        Ok((config, FileSynth(file.synth.unwrap_or_default())))
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(usage(
                Stage::Config,
                xldrift_core::Error::InvalidParameter(msg),
            ))
        };
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.bins == 0 {
            return bad("bins must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if !self.exact {
            self.search
                .validate(self.k)
                .map_err(|e| usage(Stage::Config, e))?;
        }
        Ok(())
    }

    pub fn records(&self) -> Result<&Path> {
        self.records
            .as_deref()
            .ok_or_else(|| usage(Stage::Config, missing("records")))
    }

    pub fn vectors(&self) -> Result<&Path> {
        self.vectors
            .as_deref()
            .ok_or_else(|| usage(Stage::Config, missing("vectors")))
    }

    /// Coordinate types plotted by `project`.
    pub fn series(&self) -> [CoordinateType; 2] {
        [self.pair.left, self.pair.right]
    }
}

fn missing(what: &str) -> xldrift_core::Error {
    xldrift_core::Error::InvalidParameter(format!(
        "no {what} file given (use --{what}, XLD_{}, or the config file)",
        what.to_uppercase()
    ))
}

/// The `[synth]` table of the config file.
#[derive(Debug, Default)]
pub struct FileSynth(SynthFile);

impl FileSynth {
    pub fn resolve(&self, flags: &SynthOverrides) -> PairedCorpusSpec {
        let d = PairedCorpusSpec::default();
        let f = &self.0;
        PairedCorpusSpec {
            pairs: flags.pairs.or(f.pairs).unwrap_or(d.pairs),
            pool_size: flags.pool_points.or(f.pool_points).unwrap_or(d.pool_size),
            topics: flags.topics.or(f.topics).unwrap_or(d.topics),
            topic_spread: flags
                .topic_spread
                .or(f.topic_spread)
                .unwrap_or(d.topic_spread),
            pair_noise: flags.pair_noise.or(f.pair_noise).unwrap_or(d.pair_noise),
            ..d
        }
    }
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(|e| usage(Stage::Config, e))?;
    toml::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(|e| usage(Stage::Config, e))
}
