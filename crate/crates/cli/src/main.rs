//! `xldrift`: ingest, index, analyze and project paired embedding corpora.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 compute error.

mod commands;
mod config;
mod failure;
mod output;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig, SynthOverrides};
use failure::{usage, Stage, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "xldrift",
    version,
    about = "Cross-lingual drift in paired embedding corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load records (and vectors, if given) and summarize them per agency.
    Ingest,
    /// Build the k-NN graph over the pool and save it.
    Index,
    /// Distance and overlap reports plus distance histograms for one sample.
    Analyze,
    /// Two-dimensional PCA of both sides of the sampled projects.
    Project,
    /// Write the sampled project ids in draw order.
    Sample,
    /// Generate a seeded synthetic paired corpus.
    Synth(SynthOverrides),
}

fn run(cli: Cli) -> Result<()> {
    let (config, synth) = RunConfig::resolve(&cli.overrides)?;
    if let Some(threads) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(Stage::Config, e))?;
    }
    match &cli.command {
        Command::Ingest => commands::ingest(&config),
        Command::Index => commands::index(&config),
        Command::Analyze => commands::analyze(&config),
        Command::Project => commands::project(&config),
        Command::Sample => commands::sample(&config),
        Command::Synth(flags) => commands::synth(&config, &synth, flags),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(failure::exit_code(&err))
        }
    }
}
