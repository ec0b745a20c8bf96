// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use pirscope::commands::{self, CorpusKind};
use pirscope::RunConfig;
use pirscope_core::rag::ARTICLES_COLLECTION;

#[derive(Parser)]
#[command(name = "pirscope", version, about = "Embed news corpora, query them with retrieval-augmented generation, and score countries on intergroup reciprocity")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the sampling seed used by `classify`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the directory holding collection files.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a JSONL corpus into a collection.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = ARTICLES_COLLECTION)]
        collection: String,
        /// Record type; defaults to `knowledge` for the knowledge collection.
        #[arg(long, value_enum)]
        kind: Option<CorpusKind>,
    },
    /// Answer a question from the knowledge and article collections.
    Ask {
        query: String,
        /// Print the full response as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Score countries and write report.tsv and scores.json.
    Classify {
        /// Articles sampled per country.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Corpus to re-embed when classify.reembed_bodies is set.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Print per-country corpus statistics as JSON.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Re-render report.tsv from scores.json.
    Report {
        #[arg(long, default_value = "scores.json")]
        scores: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.data_dir {
        cfg.data_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.classify.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest { corpus, collection, kind } => {
            let s = commands::ingest(&cfg, &corpus, &collection, kind)?;
            println!("ingested {} records into {} ({} total) at {}", s.ingested, s.collection, s.collection_size, s.path.display());
            for (country, n) in &s.per_country {
                println!("  {country}\t{n}");
            }
        }
        Command::Ask { query, json } => {
            let r = commands::ask(&cfg, &query)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                println!("[{}]\n{}", r.generator, r.generated_text);
            }
        }
        Command::Classify { n, out, corpus } => {
            if let Some(n) = n {
                cfg.classify.n_per_country = n;
            }
            cfg.validate()?;
            let o = commands::classify(&cfg, &out, corpus.as_deref())?;
            print!("{}", o.report.text);
            for s in o.scoring.scores.iter().filter(|s| s.shortfall) {
                log::warn!("{} has only {} articles, fewer than the sample size {}", s.country, s.n_classified, cfg.classify.n_per_country);
            }
            if let Err(e) = o.scoring.normalization {
                if o.scoring.scores.len() < 2 {
                    log::warn!("fewer than two countries; wrote raw fractions only");
                } else {
                    bail!("{e}; raw fractions written to {}", o.report_path.display());
                }
            }
        }
        Command::Stats { corpus } => {
            let stats = commands::stats(&corpus).with_context(|| format!("reading {}", corpus.display()))?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Report { scores, out } => {
            let (report, _) = commands::report(&scores, &out)?;
            print!("{}", report.text);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
