// SPDX-License-Identifier: Apache-2.0

//! The command implementations behind the CLI. Each returns data; printing and
//! exit codes are left to the binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use pirscope_core::classify::{country_fractions, report as render_report, score_countries, Report, Scoring};
use pirscope_core::classify::{CountryScore, ScoreRecord};
use pirscope_core::corpus::{Article, Enricher};
use pirscope_core::rag::{run_pipeline, Generator, Stores, ARTICLES_COLLECTION, KNOWLEDGE_COLLECTION};
use pirscope_core::{
    AnchorPair, Collection, CorpusStats, CountryCode, DocumentRecord, Embedder, EmbeddingVector, RagResponse,
};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::jsonl::{self, KnowledgeDoc};
use crate::storage::DataDir;

pub const REPORT_FILE: &str = "report.tsv";
pub const SCORES_FILE: &str = "scores.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CorpusKind {
    Article,
    Knowledge,
}

impl CorpusKind {
    /// `knowledge` holds knowledge documents; every other collection holds articles.
    pub fn for_collection(name: &str) -> Self {
        if name == KNOWLEDGE_COLLECTION {
            CorpusKind::Knowledge
        } else {
            CorpusKind::Article
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub collection: String,
    pub path: PathBuf,
    pub ingested: usize,
    pub collection_size: usize,
    /// Ingested articles per country; empty for knowledge documents.
    pub per_country: BTreeMap<CountryCode, usize>,
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).map_err(Error::io(path))?))
}

fn article_metadata(a: &Article) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("country".to_string(), a.country.to_string());
    m.insert("peace_level".to_string(), a.peace_level.to_string());
    for (key, value) in [("title", &a.title), ("source", &a.source), ("date", &a.date)] {
        if let Some(v) = value {
            m.insert(key.to_string(), v.clone());
        }
    }
    m
}

/// Embeds `texts` and pairs them into records with the given ids, metadata and excerpts.
fn embed_records<E: Embedder + ?Sized>(
    embedder: &E,
    concurrency: usize,
    items: Vec<(String, String, BTreeMap<String, String>, String)>,
) -> Result<Vec<DocumentRecord>> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let texts: Vec<&str> = items.iter().map(|(_, text, _, _)| text.as_str()).collect();
    let vectors = embedder.embed_batch(&texts, concurrency)?;
    Ok(items
        .into_iter()
        .zip(vectors)
        .map(|((id, _, metadata, source), v)| DocumentRecord::new(id, v, metadata, &source))
        .collect())
}

fn article_items(articles: &[Article], enricher: Option<&Enricher>) -> Vec<(String, String, BTreeMap<String, String>, String)> {
    articles
        .iter()
        .map(|a| {
            let text = enricher.map_or_else(|| a.body.clone(), |e| e.enrich(a));
            (a.id.clone(), text, article_metadata(a), a.body.clone())
        })
        .collect()
}

fn knowledge_items(docs: Vec<KnowledgeDoc>) -> Vec<(String, String, BTreeMap<String, String>, String)> {
    docs.into_iter()
        .map(|d| (d.id, d.body.clone(), d.metadata, d.body))
        .collect()
}

/// Parses, embeds and upserts a corpus into `collection`, then persists it.
/// Nothing is written unless every step succeeds.
pub fn ingest(cfg: &RunConfig, corpus: &Path, collection: &str, kind: Option<CorpusKind>) -> Result<IngestSummary> {
    let kind = kind.unwrap_or_else(|| CorpusKind::for_collection(collection));
    let embedder = cfg.build_embedder()?;
    let mut per_country = BTreeMap::new();
    let items = match kind {
        CorpusKind::Article => {
            let articles = jsonl::parse_corpus(open(corpus)?)?;
            for a in &articles {
                *per_country.entry(a.country).or_insert(0) += 1;
            }
            let enricher = if cfg.enrich {
                Some(Enricher::new(&cfg.enrichment_template)?)
            } else {
                None
            };
            article_items(&articles, enricher.as_ref())
        }
        CorpusKind::Knowledge => knowledge_items(jsonl::parse_knowledge(open(corpus)?)?),
    };
    let records = embed_records(&*embedder, cfg.embedder.concurrency, items)?;
    let dim = records.first().map_or_else(|| configured_dim(cfg), |r| r.vector.dim());
    let data = DataDir::new(&cfg.data_dir);
    let mut target = data.load_or_create(collection, dim)?;
    let ingested = records.len();
    for r in records {
        target.upsert(r)?;
    }
    let path = data.persist(&target)?;
    Ok(IngestSummary {
        collection: collection.to_string(),
        path,
        ingested,
        collection_size: target.len(),
        per_country,
    })
}

fn configured_dim(cfg: &RunConfig) -> usize {
    match cfg.embedder.mode {
        crate::config::EmbedderMode::Local => cfg.embedder.dim,
        crate::config::EmbedderMode::Remote => cfg
            .embedder
            .provider
            .as_ref()
            .and_then(|p| p.dim)
            .unwrap_or(cfg.embedder.dim),
    }
}

/// Runs the retrieval-augmented query flow against the `knowledge` and
/// `articles` collections.
pub fn ask(cfg: &RunConfig, query: &str) -> Result<RagResponse> {
    let data = DataDir::new(&cfg.data_dir);
    let knowledge = data.load(KNOWLEDGE_COLLECTION)?;
    let articles = data.load(ARTICLES_COLLECTION)?;
    let embedder = cfg.build_embedder()?;
    let generator = cfg.build_generator();
    let stores = Stores {
        knowledge: &knowledge,
        articles: &articles,
    };
    Ok(run_pipeline(
        query,
        &cfg.rag_config(),
        stores,
        &*embedder,
        generator.as_ref().map(|g| g as &dyn Generator),
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOutcome {
    pub scoring: Scoring,
    pub report: Report,
    pub report_path: PathBuf,
    pub scores_path: PathBuf,
}

fn scores_json(scores: &[CountryScore]) -> Result<String> {
    let map: BTreeMap<CountryCode, ScoreRecord> = scores.iter().map(|s| (s.country, s.record())).collect();
    Ok(serde_json::to_string_pretty(&map)? + "\n")
}

fn write_outputs(out_dir: &Path, scores: &[CountryScore]) -> Result<(Report, PathBuf, PathBuf)> {
    fs::create_dir_all(out_dir).map_err(Error::io(out_dir))?;
    let report = render_report(scores);
    let report_path = out_dir.join(REPORT_FILE);
    let scores_path = out_dir.join(SCORES_FILE);
    fs::write(&report_path, &report.tsv).map_err(Error::io(&report_path))?;
    fs::write(&scores_path, scores_json(scores)?).map_err(Error::io(&scores_path))?;
    Ok((report, report_path, scores_path))
}

/// Collection of body-only embeddings for the articles in `corpus`.
fn reembedded_bodies(cfg: &RunConfig, embedder: &(dyn Embedder + Sync), corpus: &Path) -> Result<Collection> {
    let articles = jsonl::parse_corpus(open(corpus)?)?;
    let records = embed_records(embedder, cfg.embedder.concurrency, article_items(&articles, None))?;
    let dim = records.first().map_or_else(|| configured_dim(cfg), |r| r.vector.dim());
    let mut c = Collection::new(ARTICLES_COLLECTION, dim)?;
    for r in records {
        c.upsert(r)?;
    }
    Ok(c)
}

/// Scores every country in the `articles` collection and writes
/// `report.tsv` and `scores.json` into `out_dir`. A degenerate normalization
/// is reported through [`Scoring::normalization`], not as an error, so the raw
/// fractions are still written.
pub fn classify(cfg: &RunConfig, out_dir: &Path, corpus: Option<&Path>) -> Result<ClassifyOutcome> {
    let embedder = cfg.build_embedder()?;
    let articles = if cfg.classify.reembed_bodies {
        let corpus = corpus.ok_or_else(|| Error::Config("classify.reembed_bodies needs --corpus".into()))?;
        reembedded_bodies(cfg, &*embedder, corpus)?
    } else {
        DataDir::new(&cfg.data_dir).load(ARTICLES_COLLECTION)?
    };
    let anchors = AnchorPair::build(&*embedder, &cfg.classify.pir_text, &cfg.classify.nir_text)?;
    let fractions = country_fractions(&articles, &anchors, cfg.classify.n_per_country, cfg.classify.seed)?;
    let scoring = score_countries(&fractions);
    let (report, report_path, scores_path) = write_outputs(out_dir, &scoring.scores)?;
    Ok(ClassifyOutcome {
        scoring,
        report,
        report_path,
        scores_path,
    })
}

pub fn stats(corpus: &Path) -> Result<CorpusStats> {
    jsonl::stream_stats(open(corpus)?)
}

pub fn read_scores(path: &Path) -> Result<Vec<CountryScore>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let map: BTreeMap<CountryCode, ScoreRecord> = serde_json::from_str(&text)?;
    Ok(map.into_iter().map(|(c, r)| CountryScore::from_record(c, r)).collect())
}

/// Re-renders `report.tsv` from a `scores.json`.
pub fn report(scores_path: &Path, out_dir: &Path) -> Result<(Report, PathBuf)> {
    let scores = read_scores(scores_path)?;
    fs::create_dir_all(out_dir).map_err(Error::io(out_dir))?;
    let report = render_report(&scores);
    let path = out_dir.join(REPORT_FILE);
    fs::write(&path, &report.tsv).map_err(Error::io(&path))?;
    Ok((report, path))
}

/// Embeds one text with the configured embedder.
pub fn embed_text(cfg: &RunConfig, text: &str) -> Result<EmbeddingVector> {
    Ok(cfg.build_embedder()?.embed(text)?)
}
