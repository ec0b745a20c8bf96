// SPDX-License-Identifier: Apache-2.0

//! Two-stage retrieval-augmented query flow.
//!
//! 1. the raw query is embedded and searched against the `knowledge` collection;
//! 2. the query vector is blended with the centroid of the knowledge hits and
//!    searched against the `articles` collection;
//! 3. both hit lists are rendered into a prompt around the query;
//! 4. a [`Generator`] answers the prompt, or an extractive summary of the top
//!    articles stands in when none is configured or it is unreachable.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbedError, Embedder, EmbeddingVector, ProviderConfig};
use crate::store::{Collection, Filter, SearchHit, StoreError};
use crate::template::{Template, TemplateError};

pub const KNOWLEDGE_COLLECTION: &str = "knowledge";
pub const ARTICLES_COLLECTION: &str = "articles";

pub const PROMPT_FIELDS: &[&str] = &["query", "knowledge", "articles"];

pub const FALLBACK_PREFIX: &str = "EXTRACTIVE SUMMARY:";

/// Number of article excerpts the extractive fallback concatenates.
pub const FALLBACK_EXCERPTS: usize = 3;

pub const DEFAULT_PROMPT_TEMPLATE: &str = "\
QUERY:
{query}

SOCIAL SCIENCE CONTEXT:
{knowledge}

MEDIA ARTICLES:
{articles}

Using the social science context and the media articles above, answer the query. \
Identify positive intergroup reciprocity (intergroup tolerance, respect, kindness, help, or support) \
and negative intergroup reciprocity (intergroup intolerance, disrespect, aggression, obstruction, or hindrance) \
in the articles, citing articles by their bracketed number.
";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RagConfig {
    pub k_knowledge: usize,
    pub k_articles: usize,
    /// Weight of the raw query against the knowledge centroid in the article search.
    pub alpha: f64,
    pub prompt_template: String,
    pub llm: Option<ProviderConfig>,
}

impl Default for RagConfig {
    fn default() -> Self {
        Self {
            k_knowledge: 5,
            k_articles: 10,
            alpha: 0.5,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.to_string(),
            llm: None,
        }
    }
}

impl RagConfig {
    pub fn validate(&self) -> Result<(), RagError> {
        let bad = |msg: String| RagError::new(Stage::Config, StageFailure::Config(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(bad(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.k_knowledge == 0 || self.k_articles == 0 {
            return Err(bad(String::from("k_knowledge and k_articles must be positive")));
        }
        Template::parse_requiring(&self.prompt_template, PROMPT_FIELDS)
            .map_err(|e| RagError::new(Stage::Config, e.into()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GeneratorKind {
    Llm,
    ExtractiveFallback,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Llm => "LLM",
            GeneratorKind::ExtractiveFallback => "EXTRACTIVE_FALLBACK",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagResponse {
    pub query: String,
    pub knowledge_hits: Vec<SearchHit>,
    pub article_hits: Vec<SearchHit>,
    pub augmented_prompt: String,
    pub generated_text: String,
    pub generator: GeneratorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    /// Provider could not be reached or kept failing; the caller falls back.
    #[error("language model unavailable: {0}")]
    Unavailable(String),
    #[error("malformed language model response: {excerpt}")]
    Malformed { excerpt: String },
}

/// A language model that completes a prompt.
pub trait Generator {
    fn generate(&self, prompt: &str) -> Result<String, GenerateError>;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn generate(&self, prompt: &str) -> Result<String, GenerateError> {
        (**self).generate(prompt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    KnowledgeSearch,
    ArticleSearch,
    Augment,
    Generate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::KnowledgeSearch => "knowledge search",
            Stage::ArticleSearch => "article search",
            Stage::Augment => "augment",
            Stage::Generate => "generate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StageFailure {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage}: {failure}")]
pub struct RagError {
    pub stage: Stage,
    #[source]
    pub failure: StageFailure,
}

impl RagError {
    pub fn new(stage: Stage, failure: StageFailure) -> Self {
        Self { stage, failure }
    }
}

fn at<E: Into<StageFailure>>(stage: Stage) -> impl FnOnce(E) -> RagError {
    move |e| RagError::new(stage, e.into())
}

/// The two collections the pipeline reads.
#[derive(Debug, Clone, Copy)]
pub struct Stores<'a> {
    pub knowledge: &'a Collection,
    pub articles: &'a Collection,
}

#[derive(Debug, Clone)]
pub struct KnowledgeStage {
    pub query_vector: EmbeddingVector,
    pub hits: Vec<SearchHit>,
}

/// Embeds the raw query and searches the knowledge collection with it.
pub fn knowledge_search<E: Embedder + ?Sized>(
    query: &str,
    cfg: &RagConfig,
    knowledge: &Collection,
    embedder: &E,
) -> Result<KnowledgeStage, RagError> {
    let query_vector = embedder.embed(query).map_err(at(Stage::KnowledgeSearch))?;
    if knowledge.is_empty() {
        log::info!("knowledge collection {:?} is empty; no context retrieved", knowledge.name());
        return Ok(KnowledgeStage {
            query_vector,
            hits: Vec::new(),
        });
    }
    let hits = knowledge
        .search(&query_vector, cfg.k_knowledge, &Filter::none())
        .map_err(at(Stage::KnowledgeSearch))?;
    Ok(KnowledgeStage { query_vector, hits })
}

/// `normalize(alpha·query + (1−alpha)·mean(context))`, or the query itself when
/// `context` is empty or `alpha` is 1.
pub fn combine_query(
    query: &EmbeddingVector,
    context: &[EmbeddingVector],
    alpha: f64,
) -> Result<EmbeddingVector, EmbedError> {
    if context.is_empty() || alpha == 1.0 {
        return Ok(query.clone());
    }
    let dim = query.dim();
    let mut centroid = alloc::vec![0.0; dim];
    for v in context {
        if v.dim() != dim {
            return Err(EmbedError::DimensionMismatch {
                expected: dim,
                actual: v.dim(),
            });
        }
        for (c, x) in centroid.iter_mut().zip(v.components()) {
            *c += x;
        }
    }
    let n = context.len() as f64;
    let blended: Vec<f64> = query
        .components()
        .iter()
        .zip(&centroid)
        .map(|(q, c)| alpha * q + (1.0 - alpha) * (c / n))
        .collect();
    match EmbeddingVector::normalized(blended, query.model_id()) {
        Ok(v) => {
            log::debug!(
                "article query = normalize({alpha}·query + {}·centroid of {} knowledge vectors)",
                1.0 - alpha,
                context.len()
            );
            Ok(v)
        }
        Err(EmbedError::ZeroVector) => {
            log::warn!("query and knowledge centroid cancel out; searching articles with the raw query");
            Ok(query.clone())
        }
        Err(e) => Err(e),
    }
}

pub fn article_search(
    query_vector: &EmbeddingVector,
    context: &[EmbeddingVector],
    cfg: &RagConfig,
    articles: &Collection,
) -> Result<Vec<SearchHit>, RagError> {
    let combined = combine_query(query_vector, context, cfg.alpha).map_err(at(Stage::ArticleSearch))?;
    articles
        .search(&combined, cfg.k_articles, &Filter::none())
        .map_err(at(Stage::ArticleSearch))
}

/// Numbered excerpt list in rank order: `[i] doc_id (score s): excerpt`.
pub fn render_hits(hits: &[SearchHit]) -> String {
    let mut out = String::new();
    for (i, h) in hits.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "[{}] {} (score {:.4}): {}", i + 1, h.doc_id, h.score, h.text_excerpt);
    }
    out
}

/// Renders the prompt; the template must contain `{query}`, `{knowledge}` and `{articles}`.
pub fn augment(
    query: &str,
    knowledge_hits: &[SearchHit],
    article_hits: &[SearchHit],
    template: &str,
) -> Result<String, TemplateError> {
    let template = Template::parse_requiring(template, PROMPT_FIELDS)?;
    let knowledge = render_hits(knowledge_hits);
    let articles = render_hits(article_hits);
    Ok(template.render(|field| match field {
        "query" => query,
        "knowledge" => &knowledge,
        _ => &articles,
    }))
}

pub fn extractive_fallback(article_hits: &[SearchHit]) -> String {
    let mut out = String::from(FALLBACK_PREFIX);
    for h in article_hits.iter().take(FALLBACK_EXCERPTS) {
        out.push('\n');
        out.push_str(&h.text_excerpt);
    }
    out
}

/// Asks `generator` for a completion, falling back to the extractive summary
/// when there is no generator or it is unavailable.
pub fn generate(
    prompt: &str,
    article_hits: &[SearchHit],
    generator: Option<&dyn Generator>,
) -> Result<(String, GeneratorKind), GenerateError> {
    let Some(generator) = generator else {
        return Ok((extractive_fallback(article_hits), GeneratorKind::ExtractiveFallback));
    };
    match generator.generate(prompt) {
        Ok(text) => Ok((text, GeneratorKind::Llm)),
        Err(GenerateError::Unavailable(why)) => {
            log::warn!("{why}; using extractive fallback");
            Ok((extractive_fallback(article_hits), GeneratorKind::ExtractiveFallback))
        }
        Err(e) => Err(e),
    }
}

/// Runs knowledge search, article search, augmentation and generation in order.
pub fn run_pipeline<E: Embedder + ?Sized>(
    query: &str,
    cfg: &RagConfig,
    stores: Stores<'_>,
    embedder: &E,
    generator: Option<&dyn Generator>,
) -> Result<RagResponse, RagError> {
    cfg.validate()?;
    let knowledge = knowledge_search(query, cfg, stores.knowledge, embedder)?;
    let context: Vec<EmbeddingVector> = knowledge
        .hits
        .iter()
        .filter_map(|h| stores.knowledge.get(&h.doc_id))
        .map(|r| r.vector.clone())
        .collect();
    let article_hits = if stores.articles.is_empty() {
        log::info!("articles collection {:?} is empty", stores.articles.name());
        Vec::new()
    } else {
        article_search(&knowledge.query_vector, &context, cfg, stores.articles)?
    };
    let augmented_prompt =
        augment(query, &knowledge.hits, &article_hits, &cfg.prompt_template).map_err(at(Stage::Augment))?;
    let (generated_text, generator) =
        generate(&augmented_prompt, &article_hits, generator).map_err(at(Stage::Generate))?;
    Ok(RagResponse {
        query: query.to_string(),
        knowledge_hits: knowledge.hits,
        article_hits,
        augmented_prompt,
        generated_text,
        generator,
    })
}
