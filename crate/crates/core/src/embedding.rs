// SPDX-License-Identifier: Apache-2.0

//! Embedding vectors, the embedder abstraction, the deterministic feature-hash
//! embedder and the cosine kernel.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

/// Tolerance on the L2 norm for a vector to count as unit length.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Dimension of the hosted `text-embedding-3-small` model.
pub const REMOTE_DEFAULT_DIM: usize = 1536;

/// Character budget applied to texts before they are sent to a remote provider.
pub const DEFAULT_CHAR_BUDGET: usize = 24_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding has no components")]
    EmptyVector,
    #[error("component {index} is not finite")]
    NonFinite { index: usize },
    #[error("zero vector cannot be normalized or compared")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("provider error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Provider { status: Option<u16>, message: String },
    #[error("batch embedding failed for indices {failed:?}: {first}")]
    Batch { failed: Vec<usize>, first: Box<EmbedError> },
    #[error("empty batch")]
    EmptyBatch,
}

/// A fixed-dimension real vector with the id of the model that produced it.
#[derive(Clone, PartialEq)]
pub struct EmbeddingVector {
    components: Vec<f64>,
    model_id: String,
    normalized: bool,
}

impl EmbeddingVector {
    /// Wraps raw components without rescaling them.
    pub fn new(components: Vec<f64>, model_id: impl Into<String>) -> Result<Self, EmbedError> {
        if components.is_empty() {
            return Err(EmbedError::EmptyVector);
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(EmbedError::NonFinite { index });
        }
        let normalized = libm::fabs(l2_norm(&components) - 1.0) <= UNIT_NORM_TOLERANCE;
        Ok(Self {
            components,
            model_id: model_id.into(),
            normalized,
        })
    }

    /// Builds a unit-length vector from `components`.
    pub fn normalized(mut components: Vec<f64>, model_id: impl Into<String>) -> Result<Self, EmbedError> {
        if components.is_empty() {
            return Err(EmbedError::EmptyVector);
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(EmbedError::NonFinite { index });
        }
        let norm = l2_norm(&components);
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbedError::ZeroVector);
        }
        for c in &mut components {
            *c /= norm;
        }
        Self::new(components, model_id)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.components)
    }

    pub fn with_model_id(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }

    /// Returns a copy with every component multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, EmbedError> {
        Self::new(
            self.components.iter().map(|c| c * factor).collect(),
            self.model_id.clone(),
        )
    }
}

impl fmt::Debug for EmbeddingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingVector")
            .field("dim", &self.dim())
            .field("model_id", &self.model_id)
            .field("normalized", &self.normalized)
            .finish_non_exhaustive()
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|c| c * c).sum())
}

/// Cosine of the angle between `a` and `b`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    cosine_slices(a.components(), b.components())
}

pub(crate) fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    let cos = dot / (libm::sqrt(na) * libm::sqrt(nb));
    Ok(cos.clamp(-1.0, 1.0))
}

/// Anything that turns text into embedding vectors.
pub trait Embedder {
    fn model_id(&self) -> &str;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    /// Embeds every text, preserving order. Failures are collected rather than
    /// short-circuited so the error can list every failing index.
    fn embed_batch(&self, texts: &[&str], concurrency_limit: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let _ = concurrency_limit;
        if texts.is_empty() {
            return Err(EmbedError::EmptyBatch);
        }
        collect_batch(texts.iter().map(|t| self.embed(t)))
    }
}

impl<E: Embedder + ?Sized> Embedder for &E {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed(text)
    }

    fn embed_batch(&self, texts: &[&str], concurrency_limit: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed_batch(texts, concurrency_limit)
    }
}

impl<E: Embedder + ?Sized> Embedder for Box<E> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed(text)
    }

    fn embed_batch(&self, texts: &[&str], concurrency_limit: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed_batch(texts, concurrency_limit)
    }
}

/// Folds per-item results into one ordered vector or a `Batch` error listing
/// every failed index.
pub fn collect_batch<I>(results: I) -> Result<Vec<EmbeddingVector>, EmbedError>
where
    I: IntoIterator<Item = Result<EmbeddingVector, EmbedError>>,
{
    let mut out = Vec::new();
    let mut failed = Vec::new();
    let mut first = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                failed.push(i);
                first.get_or_insert(e);
            }
        }
    }
    match first {
        None => Ok(out),
        Some(first) => Err(EmbedError::Batch {
            failed,
            first: Box::new(first),
        }),
    }
}

/// Deterministic bag-of-words embedder.
///
/// Tokens are the whitespace-separated words of the lowercased text. Each token
/// is hashed with XXH64 under `seed`; the hash modulo `dim` picks a bucket and
/// the hash's top bit picks the sign added to it. The accumulated vector is
/// L2-normalized.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
    model_id: String,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "hash embedder dimension must be positive");
        Self {
            dim,
            seed,
            model_id: format!("local-hash-xxh64:dim={dim}:seed={seed}"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Unnormalized bucket counts for `text`.
    pub fn raw_counts(&self, text: &str) -> Vec<f64> {
        let mut acc = alloc::vec![0.0; self.dim];
        for token in text.to_lowercase().split_whitespace() {
            let h = xxh64(token.as_bytes(), self.seed);
            let bucket = (h % self.dim as u64) as usize;
            acc[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        acc
    }
}

impl Embedder for HashEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        EmbeddingVector::normalized(self.raw_counts(text), self.model_id.clone())
    }
}

/// Connection settings for a remote OpenAI-compatible provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub base_url: String,
    pub model_id: String,
    pub api_key_env: String,
    pub max_batch: usize,
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub timeout: Duration,
    #[serde(with = "millis")]
    pub backoff_base: Duration,
    /// Expected vector length; `None` accepts whatever the provider returns.
    pub dim: Option<usize>,
    pub char_budget: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: String::from("https://api.openai.com/v1"),
            model_id: String::from("text-embedding-3-small"),
            api_key_env: String::from("EMBEDDING_API_KEY"),
            max_batch: 64,
            max_retries: 5,
            timeout: Duration::from_secs(60),
            backoff_base: Duration::from_millis(500),
            dim: Some(REMOTE_DEFAULT_DIM),
            char_budget: DEFAULT_CHAR_BUDGET,
        }
    }
}

mod millis {
    use core::time::Duration;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Cuts `text` to at most `budget` characters on a char boundary.
/// Returns the kept prefix and whether anything was dropped.
pub fn truncate_chars(text: &str, budget: usize) -> (&str, bool) {
    match text.char_indices().nth(budget) {
        Some((byte, _)) => (&text[..byte], true),
        None => (text, false),
    }
}
