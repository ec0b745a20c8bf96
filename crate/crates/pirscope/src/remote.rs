// SPDX-License-Identifier: Apache-2.0

//! OpenAI-compatible HTTP providers: `/embeddings` for vectors and
//! `/chat/completions` for generation.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use pirscope_core::embedding::{collect_batch, truncate_chars};
use pirscope_core::rag::{GenerateError, Generator};
use pirscope_core::{EmbedError, Embedder, EmbeddingVector, ProviderConfig};
use rand::Rng;
use serde::Deserialize;
use serde_json::{json, Value};

/// Characters of a response body kept in error messages.
const EXCERPT_CHARS: usize = 300;

pub const DEFAULT_LLM_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_LLM_KEY_ENV: &str = "LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RemoteError {
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl RemoteError {
    fn retryable(&self) -> bool {
        match self {
            RemoteError::Status { status, .. } => *status == 429 || *status >= 500,
            RemoteError::Transport(_) => true,
            RemoteError::Malformed(_) => false,
        }
    }
}

impl From<RemoteError> for EmbedError {
    fn from(e: RemoteError) -> Self {
        let status = match &e {
            RemoteError::Status { status, .. } => Some(*status),
            _ => None,
        };
        EmbedError::Provider {
            status,
            message: e.to_string(),
        }
    }
}

fn excerpt(body: &str) -> String {
    truncate_chars(body, EXCERPT_CHARS).0.to_string()
}

/// Delay before retry number `attempt` (0-based): `base·2^attempt` plus up to
/// `base` of uniform jitter.
pub fn backoff_delay(base: Duration, attempt: u32) -> Duration {
    let exp = base.saturating_mul(1u32 << attempt.min(16));
    let jitter = if base.is_zero() {
        Duration::ZERO
    } else {
        base.mul_f64(rand::rng().random::<f64>())
    };
    exp + jitter
}

/// Blocking JSON-over-HTTP client with bearer auth and retry.
#[derive(Clone)]
pub struct HttpProvider {
    agent: ureq::Agent,
    config: ProviderConfig,
    api_key: Option<String>,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider")
            .field("base_url", &self.config.base_url)
            .field("model_id", &self.config.model_id)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!(
                "{} is not set; requests to {} are sent without credentials",
                config.api_key_env,
                config.base_url
            );
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            config,
            api_key,
        }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn post_once(&self, path: &str, body: &Value) -> Result<String, RemoteError> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), path);
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send(serde_json::to_vec(body).expect("serializable request"))
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        if (200..300).contains(&status) {
            Ok(text)
        } else {
            Err(RemoteError::Status {
                status,
                body: excerpt(&text),
            })
        }
    }

    /// POSTs `body` to `{base_url}/{path}`, retrying transport failures, 429
    /// and 5xx up to `max_retries` times with exponential backoff.
    pub fn post(&self, path: &str, body: &Value) -> Result<String, RemoteError> {
        let mut attempt = 0;
        loop {
            match self.post_once(path, body) {
                Ok(text) => return Ok(text),
                Err(e) if e.retryable() && attempt < self.config.max_retries => {
                    let delay = backoff_delay(self.config.backoff_base, attempt);
                    log::warn!("{path}: {e}; retry {} of {} in {delay:?}", attempt + 1, self.config.max_retries);
                    thread::sleep(delay);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    index: usize,
    embedding: Vec<f64>,
}

/// Embedder backed by a remote `/embeddings` endpoint.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    http: HttpProvider,
}

impl RemoteEmbedder {
    pub fn new(config: ProviderConfig) -> Self {
        assert!(config.max_batch >= 1, "max_batch must be at least 1");
        Self {
            http: HttpProvider::new(config),
        }
    }

    fn prepare<'t>(&self, text: &'t str) -> Result<&'t str, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let (kept, cut) = truncate_chars(text, self.http.config.char_budget);
        if cut {
            log::warn!("text truncated to {} characters before embedding", self.http.config.char_budget);
        }
        Ok(kept)
    }

    /// One request for `texts`, returning vectors in input order.
    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let cfg = &self.http.config;
        let body = json!({ "model": cfg.model_id, "input": texts });
        let raw = self.http.post("embeddings", &body)?;
        let parsed: EmbeddingsResponse =
            serde_json::from_str(&raw).map_err(|e| RemoteError::Malformed(format!("{e}: {}", excerpt(&raw))))?;
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        for item in parsed.data {
            match slots.get_mut(item.index) {
                Some(slot) => *slot = Some(item.embedding),
                None => return Err(RemoteError::Malformed(format!("unexpected index {}", item.index)).into()),
            }
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, slot)| {
                let components = slot.ok_or_else(|| RemoteError::Malformed(format!("no embedding for index {i}")))?;
                if let Some(dim) = cfg.dim {
                    if components.len() != dim {
                        return Err(EmbedError::DimensionMismatch {
                            expected: dim,
                            actual: components.len(),
                        });
                    }
                }
                EmbeddingVector::normalized(components, cfg.model_id.clone())
            })
            .collect()
    }

    /// Embeds one chunk; if the chunk fails as a whole, its items are retried
    /// individually so the failure can be pinned to specific indices.
    fn embed_chunk(&self, texts: &[&str]) -> Vec<Result<EmbeddingVector, EmbedError>> {
        match self.request(texts) {
            Ok(vs) => vs.into_iter().map(Ok).collect(),
            Err(e) if texts.len() == 1 => vec![Err(e)],
            Err(e) => {
                log::warn!("batch of {} failed ({e}); retrying items individually", texts.len());
                texts.iter().map(|t| self.request(&[t]).map(|mut v| v.remove(0))).collect()
            }
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn model_id(&self) -> &str {
        &self.http.config.model_id
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let text = self.prepare(text)?;
        Ok(self.request(&[text])?.remove(0))
    }

    /// Splits `texts` into `max_batch` chunks and sends up to
    /// `concurrency_limit` of them at a time. Output order matches input.
    fn embed_batch(&self, texts: &[&str], concurrency_limit: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyBatch);
        }
        let mut results: Vec<Option<Result<EmbeddingVector, EmbedError>>> = vec![None; texts.len()];
        let mut pending = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            match self.prepare(t) {
                Ok(kept) => pending.push((i, kept)),
                Err(e) => results[i] = Some(Err(e)),
            }
        }
        let chunks: Vec<&[(usize, &str)]> = pending.chunks(self.http.config.max_batch).collect();
        let next = AtomicUsize::new(0);
        let results = Mutex::new(results);
        let workers = concurrency_limit.max(1).min(chunks.len().max(1));
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let c = next.fetch_add(1, Ordering::Relaxed);
                    let Some(chunk) = chunks.get(c) else { break };
                    let inputs: Vec<&str> = chunk.iter().map(|(_, t)| *t).collect();
                    let out = self.embed_chunk(&inputs);
                    let mut slots = results.lock().expect("results lock");
                    for ((i, _), r) in chunk.iter().zip(out) {
                        slots[*i] = Some(r);
                    }
                });
            }
        });
        collect_batch(
            results
                .into_inner()
                .expect("results lock")
                .into_iter()
                .map(|r| r.expect("every index filled")),
        )
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

/// Generator backed by a remote `/chat/completions` endpoint.
#[derive(Debug, Clone)]
pub struct ChatGenerator {
    http: HttpProvider,
}

impl ChatGenerator {
    pub fn new(config: ProviderConfig) -> Self {
        Self {
            http: HttpProvider::new(config),
        }
    }
}

impl Generator for ChatGenerator {
    fn generate(&self, prompt: &str) -> Result<String, GenerateError> {
        let body = json!({
            "model": self.http.config.model_id,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let raw = self
            .http
            .post("chat/completions", &body)
            .map_err(|e| GenerateError::Unavailable(e.to_string()))?;
        let parsed: ChatResponse =
            serde_json::from_str(&raw).map_err(|_| GenerateError::Malformed { excerpt: excerpt(&raw) })?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| GenerateError::Malformed { excerpt: excerpt(&raw) })
    }
}
