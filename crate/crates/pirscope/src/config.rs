// SPDX-License-Identifier: Apache-2.0

//! Run configuration, read from a TOML file. Every key is optional.
//!
//! ```toml
//! data_dir = "data"
//! enrich = true
//! enrichment_template = "[country={country}] [peace={peace_level}] {body}"
//!
//! [embedder]
//! mode = "local"          # or "remote"
//! dim = 1536
//! seed = 0
//! concurrency = 4
//!
//! [embedder.provider]     # used when mode = "remote"
//! base_url = "https://api.openai.com/v1"
//! model_id = "text-embedding-3-small"
//! api_key_env = "EMBEDDING_API_KEY"
//!
//! [rag]
//! k_knowledge = 5
//! k_articles = 10
//! alpha = 0.5
//!
//! [llm]                   # omit to use the extractive fallback
//! base_url = "https://api.openai.com/v1"
//! model_id = "gpt-4o-mini"
//! api_key_env = "LLM_API_KEY"
//!
//! [classify]
//! n_per_country = 6000
//! seed = 42
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use pirscope_core::classify::{DEFAULT_SAMPLE_PER_COUNTRY, NIR_DEFINITION, PIR_DEFINITION};
use pirscope_core::corpus::DEFAULT_ENRICHMENT_TEMPLATE;
use pirscope_core::embedding::{DEFAULT_CHAR_BUDGET, REMOTE_DEFAULT_DIM};
use pirscope_core::rag::DEFAULT_PROMPT_TEMPLATE;
use pirscope_core::{Embedder, HashEmbedder, ProviderConfig, RagConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::remote::{ChatGenerator, RemoteEmbedder, DEFAULT_LLM_KEY_ENV, DEFAULT_LLM_MODEL};

/// Smallest dimension accepted for the local embedder.
pub const MIN_LOCAL_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderMode {
    Remote,
    #[default]
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub mode: EmbedderMode,
    pub provider: Option<ProviderConfig>,
    pub dim: usize,
    pub seed: u64,
    /// Requests in flight during batch embedding.
    pub concurrency: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            mode: EmbedderMode::Local,
            provider: None,
            dim: REMOTE_DEFAULT_DIM,
            seed: 0,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RagSection {
    pub k_knowledge: usize,
    pub k_articles: usize,
    pub alpha: f64,
    pub prompt_template: String,
}

impl Default for RagSection {
    fn default() -> Self {
        let d = RagConfig::default();
        Self {
            k_knowledge: d.k_knowledge,
            k_articles: d.k_articles,
            alpha: d.alpha,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub base_url: String,
    pub model_id: String,
    pub api_key_env: String,
    pub max_retries: u32,
    pub timeout_ms: u64,
    pub backoff_base_ms: u64,
}

impl Default for LlmSection {
    fn default() -> Self {
        let p = ProviderConfig::default();
        Self {
            base_url: p.base_url,
            model_id: DEFAULT_LLM_MODEL.to_string(),
            api_key_env: DEFAULT_LLM_KEY_ENV.to_string(),
            max_retries: p.max_retries,
            timeout_ms: p.timeout.as_millis() as u64,
            backoff_base_ms: p.backoff_base.as_millis() as u64,
        }
    }
}

impl LlmSection {
    pub fn provider(&self) -> ProviderConfig {
        ProviderConfig {
            base_url: self.base_url.clone(),
            model_id: self.model_id.clone(),
            api_key_env: self.api_key_env.clone(),
            max_batch: 1,
            max_retries: self.max_retries,
            timeout: Duration::from_millis(self.timeout_ms),
            backoff_base: Duration::from_millis(self.backoff_base_ms),
            dim: None,
            char_budget: DEFAULT_CHAR_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub n_per_country: usize,
    pub seed: u64,
    pub pir_text: String,
    pub nir_text: String,
    /// Classify freshly embedded bodies (no metadata) instead of the stored vectors.
    pub reembed_bodies: bool,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            n_per_country: DEFAULT_SAMPLE_PER_COUNTRY,
            seed: 42,
            pir_text: PIR_DEFINITION.to_string(),
            nir_text: NIR_DEFINITION.to_string(),
            reembed_bodies: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub enrich: bool,
    pub enrichment_template: String,
    pub embedder: EmbedderConfig,
    pub rag: RagSection,
    pub llm: Option<LlmSection>,
    pub classify: ClassifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            enrich: true,
            enrichment_template: DEFAULT_ENRICHMENT_TEMPLATE.to_string(),
            embedder: EmbedderConfig::default(),
            rag: RagSection::default(),
            llm: None,
            classify: ClassifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match self.embedder.mode {
            EmbedderMode::Remote => {
                let p = self
                    .embedder
                    .provider
                    .as_ref()
                    .ok_or_else(|| Error::Config("remote embedder mode requires [embedder.provider]".into()))?;
                if p.max_batch == 0 {
                    return Err(Error::Config("embedder.provider.max_batch must be at least 1".into()));
                }
            }
            EmbedderMode::Local => {
                if self.embedder.dim < MIN_LOCAL_DIM {
                    return Err(Error::Config(format!(
                        "local embedder dim must be at least {MIN_LOCAL_DIM}, got {}",
                        self.embedder.dim
                    )));
                }
            }
        }
        if self.embedder.concurrency == 0 {
            return Err(Error::Config("embedder.concurrency must be at least 1".into()));
        }
        if self.classify.n_per_country == 0 {
            return Err(Error::Config("classify.n_per_country must be at least 1".into()));
        }
        self.rag_config().validate()?;
        pirscope_core::corpus::Enricher::new(&self.enrichment_template)?;
        Ok(())
    }

    pub fn rag_config(&self) -> RagConfig {
        RagConfig {
            k_knowledge: self.rag.k_knowledge,
            k_articles: self.rag.k_articles,
            alpha: self.rag.alpha,
            prompt_template: self.rag.prompt_template.clone(),
            llm: self.llm.as_ref().map(LlmSection::provider),
        }
    }

    pub fn build_embedder(&self) -> Result<Box<dyn Embedder + Sync>> {
        Ok(match self.embedder.mode {
            EmbedderMode::Local => Box::new(HashEmbedder::new(self.embedder.dim, self.embedder.seed)),
            EmbedderMode::Remote => {
                let p = self
                    .embedder
                    .provider
                    .clone()
                    .ok_or_else(|| Error::Config("remote embedder mode requires [embedder.provider]".into()))?;
                Box::new(RemoteEmbedder::new(p))
            }
        })
    }

    pub fn build_generator(&self) -> Option<ChatGenerator> {
        self.rag_config().llm.map(ChatGenerator::new)
    }
}
