// SPDX-License-Identifier: Apache-2.0

//! Allocation-only core of `pirscope`: a corpus model for country-tagged news
//! articles, a deterministic hashing embedder, exact cosine vector search, a
//! two-stage retrieval-augmented query flow and the PIR/NIR anchor classifier
//! that ranks countries by their share of articles closer to positive than to
//! negative intergroup reciprocity.
//!
//! Everything here is pure computation over in-memory values. File formats,
//! HTTP providers and the command line live in the `pirscope` crate.

#![no_std]

extern crate alloc;

pub mod classify;
pub mod corpus;
pub mod embedding;
pub mod rag;
pub mod store;
pub mod template;

pub use classify::{
    build_anchors, classify_article, country_fractions, normalize_scores, report, Alignment, AnchorPair,
    ClassifyError, CountryFraction, CountryScore,
};
pub use corpus::{corpus_stats, enrich_text, sample_per_country, Article, CorpusStats, CountryCode, PeaceLevel};
pub use embedding::{cosine_similarity, EmbedError, Embedder, EmbeddingVector, HashEmbedder, ProviderConfig};
pub use rag::{run_pipeline, GenerateError, Generator, GeneratorKind, RagConfig, RagError, RagResponse, Stores};
pub use store::{Collection, DecodeError, DocumentRecord, Filter, SearchHit, StoreError};
