// SPDX-License-Identifier: Apache-2.0

use std::io;
use std::path::PathBuf;

use pirscope_core::classify::ClassifyError;
use pirscope_core::corpus::CorpusError;
use pirscope_core::rag::RagError;
use pirscope_core::store::{DecodeError, StoreError};
use pirscope_core::template::TemplateError;
use pirscope_core::EmbedError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: missing required field {field}")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: field {field} must be a string")]
    FieldType { line: usize, field: &'static str },
    #[error("line {line}: {source}")]
    InvalidArticle {
        line: usize,
        #[source]
        source: CorpusError,
    },
    #[error("line {line}: duplicate id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: DecodeError,
    },
    #[error("collection {name} not found at {}", path.display())]
    MissingCollection { name: String, path: PathBuf },
    #[error("config: {0}")]
    Config(String),
    #[error("embedding: {0}")]
    Embed(#[from] EmbedError),
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("template: {0}")]
    Template(#[from] TemplateError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
