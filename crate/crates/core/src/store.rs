// SPDX-License-Identifier: Apache-2.0

//! Named collections of document vectors with exact top-k cosine search and a
//! little-endian binary encoding.
//!
//! Search takes `&Collection` and upsert takes `&mut Collection`, so the
//! many-readers-or-one-writer contract is the borrow checker's. Callers that
//! share collections across threads wrap them in a lock of their choice.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_slices, EmbedError, EmbeddingVector};

/// Maximum number of characters kept from a record's source text.
pub const EXCERPT_CHARS: usize = 500;

/// Metadata key that carries the producing model id through persistence.
pub const MODEL_METADATA_KEY: &str = "model";

pub const MAGIC: [u8; 4] = *b"RLNS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("dimension mismatch: collection {collection} has dim {expected}, got {actual}")]
    DimensionMismatch {
        collection: String,
        expected: usize,
        actual: usize,
    },
    #[error("record {0} has a zero vector")]
    ZeroVector(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("collection dimension must be positive")]
    ZeroDimension,
    #[error("invalid filter clause {0:?} (expected key=value)")]
    InvalidFilter(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("bad magic: expected RLNS, found {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("corrupt header: {0}")]
    CorruptHeader(&'static str),
    #[error("truncated file: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("invalid UTF-8 in {field} at offset {offset}")]
    InvalidUtf8 { field: &'static str, offset: usize },
    #[error("invalid record {doc_id}: {reason}")]
    InvalidRecord { doc_id: String, reason: String },
    #[error("{0} trailing bytes after last record")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub vector: EmbeddingVector,
    pub metadata: BTreeMap<String, String>,
    pub text_excerpt: String,
}

impl DocumentRecord {
    /// Builds a record, keeping the first [`EXCERPT_CHARS`] characters of `source_text`.
    pub fn new(
        doc_id: impl Into<String>,
        vector: EmbeddingVector,
        metadata: BTreeMap<String, String>,
        source_text: &str,
    ) -> Self {
        let (excerpt, _) = crate::embedding::truncate_chars(source_text, EXCERPT_CHARS);
        Self {
            doc_id: doc_id.into(),
            vector,
            metadata,
            text_excerpt: excerpt.to_string(),
        }
    }

    pub fn country(&self) -> Option<&str> {
        self.metadata.get("country").map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub score: f64,
    pub metadata: BTreeMap<String, String>,
    pub text_excerpt: String,
}

/// Conjunction of metadata equality clauses; empty matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Filter {
    clauses: Vec<(String, String)>,
}

impl Filter {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn eq(key: impl Into<String>, value: impl Into<String>) -> Self {
        Self::none().and(key, value)
    }

    pub fn and(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.clauses.push((key.into(), value.into()));
        self
    }

    /// Parses `key=value[,key=value...]`.
    pub fn parse(s: &str) -> Result<Self, StoreError> {
        let mut f = Self::none();
        for clause in s.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            match clause.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => f = f.and(k.trim(), v.trim()),
                _ => return Err(StoreError::InvalidFilter(clause.to_string())),
            }
        }
        Ok(f)
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn matches(&self, metadata: &BTreeMap<String, String>) -> bool {
        self.clauses
            .iter()
            .all(|(k, v)| metadata.get(k).is_some_and(|m| m == v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    name: String,
    dim: usize,
    records: Vec<DocumentRecord>,
    index: BTreeMap<String, usize>,
}

impl Collection {
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::ZeroDimension);
        }
        Ok(Self {
            name: name.into(),
            dim,
            records: Vec::new(),
            index: BTreeMap::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[DocumentRecord] {
        &self.records
    }

    pub fn get(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.index.get(doc_id).map(|&i| &self.records[i])
    }

    /// Inserts `record`, replacing any record with the same id in place.
    ///
    /// The vector's model id and the `model` metadata entry are kept in sync so
    /// provenance survives persistence.
    pub fn upsert(&mut self, mut record: DocumentRecord) -> Result<(), StoreError> {
        if record.vector.dim() != self.dim {
            return Err(StoreError::DimensionMismatch {
                collection: self.name.clone(),
                expected: self.dim,
                actual: record.vector.dim(),
            });
        }
        if record.vector.norm() == 0.0 {
            return Err(StoreError::ZeroVector(record.doc_id));
        }
        if !record.vector.model_id().is_empty() {
            record
                .metadata
                .insert(MODEL_METADATA_KEY.to_string(), record.vector.model_id().to_string());
        } else if let Some(model) = record.metadata.get(MODEL_METADATA_KEY) {
            record.vector = record.vector.with_model_id(model.clone());
        }
        match self.index.get(&record.doc_id) {
            Some(&i) => self.records[i] = record,
            None => {
                self.index.insert(record.doc_id.clone(), self.records.len());
                self.records.push(record);
            }
        }
        Ok(())
    }

    /// Exact top-`k` records by cosine similarity among those passing `filter`.
    /// Hits are ordered by descending score, ties by ascending doc id.
    pub fn search(&self, query: &EmbeddingVector, k: usize, filter: &Filter) -> Result<Vec<SearchHit>, StoreError> {
        if k == 0 {
            return Err(StoreError::InvalidK);
        }
        if query.dim() != self.dim {
            return Err(StoreError::DimensionMismatch {
                collection: self.name.clone(),
                expected: self.dim,
                actual: query.dim(),
            });
        }
        let mut scored = Vec::with_capacity(self.records.len());
        for (i, r) in self.records.iter().enumerate() {
            if !filter.matches(&r.metadata) {
                continue;
            }
            let score = cosine_slices(query.components(), r.vector.components()).map_err(|e| match e {
                EmbedError::ZeroVector => StoreError::ZeroVector(String::from("<query>")),
                _ => unreachable!("dimensions checked above"),
            })?;
            scored.push((score, i));
        }
        let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0)
                .then_with(|| self.records[a.1].doc_id.cmp(&self.records[b.1].doc_id))
        };
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .map(|(score, i)| {
                let r = &self.records[i];
                SearchHit {
                    doc_id: r.doc_id.clone(),
                    score,
                    metadata: r.metadata.clone(),
                    text_excerpt: r.text_excerpt.clone(),
                }
            })
            .collect())
    }

    /// Serializes the collection in the `RLNS` format.
    pub fn encode(&self) -> Vec<u8> {
        let payload: usize = self
            .records
            .iter()
            .map(|r| {
                12 + r.doc_id.len()
                    + r.text_excerpt.len()
                    + r.metadata.iter().map(|(k, v)| 8 + k.len() + v.len()).sum::<usize>()
                    + 8 * self.dim
            })
            .sum();
        let mut out = Vec::with_capacity(20 + payload);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for r in &self.records {
            put_str(&mut out, &r.doc_id);
            out.extend_from_slice(&(r.metadata.len() as u32).to_le_bytes());
            for (k, v) in &r.metadata {
                put_str(&mut out, k);
                put_str(&mut out, v);
            }
            put_str(&mut out, &r.text_excerpt);
            for c in r.vector.components() {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out
    }

    /// Parses an `RLNS` buffer into a collection called `name`.
    pub fn decode(name: impl Into<String>, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(DecodeError::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(DecodeError::UnsupportedVersion(version));
        }
        let dim = r.u32()? as usize;
        if dim == 0 {
            return Err(DecodeError::CorruptHeader("dimension is zero"));
        }
        let count = r.u64()?;
        let min_record = 12 + 8 * dim;
        if count > (r.remaining() / min_record) as u64 {
            return Err(DecodeError::Truncated {
                offset: r.pos,
                needed: (count as usize).saturating_mul(min_record).saturating_sub(r.remaining()),
            });
        }
        let mut collection = Collection::new(name, dim).expect("dim checked");
        collection.records.reserve(count as usize);
        for _ in 0..count {
            let doc_id = r.string("doc_id")?;
            let n_meta = r.u32()?;
            let mut metadata = BTreeMap::new();
            for _ in 0..n_meta {
                let k = r.string("metadata key")?;
                let v = r.string("metadata value")?;
                metadata.insert(k, v);
            }
            let text_excerpt = r.string("excerpt")?;
            let raw = r.take(8 * dim)?;
            let components: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let invalid = |reason: String| DecodeError::InvalidRecord {
                doc_id: doc_id.clone(),
                reason,
            };
            let model = metadata.get(MODEL_METADATA_KEY).cloned().unwrap_or_default();
            let vector = EmbeddingVector::new(components, model).map_err(|e| invalid(e.to_string()))?;
            if collection.index.contains_key(&doc_id) {
                return Err(invalid(String::from("duplicate doc_id")));
            }
            collection
                .upsert(DocumentRecord {
                    doc_id: doc_id.clone(),
                    vector,
                    metadata,
                    text_excerpt,
                })
                .map_err(|e| invalid(e.to_string()))?;
        }
        if r.remaining() > 0 {
            return Err(DecodeError::TrailingBytes(r.remaining()));
        }
        Ok(collection)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated {
                offset: self.pos,
                needed: n - self.remaining(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self, field: &'static str) -> Result<String, DecodeError> {
        let len = self.u32()? as usize;
        let offset = self.pos;
        let raw = self.take(len)?;
        core::str::from_utf8(raw)
            .map(ToString::to_string)
            .map_err(|_| DecodeError::InvalidUtf8 { field, offset })
    }
}
