// SPDX-License-Identifier: Apache-2.0

//! JSON Lines readers for article corpora and knowledge documents.
//!
//! Article lines carry `id`, `country` and `body` (required) plus optional
//! `peace_level`, `title`, `source` and `date`. Any other keys are kept
//! verbatim in [`Article::extra`] and written back on serialization.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use pirscope_core::corpus::{Article, StatsAccumulator};
use pirscope_core::{CorpusStats, PeaceLevel};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

const ARTICLE_FIELDS: &[&str] = &["id", "country", "peace_level", "title", "body", "source", "date"];

fn parse_object(line_no: usize, line: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::MalformedLine {
            line: line_no,
            message: "expected a JSON object".into(),
        }),
        Err(e) => Err(Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        }),
    }
}

fn required(map: &Map<String, Value>, line: usize, field: &'static str) -> Result<String> {
    match map.get(field) {
        None | Some(Value::Null) => Err(Error::MissingField { line, field }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(Error::FieldType { line, field }),
    }
}

fn optional(map: &Map<String, Value>, line: usize, field: &'static str) -> Result<Option<String>> {
    match map.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(Error::FieldType { line, field }),
    }
}

/// Parses one JSONL line into a validated article.
pub fn parse_article_line(line_no: usize, line: &str) -> Result<Article> {
    let map = parse_object(line_no, line)?;
    let invalid = |source| Error::InvalidArticle { line: line_no, source };
    let id = required(&map, line_no, "id")?;
    let country = required(&map, line_no, "country")?;
    let body = required(&map, line_no, "body")?;
    let mut article = Article::new(id, &country, body).map_err(invalid)?;
    if let Some(level) = optional(&map, line_no, "peace_level")? {
        article.peace_level = level.parse::<PeaceLevel>().map_err(invalid)?;
    }
    article.title = optional(&map, line_no, "title")?;
    article.source = optional(&map, line_no, "source")?;
    article.date = optional(&map, line_no, "date")?;
    article.validate().map_err(invalid)?;
    article.extra = map
        .iter()
        .filter(|(k, _)| !ARTICLE_FIELDS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.to_string()))
        .collect();
    Ok(article)
}

/// Streams articles from JSONL, checking id uniqueness. Blank lines are skipped.
pub struct ArticleReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> ArticleReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
        }
    }
}

impl<R: BufRead> Iterator for ArticleReader<R> {
    type Item = Result<Article>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line_no = self.line_no;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(Error::MalformedLine {
                        line: line_no,
                        message: e.to_string(),
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(parse_article_line(line_no, &line).and_then(|a| {
                if self.seen.insert(a.id.clone()) {
                    Ok(a)
                } else {
                    Err(Error::DuplicateId { line: line_no, id: a.id })
                }
            }));
        }
    }
}

pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Article>> {
    ArticleReader::new(reader).collect()
}

/// Summarises a corpus without holding it in memory.
pub fn stream_stats<R: BufRead>(reader: R) -> Result<CorpusStats> {
    let mut acc = StatsAccumulator::default();
    for article in ArticleReader::new(reader) {
        acc.push(&article?);
    }
    Ok(acc.finish())
}

pub fn article_to_json(article: &Article) -> Value {
    let mut map = Map::new();
    for (k, v) in &article.extra {
        map.insert(k.clone(), serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.clone())));
    }
    map.insert("id".into(), article.id.clone().into());
    map.insert("country".into(), article.country.as_str().into());
    map.insert("peace_level".into(), article.peace_level.as_str().into());
    let mut opt = |key: &str, v: &Option<String>| {
        if let Some(v) = v {
            map.insert(key.into(), v.clone().into());
        }
    };
    opt("title", &article.title);
    opt("source", &article.source);
    opt("date", &article.date);
    map.insert("body".into(), article.body.clone().into());
    Value::Object(map)
}

pub fn write_corpus<W: Write>(mut out: W, articles: &[Article]) -> std::io::Result<()> {
    for a in articles {
        serde_json::to_writer(&mut out, &article_to_json(a))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// A document for the knowledge collection: `id` plus `body` (or `text`), with
/// optional `title` and `source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeDoc {
    pub id: String,
    pub body: String,
    pub metadata: BTreeMap<String, String>,
}

pub fn parse_knowledge<R: BufRead>(reader: R) -> Result<Vec<KnowledgeDoc>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let map = parse_object(line_no, &line)?;
        let id = required(&map, line_no, "id")?;
        let body = match required(&map, line_no, "body") {
            Err(Error::MissingField { .. }) => required(&map, line_no, "text").map_err(|e| match e {
                Error::MissingField { line, .. } => Error::MissingField { line, field: "body" },
                e => e,
            })?,
            other => other?,
        };
        if id.is_empty() {
            return Err(Error::MissingField { line: line_no, field: "id" });
        }
        if body.trim().is_empty() {
            return Err(Error::MissingField { line: line_no, field: "body" });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { line: line_no, id });
        }
        let mut metadata = BTreeMap::new();
        for key in ["title", "source"] {
            if let Some(Value::String(v)) = map.get(key) {
                metadata.insert(key.to_string(), v.clone());
            }
        }
        docs.push(KnowledgeDoc { id, body, metadata });
    }
    Ok(docs)
}
