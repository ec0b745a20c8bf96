// SPDX-License-Identifier: Apache-2.0

//! Tagged articles, corpus summary statistics, seeded per-country sampling and
//! metadata enrichment of article text.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

use crate::template::{Template, TemplateError};

/// Template used to enrich article text before it is embedded.
pub const DEFAULT_ENRICHMENT_TEMPLATE: &str = "[country={country}] [peace={peace_level}] {body}";

/// Placeholders an enrichment template may use.
pub const ENRICHMENT_FIELDS: &[&str] = &["country", "peace_level", "title", "body"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("country must match [A-Z]{{2}}, got {0:?}")]
    InvalidCountry(String),
    #[error("unknown peace level {0:?} (expected HIGH, LOW or UNTAGGED)")]
    InvalidPeaceLevel(String),
    #[error("article id must not be empty")]
    EmptyId,
    #[error("article {0} has an empty body")]
    EmptyBody(String),
    #[error("article {id}: date {date:?} is not an ISO-8601 date")]
    InvalidDate { id: String, date: String },
    #[error("duplicate article id {0}")]
    DuplicateId(String),
}

/// Two-letter uppercase country code.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    pub fn as_str(&self) -> &str {
        // Both bytes are ASCII uppercase by construction.
        core::str::from_utf8(&self.0).unwrap_or("??")
    }
}

impl FromStr for CountryCode {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.as_bytes() {
            [a, b] if a.is_ascii_uppercase() && b.is_ascii_uppercase() => Ok(Self([*a, *b])),
            _ => Err(CorpusError::InvalidCountry(s.to_string())),
        }
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CountryCode({})", self.as_str())
    }
}

impl Serialize for CountryCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PeaceLevel {
    High,
    Low,
    #[default]
    Untagged,
}

impl PeaceLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PeaceLevel::High => "HIGH",
            PeaceLevel::Low => "LOW",
            PeaceLevel::Untagged => "UNTAGGED",
        }
    }
}

impl FromStr for PeaceLevel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "HIGH" | "high" => Ok(PeaceLevel::High),
            "LOW" | "low" => Ok(PeaceLevel::Low),
            "UNTAGGED" | "untagged" | "" => Ok(PeaceLevel::Untagged),
            other => Err(CorpusError::InvalidPeaceLevel(other.to_string())),
        }
    }
}

impl fmt::Display for PeaceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One tagged media document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub id: String,
    pub country: CountryCode,
    pub peace_level: PeaceLevel,
    pub title: Option<String>,
    pub body: String,
    pub source: Option<String>,
    pub date: Option<String>,
    /// Unrecognised input fields, kept verbatim (key → serialized value).
    pub extra: BTreeMap<String, String>,
}

impl Article {
    /// Creates a validated, untagged article with only the required fields.
    pub fn new(id: impl Into<String>, country: &str, body: impl Into<String>) -> Result<Self, CorpusError> {
        let article = Self {
            id: id.into(),
            country: country.parse()?,
            peace_level: PeaceLevel::Untagged,
            title: None,
            body: body.into(),
            source: None,
            date: None,
            extra: BTreeMap::new(),
        };
        article.validate()?;
        Ok(article)
    }

    pub fn with_peace_level(mut self, level: PeaceLevel) -> Self {
        self.peace_level = level;
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    /// Checks the per-article invariants (the country code is checked on parse).
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if self.body.trim().is_empty() {
            return Err(CorpusError::EmptyBody(self.id.clone()));
        }
        if let Some(date) = &self.date {
            if !is_iso_date(date) {
                return Err(CorpusError::InvalidDate {
                    id: self.id.clone(),
                    date: date.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn word_count(&self) -> u64 {
        self.body.split_whitespace().count() as u64
    }
}

/// Accepts `YYYY-MM-DD`, optionally followed by a `T` time part.
fn is_iso_date(s: &str) -> bool {
    let (date, time) = match s.split_once('T') {
        Some((d, t)) => (d, Some(t)),
        None => (s, None),
    };
    let b = date.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    let digits = |r: core::ops::Range<usize>| -> Option<u32> {
        let part = &date[r];
        part.bytes().all(|c| c.is_ascii_digit()).then(|| part.parse().ok()).flatten()
    };
    let (Some(_), Some(month), Some(day)) = (digits(0..4), digits(5..7), digits(8..10)) else {
        return false;
    };
    (1..=12).contains(&month) && (1..=31).contains(&day) && time.is_none_or(|t| !t.is_empty())
}

/// Fails on the first id that appears twice.
pub fn ensure_unique_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<(), CorpusError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CorpusError::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CountryCount {
    pub article_count: u64,
    pub word_count: u64,
}

/// Corpus summary. Standard deviations are population (divide by N) figures
/// over the countries present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_country: BTreeMap<CountryCode, CountryCount>,
    pub total_articles: u64,
    pub total_words: u64,
    pub mean_articles: f64,
    pub std_articles: f64,
    pub mean_words: f64,
    pub std_words: f64,
    pub std_kind: String,
}

impl CorpusStats {
    pub fn from_counts(per_country: BTreeMap<CountryCode, CountryCount>) -> Self {
        let articles: Vec<f64> = per_country.values().map(|c| c.article_count as f64).collect();
        let words: Vec<f64> = per_country.values().map(|c| c.word_count as f64).collect();
        let (mean_articles, std_articles) = mean_and_population_std(&articles);
        let (mean_words, std_words) = mean_and_population_std(&words);
        Self {
            total_articles: per_country.values().map(|c| c.article_count).sum(),
            total_words: per_country.values().map(|c| c.word_count).sum(),
            per_country,
            mean_articles,
            std_articles,
            mean_words,
            std_words,
            std_kind: String::from("population"),
        }
    }
}

fn mean_and_population_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Streaming accumulator behind [`corpus_stats`]; lets callers summarise a
/// corpus without holding it in memory.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    per_country: BTreeMap<CountryCode, CountryCount>,
}

impl StatsAccumulator {
    pub fn push(&mut self, article: &Article) {
        let entry = self.per_country.entry(article.country).or_default();
        entry.article_count += 1;
        entry.word_count += article.word_count();
    }

    pub fn finish(self) -> CorpusStats {
        CorpusStats::from_counts(self.per_country)
    }
}

pub fn corpus_stats(articles: &[Article]) -> CorpusStats {
    let mut acc = StatsAccumulator::default();
    for a in articles {
        acc.push(a);
    }
    acc.finish()
}

/// Seed for one country's draw, derived from the run seed so that adding or
/// removing a country leaves the other countries' samples unchanged.
pub fn country_seed(seed: u64, country: CountryCode) -> u64 {
    xxh64(country.as_str().as_bytes(), seed)
}

/// `min(n, len)` distinct indices in `0..len` drawn uniformly without
/// replacement, returned in ascending order.
pub fn sample_indices(len: usize, n: usize, seed: u64) -> Vec<usize> {
    if n >= len {
        return (0..len).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, len, n).into_vec();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountrySample<T> {
    pub items: Vec<T>,
    /// Fewer than the requested number were available.
    pub shortfall: bool,
}

/// Groups `items` by country and draws a seeded sample of `n` per country.
/// Sampled items keep their input order.
pub fn sample_by_country<T: Clone>(
    items: &[T],
    country_of: impl Fn(&T) -> Option<CountryCode>,
    n: usize,
    seed: u64,
) -> BTreeMap<CountryCode, CountrySample<T>> {
    assert!(n >= 1, "sample size must be positive");
    let mut groups: BTreeMap<CountryCode, Vec<&T>> = BTreeMap::new();
    for item in items {
        if let Some(c) = country_of(item) {
            groups.entry(c).or_default().push(item);
        }
    }
    groups
        .into_iter()
        .map(|(country, members)| {
            let picked = sample_indices(members.len(), n, country_seed(seed, country));
            let sample = CountrySample {
                items: picked.into_iter().map(|i| members[i].clone()).collect(),
                shortfall: members.len() < n,
            };
            (country, sample)
        })
        .collect()
}

pub fn sample_per_country(articles: &[Article], n: usize, seed: u64) -> BTreeMap<CountryCode, CountrySample<Article>> {
    sample_by_country(articles, |a| Some(a.country), n, seed)
}

/// Compiled enrichment template.
#[derive(Debug, Clone)]
pub struct Enricher {
    template: Template,
}

impl Enricher {
    pub fn new(template: &str) -> Result<Self, TemplateError> {
        Ok(Self {
            template: Template::parse(template, ENRICHMENT_FIELDS)?,
        })
    }

    pub fn enrich(&self, article: &Article) -> String {
        self.template.render(|field| match field {
            "country" => article.country.as_str(),
            "peace_level" => article.peace_level.as_str(),
            "title" => article.title.as_deref().unwrap_or(""),
            _ => &article.body,
        })
    }
}

impl Default for Enricher {
    fn default() -> Self {
        Self::new(DEFAULT_ENRICHMENT_TEMPLATE).expect("default template is valid")
    }
}

pub fn enrich_text(article: &Article, template: &str) -> Result<String, TemplateError> {
    Ok(Enricher::new(template)?.enrich(article))
}
