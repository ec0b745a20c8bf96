// SPDX-License-Identifier: Apache-2.0

//! PIR/NIR anchor classification, per-country PIR fractions, min-max
//! normalization and the ranked country report.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{sample_by_country, CountryCode};
use crate::embedding::{cosine_similarity, EmbedError, Embedder, EmbeddingVector};
use crate::store::{Collection, DocumentRecord};

/// Positive intergroup reciprocity anchor text.
pub const PIR_DEFINITION: &str = "Intergroup tolerance, respect, kindness, help, or support.";
/// Negative intergroup reciprocity anchor text.
pub const NIR_DEFINITION: &str = "Intergroup intolerance, disrespect, aggression, obstruction, or hindrance.";

/// Articles classified per country unless configured otherwise.
pub const DEFAULT_SAMPLE_PER_COUNTRY: usize = 6000;

pub const NORMALIZATION_NOTE: &str =
    "Normalized % is a min-max rescaling of raw PIR fractions across countries (highest = 100%, lowest = 0%).";
pub const RAW_ONLY_NOTE: &str =
    "Normalization needs at least two countries with distinct raw fractions; raw fractions only.";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("anchors must differ")]
    IdenticalAnchors,
    #[error("anchor embedding failed: {0}")]
    Embed(#[from] EmbedError),
    #[error("collection {0} is empty")]
    EmptyCollection(String),
    #[error("degenerate range: normalization needs at least two countries with distinct fractions")]
    DegenerateRange,
    #[error("sample size must be at least 1")]
    InvalidSampleSize,
}

/// Embedded PIR and NIR definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorPair {
    pub pir_text: String,
    pub nir_text: String,
    pub pir_vec: EmbeddingVector,
    pub nir_vec: EmbeddingVector,
    pub model_id: String,
}

impl AnchorPair {
    /// Embeds the two anchor texts with `embedder`.
    pub fn build<E: Embedder + ?Sized>(embedder: &E, pir_text: &str, nir_text: &str) -> Result<Self, ClassifyError> {
        if pir_text.trim() == nir_text.trim() {
            return Err(ClassifyError::IdenticalAnchors);
        }
        let pir_vec = embedder.embed(pir_text)?;
        let nir_vec = embedder.embed(nir_text)?;
        if pir_vec.dim() != nir_vec.dim() {
            return Err(EmbedError::DimensionMismatch {
                expected: pir_vec.dim(),
                actual: nir_vec.dim(),
            }
            .into());
        }
        if pir_vec.components() == nir_vec.components() {
            return Err(ClassifyError::IdenticalAnchors);
        }
        Ok(Self {
            pir_text: pir_text.to_string(),
            nir_text: nir_text.to_string(),
            pir_vec,
            nir_vec,
            model_id: embedder.model_id().to_string(),
        })
    }

    pub fn from_definitions<E: Embedder + ?Sized>(embedder: &E) -> Result<Self, ClassifyError> {
        Self::build(embedder, PIR_DEFINITION, NIR_DEFINITION)
    }
}

pub fn build_anchors<E: Embedder + ?Sized>(embedder: &E) -> Result<AnchorPair, ClassifyError> {
    AnchorPair::from_definitions(embedder)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Alignment {
    Pir,
    Nir,
    Tie,
}

/// PIR iff the article is strictly closer (by cosine) to the PIR anchor,
/// NIR iff strictly closer to the NIR anchor, TIE otherwise.
pub fn classify_article(article: &EmbeddingVector, anchors: &AnchorPair) -> Result<Alignment, EmbedError> {
    let pir = cosine_similarity(article, &anchors.pir_vec)?;
    let nir = cosine_similarity(article, &anchors.nir_vec)?;
    Ok(if pir > nir {
        Alignment::Pir
    } else if pir < nir {
        Alignment::Nir
    } else {
        Alignment::Tie
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CountryFraction {
    pub n_classified: u64,
    pub n_pir: u64,
    pub n_nir: u64,
    pub n_tie: u64,
    /// `n_pir / n_classified`; ties count in the denominator only.
    pub raw_fraction: f64,
    pub shortfall: bool,
}

impl CountryFraction {
    fn tally(labels: impl IntoIterator<Item = Alignment>, shortfall: bool) -> Self {
        let mut f = Self {
            shortfall,
            ..Self::default()
        };
        for label in labels {
            f.n_classified += 1;
            match label {
                Alignment::Pir => f.n_pir += 1,
                Alignment::Nir => f.n_nir += 1,
                Alignment::Tie => f.n_tie += 1,
            }
        }
        if f.n_classified > 0 {
            f.raw_fraction = f.n_pir as f64 / f.n_classified as f64;
        }
        f
    }
}

/// Classifies a seeded sample of up to `n` records per country (taken from the
/// `country` metadata) and returns each country's PIR tally.
pub fn country_fractions(
    articles: &Collection,
    anchors: &AnchorPair,
    n: usize,
    seed: u64,
) -> Result<BTreeMap<CountryCode, CountryFraction>, ClassifyError> {
    if n == 0 {
        return Err(ClassifyError::InvalidSampleSize);
    }
    if articles.is_empty() {
        return Err(ClassifyError::EmptyCollection(articles.name().to_string()));
    }
    let records: Vec<&DocumentRecord> = articles.records().iter().collect();
    let skipped = records
        .iter()
        .filter(|r| r.country().and_then(|c| c.parse::<CountryCode>().ok()).is_none())
        .count();
    if skipped > 0 {
        log::warn!("{skipped} records without a valid country tag were not classified");
    }
    let samples = sample_by_country(&records, |r| r.country().and_then(|c| c.parse().ok()), n, seed);
    let mut out = BTreeMap::new();
    for (country, sample) in samples {
        let labels = sample
            .items
            .iter()
            .map(|r| classify_article(&r.vector, anchors))
            .collect::<Result<Vec<_>, _>>()?;
        if sample.shortfall {
            log::warn!("{country}: only {} articles available (requested {n})", labels.len());
        }
        out.insert(country, CountryFraction::tally(labels, sample.shortfall));
    }
    Ok(out)
}

/// Min-max rescales `fractions` to `[0, 100]`: the largest maps to 100 and the
/// smallest to 0.
pub fn normalize_scores<K: Ord + Clone>(fractions: &BTreeMap<K, f64>) -> Result<BTreeMap<K, f64>, ClassifyError> {
    if fractions.len() < 2 {
        return Err(ClassifyError::DegenerateRange);
    }
    let min = fractions.values().copied().fold(f64::INFINITY, f64::min);
    let max = fractions.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if !range.is_finite() || range <= 0.0 {
        return Err(ClassifyError::DegenerateRange);
    }
    Ok(fractions
        .iter()
        .map(|(k, x)| (k.clone(), 100.0 * ((x - min) / range)))
        .collect())
}

/// One report row.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryScore {
    pub country: CountryCode,
    pub n_classified: u64,
    pub n_pir: u64,
    pub n_tie: u64,
    pub raw_fraction: f64,
    /// `None` when normalization was not possible.
    pub normalized_pct: Option<f64>,
    pub shortfall: bool,
}

/// The per-country value of the scores JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub n_classified: u64,
    pub n_pir: u64,
    pub n_tie: u64,
    pub raw_fraction: f64,
    pub normalized_pct: Option<f64>,
    pub shortfall: bool,
}

impl CountryScore {
    pub fn record(&self) -> ScoreRecord {
        ScoreRecord {
            n_classified: self.n_classified,
            n_pir: self.n_pir,
            n_tie: self.n_tie,
            raw_fraction: self.raw_fraction,
            normalized_pct: self.normalized_pct,
            shortfall: self.shortfall,
        }
    }

    pub fn from_record(country: CountryCode, r: ScoreRecord) -> Self {
        Self {
            country,
            n_classified: r.n_classified,
            n_pir: r.n_pir,
            n_tie: r.n_tie,
            raw_fraction: r.raw_fraction,
            normalized_pct: r.normalized_pct,
            shortfall: r.shortfall,
        }
    }
}

/// Outcome of scoring: rows plus the normalization error, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Scoring {
    pub scores: Vec<CountryScore>,
    pub normalization: Result<(), ClassifyError>,
}

/// Attaches normalized percentages to the fractions. When normalization is
/// impossible the rows keep their raw fractions and the error is returned
/// alongside them.
pub fn score_countries(fractions: &BTreeMap<CountryCode, CountryFraction>) -> Scoring {
    let raw: BTreeMap<CountryCode, f64> = fractions.iter().map(|(c, f)| (*c, f.raw_fraction)).collect();
    let normalized = normalize_scores(&raw);
    let scores = fractions
        .iter()
        .map(|(c, f)| CountryScore {
            country: *c,
            n_classified: f.n_classified,
            n_pir: f.n_pir,
            n_tie: f.n_tie,
            raw_fraction: f.raw_fraction,
            normalized_pct: normalized.as_ref().ok().and_then(|m| m.get(c).copied()),
            shortfall: f.shortfall,
        })
        .collect();
    Scoring {
        scores,
        normalization: normalized.map(|_| ()),
    }
}

/// Sorts rows by normalized percentage (raw fraction when not normalized)
/// descending, then by country code.
pub fn rank(scores: &[CountryScore]) -> Vec<CountryScore> {
    let key = |s: &CountryScore| s.normalized_pct.unwrap_or(s.raw_fraction);
    let mut rows = scores.to_vec();
    rows.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.country.cmp(&b.country)));
    rows
}

fn display_pct(pct: Option<f64>) -> String {
    match pct {
        Some(p) => format!("{}", libm::round(p) as i64),
        None => String::from("n/a"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub tsv: String,
    pub text: String,
}

/// Renders the ranked table as TSV and as aligned text with a footnote.
pub fn report(scores: &[CountryScore]) -> Report {
    let rows = rank(scores);
    let normalized = rows.iter().any(|r| r.normalized_pct.is_some());

    let mut tsv = String::from("country\traw_fraction\tnormalized_pct\n");
    for r in &rows {
        let _ = writeln!(tsv, "{}\t{:.6}\t{}", r.country, r.raw_fraction, display_pct(r.normalized_pct));
    }

    let mut text = String::new();
    let _ = writeln!(text, "{:<8} {:>12} {:>13}", "Country", "Raw fraction", "Normalized %");
    for r in &rows {
        let pct = match r.normalized_pct {
            Some(_) => format!("{}%", display_pct(r.normalized_pct)),
            None => display_pct(None),
        };
        let flag = if r.shortfall { "  (short sample)" } else { "" };
        let _ = writeln!(text, "{:<8} {:>12.6} {:>13}{flag}", r.country.as_str(), r.raw_fraction, pct);
    }
    text.push('\n');
    text.push_str(if normalized { NORMALIZATION_NOTE } else { RAW_ONLY_NOTE });
    text.push('\n');
    Report { tsv, text }
}
