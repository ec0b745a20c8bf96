// SPDX-License-Identifier: Apache-2.0

mod common;

use std::fs;

use common::{knowledge_corpus, pirscope, planted_corpus, small_corpus, stderr, stdout, write_config};
use pirscope_core::{GeneratorKind, RagResponse};
use serde_json::Value;

fn setup(dim: usize) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), dim, "");
    (dir, cfg.to_str().unwrap().to_string())
}

#[test]
fn ingest_writes_collection_with_counts() {
    let (dir, cfg) = setup(64);
    fs::write(dir.path().join("corpus.jsonl"), small_corpus()).unwrap();
    let o = pirscope(dir.path(), &["--config", &cfg, "ingest", "--corpus", "corpus.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("ingested 10 records into articles"), "{out}");
    assert!(out.contains("KE\t3") && out.contains("SG\t4") && out.contains("NZ\t3"), "{out}");

    let c = pirscope::storage::load(&dir.path().join("data/articles.vec")).unwrap();
    assert_eq!(c.len(), 10);
    assert_eq!(c.dim(), 64);
    let r = c.get("sg-1").unwrap();
    assert_eq!(r.metadata["country"], "SG");
    assert_eq!(r.metadata["peace_level"], "HIGH");
    assert_eq!(r.metadata["title"], "Story sg-1");
    assert!(r.metadata["model"].starts_with("local-hash-xxh64:dim=64"));
}

#[test]
fn malformed_line_aborts_without_writing() {
    let (dir, cfg) = setup(32);
    let mut lines: Vec<String> = small_corpus().lines().map(String::from).collect();
    lines[2] = "{\"id\": \"broken\", \"country\": ".into();
    fs::write(dir.path().join("bad.jsonl"), lines.join("\n")).unwrap();
    let o = pirscope(dir.path(), &["--config", &cfg, "ingest", "--corpus", "bad.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("error:") && err.contains("line 3"), "{err}");
    assert!(!dir.path().join("data").exists());
}

#[test]
fn invalid_country_is_reported_with_line() {
    let (dir, cfg) = setup(32);
    fs::write(dir.path().join("bad.jsonl"), "{\"id\":\"a\",\"country\":\"SG\",\"body\":\"x\"}\n{\"id\":\"b\",\"country\":\"Kenya\",\"body\":\"y\"}\n").unwrap();
    let o = pirscope(dir.path(), &["--config", &cfg, "ingest", "--corpus", "bad.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("[A-Z]{2}"), "{err}");
}

#[test]
fn reingest_is_byte_identical() {
    let (dir, cfg) = setup(48);
    fs::write(dir.path().join("corpus.jsonl"), small_corpus()).unwrap();
    let args = ["--config", cfg.as_str(), "ingest", "--corpus", "corpus.jsonl"];
    assert!(pirscope(dir.path(), &args).status.success());
    let first = fs::read(dir.path().join("data/articles.vec")).unwrap();
    assert!(pirscope(dir.path(), &args).status.success());
    assert_eq!(fs::read(dir.path().join("data/articles.vec")).unwrap(), first);

    let (other, other_cfg) = setup(48);
    fs::write(other.path().join("corpus.jsonl"), small_corpus()).unwrap();
    assert!(pirscope(other.path(), &["--config", &other_cfg, "ingest", "--corpus", "corpus.jsonl"]).status.success());
    assert_eq!(fs::read(other.path().join("data/articles.vec")).unwrap(), first);
}

#[test]
fn ask_returns_structured_response() {
    let (dir, cfg) = setup(128);
    fs::write(dir.path().join("corpus.jsonl"), small_corpus()).unwrap();
    fs::write(dir.path().join("knowledge.jsonl"), knowledge_corpus()).unwrap();

    let query = "Which stories show kindness and help?";
    let o = pirscope(dir.path(), &["--config", &cfg, "ask", query]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("knowledge"), "{}", stderr(&o));

    for (file, coll) in [("corpus.jsonl", "articles"), ("knowledge.jsonl", "knowledge")] {
        let o = pirscope(dir.path(), &["--config", &cfg, "ingest", "--corpus", file, "--collection", coll]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = pirscope(dir.path(), &["--config", &cfg, "ask", query, "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: RagResponse = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.query, query);
    assert_eq!(r.generator, GeneratorKind::ExtractiveFallback);
    assert!(r.augmented_prompt.contains(query));
    assert_eq!(r.knowledge_hits.len(), 3);
    assert_eq!(r.article_hits.len(), 10);
    assert!(r.generated_text.starts_with("EXTRACTIVE SUMMARY:"));
    let again: RagResponse = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(again, r);

    let plain = pirscope(dir.path(), &["--config", &cfg, "ask", query]);
    assert!(stdout(&plain).starts_with("[EXTRACTIVE_FALLBACK]"), "{}", stdout(&plain));
}

fn classify_two_countries(seed: &str) -> (String, String) {
    let (dir, cfg) = setup(256);
    let (corpus, _) = planted_corpus(&[("AA", 0.8), ("BB", 0.2)], 60, 7);
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();
    assert!(pirscope(dir.path(), &["--config", &cfg, "ingest", "--corpus", "corpus.jsonl"]).status.success());
    let o = pirscope(dir.path(), &["--config", &cfg, "--seed", seed, "classify", "--n", "40", "--out", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    (
        fs::read_to_string(dir.path().join("out/report.tsv")).unwrap(),
        fs::read_to_string(dir.path().join("out/scores.json")).unwrap(),
    )
}

#[test]
fn classify_two_countries_spans_full_scale() {
    let (tsv, json) = classify_two_countries("42");
    let rows: Vec<Vec<&str>> = tsv.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0], rows[0][2]), ("AA", "100"));
    assert_eq!((rows[1][0], rows[1][2]), ("BB", "0"));

    let scores: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(scores["AA"]["n_classified"], 40);
    assert_eq!(scores["AA"]["normalized_pct"], 100.0);
    assert_eq!(scores["BB"]["normalized_pct"], 0.0);

    assert_eq!(classify_two_countries("42"), (tsv, json));
}

#[test]
fn classify_with_all_articles_matches_planted_fractions() {
    let (dir, cfg) = setup(256);
    let (corpus, planted) = planted_corpus(&[("AA", 0.7), ("BB", 0.5), ("CC", 0.3)], 50, 3);
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();
    assert!(pirscope(dir.path(), &["--config", &cfg, "ingest", "--corpus", "corpus.jsonl"]).status.success());
    let o = pirscope(dir.path(), &["--config", &cfg, "classify", "--out", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scores = pirscope::commands::read_scores(&dir.path().join("out/scores.json")).unwrap();
    for s in &scores {
        assert!(s.shortfall);
        assert_eq!(s.n_classified, 50);
        assert_eq!(s.raw_fraction, planted[s.country.as_str()] as f64 / 50.0, "{}", s.country);
    }
}

#[test]
fn single_country_reports_raw_fraction_only() {
    let (dir, cfg) = setup(128);
    let (corpus, _) = planted_corpus(&[("SG", 0.5)], 20, 1);
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();
    assert!(pirscope(dir.path(), &["--config", &cfg, "ingest", "--corpus", "corpus.jsonl"]).status.success());
    let o = pirscope(dir.path(), &["--config", &cfg, "classify", "--out", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tsv = fs::read_to_string(dir.path().join("out/report.tsv")).unwrap();
    assert!(tsv.lines().nth(1).unwrap().ends_with("\tn/a"), "{tsv}");
    let scores: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/scores.json")).unwrap()).unwrap();
    assert!(scores["SG"]["normalized_pct"].is_null());
}

#[test]
fn degenerate_range_fails_after_writing_raw_fractions() {
    let (dir, cfg) = setup(256);
    let (corpus, _) = planted_corpus(&[("AA", 1.0), ("BB", 1.0)], 10, 1);
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();
    assert!(pirscope(dir.path(), &["--config", &cfg, "ingest", "--corpus", "corpus.jsonl"]).status.success());
    let o = pirscope(dir.path(), &["--config", &cfg, "classify", "--out", "out"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("degenerate range"), "{}", stderr(&o));
    assert!(dir.path().join("out/report.tsv").is_file());
}

#[test]
fn classify_requires_articles_collection() {
    let (dir, cfg) = setup(32);
    let o = pirscope(dir.path(), &["--config", &cfg, "classify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("articles"), "{}", stderr(&o));
}

#[test]
fn reembedding_bodies_uses_the_corpus_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 256, "[classify]\nreembed_bodies = true\n");
    let cfg = cfg.to_str().unwrap();
    let (corpus, planted) = planted_corpus(&[("AA", 0.9), ("BB", 0.1)], 30, 5);
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();
    let o = pirscope(dir.path(), &["--config", cfg, "classify", "--out", "out"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pirscope(dir.path(), &["--config", cfg, "classify", "--out", "out", "--corpus", "corpus.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scores = pirscope::commands::read_scores(&dir.path().join("out/scores.json")).unwrap();
    assert_eq!(scores[0].raw_fraction, planted["AA"] as f64 / 30.0);
}

#[test]
fn report_rerenders_scores() {
    let dir = tempfile::tempdir().unwrap();
    let scores = r#"{
      "AU": {"n_classified": 10, "n_pir": 7, "n_tie": 0, "raw_fraction": 0.7, "normalized_pct": 76.0, "shortfall": false},
      "KE": {"n_classified": 10, "n_pir": 2, "n_tie": 0, "raw_fraction": 0.2, "normalized_pct": 0.0, "shortfall": false},
      "NZ": {"n_classified": 10, "n_pir": 9, "n_tie": 0, "raw_fraction": 0.9, "normalized_pct": 100.0, "shortfall": false}
    }"#;
    fs::write(dir.path().join("scores.json"), scores).unwrap();
    let o = pirscope(dir.path(), &["report", "--scores", "scores.json", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tsv = fs::read_to_string(dir.path().join("r/report.tsv")).unwrap();
    assert_eq!(
        tsv,
        "country\traw_fraction\tnormalized_pct\nNZ\t0.900000\t100\nAU\t0.700000\t76\nKE\t0.200000\t0\n"
    );
    assert!(stdout(&o).contains("NZ"));
}

#[test]
fn stats_prints_json_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.jsonl"), small_corpus()).unwrap();
    let o = pirscope(dir.path(), &["stats", "--corpus", "corpus.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["total_articles"], 10);
    assert_eq!(v["per_country"]["SG"]["article_count"], 4);
    assert!((v["mean_articles"].as_f64().unwrap() - 10.0 / 3.0).abs() < 1e-12);
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "[rag]\nalpha = 3.0\n").unwrap();
    let o = pirscope(dir.path(), &["--config", "c.toml", "stats", "--corpus", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
}
