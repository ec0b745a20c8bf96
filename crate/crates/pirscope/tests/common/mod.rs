// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use pirscope_core::classify::{NIR_DEFINITION, PIR_DEFINITION};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use serde_json::json;

/// Tokens shared by both anchor definitions carry no signal.
const SHARED: &[&str] = &["intergroup", "or"];
const FILLER: &[&str] = &["the", "report", "said", "on", "tuesday", "officials", "city", "council", "local"];

/// Whitespace tokens of an anchor definition, lowercased, minus the shared ones.
pub fn anchor_tokens(definition: &str) -> Vec<String> {
    definition
        .split_whitespace()
        .map(str::to_lowercase)
        .filter(|t| !SHARED.contains(&t.as_str()))
        .collect()
}

/// A synthetic corpus where each article in country `c` is built from PIR
/// vocabulary with probability `w_c`, NIR vocabulary otherwise. Returns the
/// JSONL text and, per country, how many articles were built as PIR.
pub fn planted_corpus(weights: &[(&str, f64)], per_country: usize, seed: u64) -> (String, BTreeMap<String, usize>) {
    let pir = anchor_tokens(PIR_DEFINITION);
    let nir = anchor_tokens(NIR_DEFINITION);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = String::new();
    let mut planted = BTreeMap::new();
    for (country, w) in weights {
        let mut n_pir = 0;
        for i in 0..per_country {
            let is_pir = rng.random::<f64>() < *w;
            n_pir += usize::from(is_pir);
            let vocab = if is_pir { &pir } else { &nir };
            let mut words: Vec<&str> = (0..6).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
            words.extend((0..4).map(|_| *FILLER.choose(&mut rng).unwrap()));
            let line = json!({
                "id": format!("{country}-{i:04}"),
                "country": country,
                "body": words.join(" "),
            });
            writeln!(out, "{line}").unwrap();
        }
        planted.insert(country.to_string(), n_pir);
    }
    (out, planted)
}

/// Ten short articles across three countries.
pub fn small_corpus() -> String {
    let rows = [
        ("sg-1", "SG", "HIGH", "Neighbours offered help and support after the flood."),
        ("sg-2", "SG", "HIGH", "Community groups showed respect and kindness to newcomers."),
        ("sg-3", "SG", "HIGH", "Volunteers organised support for the elderly."),
        ("sg-4", "SG", "HIGH", "A festival celebrated tolerance between communities."),
        ("ke-1", "KE", "LOW", "Protesters clashed with police in aggression downtown."),
        ("ke-2", "KE", "LOW", "Officials accused rivals of obstruction and disrespect."),
        ("ke-3", "KE", "LOW", "Reports of intolerance rose after the election."),
        ("nz-1", "NZ", "HIGH", "Schools launched a kindness campaign."),
        ("nz-2", "NZ", "HIGH", "Farmers gave help to neighbours during the drought."),
        ("nz-3", "NZ", "HIGH", "Councils pledged respect for local iwi."),
    ];
    rows.iter()
        .map(|(id, c, p, b)| json!({"id": id, "country": c, "peace_level": p, "title": format!("Story {id}"), "body": b}).to_string() + "\n")
        .collect()
}

pub fn knowledge_corpus() -> String {
    [
        ("k1", "Positive intergroup reciprocity involves tolerance, respect and help across group lines."),
        ("k2", "Negative intergroup reciprocity involves aggression, obstruction and disrespect."),
        ("k3", "Peaceful societies sustain cooperative norms between groups."),
    ]
    .iter()
    .map(|(id, t)| json!({"id": id, "text": t}).to_string() + "\n")
    .collect()
}

pub fn write_config(dir: &Path, dim: usize, extra: &str) -> std::path::PathBuf {
    let path = dir.join("pirscope.toml");
    let data = dir.join("data");
    let text = format!(
        "data_dir = {:?}\n{extra}\n[embedder]\nmode = \"local\"\ndim = {dim}\nseed = 0\n",
        data.to_str().unwrap()
    );
    std::fs::write(&path, text).unwrap();
    path
}

pub fn pirscope(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pirscope"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run pirscope")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}
