//! Random corpora and brute-force reference implementations.
//!
//! The oracles decode BIO2 labels themselves and use plain nested loops over
//! vectors, so they share no code path with the library kernels.

#![allow(dead_code)]

use nerqa::corpus::{Corpus, CorpusBuilder, DatasetBundle, ParseOptions, SplitKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small vocabularies so duplicates, leaks and type conflicts are common.
pub fn random_rows(rng: &mut ChaCha8Rng, max_instances: usize, max_tokens: usize) -> Vec<(Vec<String>, Vec<String>)> {
    let n = rng.random_range(0..=max_instances);
    (0..n)
        .map(|_| {
            // short instances drawn from a tiny alphabet repeat often
            let len = if rng.random_bool(0.3) {
                rng.random_range(1..=2)
            } else {
                rng.random_range(1..=max_tokens)
            };
            let mut tokens = Vec::with_capacity(len);
            let mut labels: Vec<String> = Vec::with_capacity(len);
            for i in 0..len {
                tokens.push(format!("t{}", rng.random_range(0..6)));
                let prev_type = labels
                    .get(i.wrapping_sub(1))
                    .and_then(|l: &String| l.split_once('-').map(|(_, t)| t.to_owned()));
                let roll = rng.random_range(0..10);
                let label = match (roll, prev_type) {
                    (0..=4, _) => "O".to_owned(),
                    (5..=7, Some(t)) => format!("I-{t}"),
                    _ => format!("B-{}", ["PER", "LOC", "ORG"][rng.random_range(0..3)]),
                };
                labels.push(label);
            }
            (tokens, labels)
        })
        .collect()
}

pub fn build(split: SplitKind, rows: &[(Vec<String>, Vec<String>)]) -> Corpus {
    let opts = ParseOptions {
        strict: true,
        ..Default::default()
    };
    let mut b = CorpusBuilder::new(split, opts);
    for (t, l) in rows {
        b.push(t.clone(), l.clone()).expect("generated rows are strict BIO2");
    }
    b.build()
}

pub fn random_corpus(rng: &mut ChaCha8Rng, split: SplitKind, max_instances: usize, max_tokens: usize) -> Corpus {
    build(split, &random_rows(rng, max_instances, max_tokens))
}

/// Test rows partly copied from train to create leakage.
pub fn random_bundle(rng: &mut ChaCha8Rng, max_instances: usize, max_tokens: usize) -> DatasetBundle {
    let train = random_rows(rng, max_instances, max_tokens);
    let dev = random_rows(rng, max_instances, max_tokens);
    let mut test = random_rows(rng, max_instances, max_tokens);
    for row in test.iter_mut() {
        if !train.is_empty() && rng.random_bool(0.2) {
            *row = train[rng.random_range(0..train.len())].clone();
        }
    }
    DatasetBundle::new(
        build(SplitKind::Train, &train),
        rng.random_bool(0.7).then(|| build(SplitKind::Dev, &dev)),
        Some(build(SplitKind::Test, &test)),
    )
    .unwrap()
}

/// (surface, type) for every mention, decoded from BIO2 labels.
pub fn oracle_mentions(tokens: &[String], labels: &[String]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        if let Some(t) = labels[i].strip_prefix("B-") {
            let mut j = i + 1;
            while j < labels.len() && labels[j] == format!("I-{t}") {
                j += 1;
            }
            out.push((tokens[i..j].join(" "), t.to_owned()));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

fn rows_of(c: &Corpus) -> Vec<(&[String], &[String])> {
    c.instances().iter().map(|i| (i.tokens(), i.labels())).collect()
}

fn all_mentions(c: &Corpus) -> Vec<(String, String)> {
    rows_of(c)
        .into_iter()
        .flat_map(|(t, l)| oracle_mentions(t, l))
        .collect()
}

fn unique_surfaces(c: &Corpus) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (s, _) in all_mentions(c) {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

pub fn oracle_redundancy(c: &Corpus) -> f64 {
    let rows = rows_of(c);
    let mut repeats = 0;
    for i in 0..rows.len() {
        if (0..i).any(|j| rows[j] == rows[i]) {
            repeats += 1;
        }
    }
    repeats as f64 / rows.len() as f64
}

pub fn oracle_leakage(b: &DatasetBundle) -> f64 {
    let test = rows_of(b.test().unwrap());
    let mut refs = rows_of(b.train());
    if let Some(d) = b.dev() {
        refs.extend(rows_of(d));
    }
    let leaked = test.iter().filter(|r| refs.iter().any(|x| x == *r)).count();
    leaked as f64 / test.len() as f64
}

pub fn oracle_unseen(b: &DatasetBundle) -> f64 {
    let test = unique_surfaces(b.test().unwrap());
    let train = unique_surfaces(b.train());
    let unseen = test.iter().filter(|s| !train.contains(s)).count();
    unseen as f64 / test.len() as f64
}

/// (ambiguous mention ratio, conflicting surfaces sorted)
pub fn oracle_ambiguity(c: &Corpus) -> (f64, Vec<String>) {
    let ms = all_mentions(c);
    let mut ambiguous = 0;
    let mut conflicts: Vec<String> = Vec::new();
    for (s, t) in &ms {
        if ms.iter().any(|(s2, t2)| s2 == s && t2 != t) {
            ambiguous += 1;
            if !conflicts.contains(s) {
                conflicts.push(s.clone());
            }
        }
    }
    conflicts.sort();
    (ambiguous as f64 / ms.len() as f64, conflicts)
}

pub fn oracle_density(c: &Corpus) -> f64 {
    let mut sum = 0.0;
    for (t, l) in rows_of(c) {
        sum += oracle_mentions(t, l).len() as f64 / t.len() as f64;
    }
    sum / c.len() as f64
}

pub fn oracle_std(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mut mean = 0.0;
    for v in values {
        mean += v;
    }
    mean /= k;
    let mut var = 0.0;
    for v in values {
        var += (v - mean) * (v - mean);
    }
    (var / k).sqrt()
}

pub fn oracle_imbalance(c: &Corpus) -> f64 {
    let ms = all_mentions(c);
    let mut types: Vec<String> = ms.iter().map(|(_, t)| t.clone()).collect();
    types.sort();
    types.dedup();
    let probs: Vec<f64> = types
        .iter()
        .map(|t| ms.iter().filter(|(_, t2)| t2 == t).count() as f64 / ms.len() as f64)
        .collect();
    oracle_std(&probs)
}

pub fn oracle_null_rate(c: &Corpus) -> f64 {
    let null = rows_of(c).iter().filter(|(_, l)| l.iter().all(|x| x == "O")).count();
    null as f64 / c.len() as f64
}

pub fn oracle_mention_total(c: &Corpus) -> usize {
    all_mentions(c).len()
}

pub fn oracle_surface_count(c: &Corpus) -> usize {
    unique_surfaces(c).len()
}

/// Peak resident set size of this process in bytes, where available.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
