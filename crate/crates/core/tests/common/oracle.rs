//! Naive, direct-from-definition interestingness scorer.
//!
//! Works on raw strings with its own tokenizer and set arithmetic and shares
//! no code with the library's scoring path. Used to check the library.
#![allow(dead_code)]

use std::collections::HashSet;

pub struct OracleProfile {
    pub target: Vec<Vec<String>>,
    pub competitors: Vec<Vec<String>>,
    pub stopwords: HashSet<String>,
}

fn norm(raw: &str) -> Option<String> {
    let lower: String = raw.chars().flat_map(char::to_lowercase).collect();
    let chars: Vec<char> = lower.chars().collect();
    let start = chars.iter().position(|c| c.is_alphanumeric())?;
    let end = chars.iter().rposition(|c| c.is_alphanumeric())?;
    Some(chars[start..=end].iter().collect())
}

pub fn words(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split_whitespace() {
        if let Some(w) = norm(piece) {
            if !stopwords.contains(&w) {
                out.push(w);
            }
        }
    }
    out
}

impl OracleProfile {
    /// Entries from raw lines: comment/blank lines skipped, stopwords
    /// dropped, duplicates merged.
    pub fn from_lines(target: &[&str], competitors: &[&str], stopwords: &[&str]) -> Self {
        let stop: HashSet<String> = stopwords.iter().filter_map(|s| norm(s)).collect();
        let entries = |lines: &[&str]| {
            let mut seen: Vec<Vec<String>> = Vec::new();
            for line in lines {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let e = words(line, &stop);
                if !e.is_empty() && !seen.contains(&e) {
                    seen.push(e);
                }
            }
            seen
        };
        Self {
            target: entries(target),
            competitors: entries(competitors),
            stopwords: stop,
        }
    }
}

/// Left-to-right scan; after a hit, resume right after the matched run.
pub fn count(doc: &[String], entry: &[String]) -> usize {
    let mut hits = 0;
    let mut pos = 0;
    while pos < doc.len() {
        let rest = &doc[pos..];
        if rest.len() >= entry.len() && rest[..entry.len()] == *entry {
            hits += 1;
            pos += entry.len();
        } else {
            pos += 1;
        }
    }
    hits
}

pub fn mm(doc: &[String], p: &OracleProfile) -> f64 {
    if doc.is_empty() {
        return 0.0;
    }
    let matched: usize = p.target.iter().map(|e| count(doc, e)).sum();
    let comps: usize = p.competitors.iter().map(|e| count(doc, e)).sum();
    let t: HashSet<Vec<String>> = p.target.iter().cloned().collect();
    let mut s: HashSet<Vec<String>> = doc.iter().map(|w| vec![w.clone()]).collect();
    for e in &p.target {
        if e.len() > 1 && count(doc, e) > 0 {
            s.insert(e.clone());
        }
    }
    let mismatch = t.symmetric_difference(&s).count();
    (matched as f64 * mismatch as f64 - comps as f64) / doc.len() as f64
}

pub fn idf(docs: &[Vec<String>], entry: &[String]) -> f64 {
    let n = docs.len() as f64;
    let df = docs.iter().filter(|d| count(d, entry) > 0).count() as f64;
    if df == 0.0 {
        0.0
    } else {
        (n / df).ln()
    }
}

pub fn tfidf(doc: &[String], docs: &[Vec<String>], p: &OracleProfile) -> f64 {
    if doc.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for e in &p.target {
        total += count(doc, e) as f64 * idf(docs, e);
    }
    total / doc.len() as f64
}

/// Positions (1-based) after sorting by score descending, ties by the
/// original index ascending. `engine_ranks[i]` is the native rank of item i.
pub fn order(scores: &[f64], engine_ranks: &[u32]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(engine_ranks[a].cmp(&engine_ranks[b]))
    });
    idx
}

/// Kendall tau by counting every pair.
pub fn tau(b: &[u32]) -> f64 {
    let n = b.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            if b[i] < b[j] {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}
