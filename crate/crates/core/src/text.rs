//! Text pipeline: raw result text to normalized term statistics.
//!
//! Pipeline: whitespace split → Unicode lowercase → strip leading/trailing
//! non-alphanumeric characters → drop empties → drop stopwords → count.
//! No stemming is applied, so every match can be traced back to the text.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A normalized token.
///
/// Always non-empty, lowercase, and starts and ends with an alphanumeric
/// character. Interior punctuation is kept (`www.nasa.gov`, `o'neal`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Term(String);

impl Term {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Term {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Normalize one raw whitespace-free piece of text.
///
/// Returns `None` when nothing alphanumeric survives.
pub fn normalize_token(raw: &str) -> Option<Term> {
    let lower = raw.to_lowercase();
    let trimmed = lower.trim_matches(|c: char| !c.is_alphanumeric());
    if trimmed.is_empty() {
        None
    } else {
        Some(Term(trimmed.to_string()))
    }
}

pub fn tokenize(text: &str) -> Vec<Term> {
    text.split_whitespace().filter_map(normalize_token).collect()
}

/// A stopword list, normalized with the same rules as document text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<Term>);

impl Stopwords {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from raw words; each is normalized, empties are ignored.
    ///
    /// A raw entry that normalizes to several tokens contributes each of them.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(words.into_iter().flat_map(|w| tokenize(w.as_ref())).collect())
    }

    /// Parse the stopwords file grammar: one entry per line, `#` comment
    /// lines and blank lines ignored.
    pub fn parse(content: &str) -> Self {
        Self::from_words(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn contains(&self, term: &Term) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.0.iter()
    }
}

impl FromIterator<Term> for Stopwords {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Per-document tokenization outcome.
///
/// `tokens` keeps the surviving token sequence so that multi-word profile
/// entries can be matched as contiguous runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermStats {
    tokens: Vec<Term>,
    counts: BTreeMap<Term, u64>,
}

impl TermStats {
    pub fn counts(&self) -> &BTreeMap<Term, u64> {
        &self.counts
    }

    pub fn count(&self, term: &Term) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn unique_terms(&self) -> BTreeSet<&Term> {
        self.counts.keys().collect()
    }

    /// Number of tokens that survived stopword removal; the length normalizer.
    pub fn total_tokens(&self) -> u64 {
        self.tokens.len() as u64
    }

    /// Surviving tokens in document order.
    pub fn tokens(&self) -> &[Term] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn build_term_stats(tokens: impl IntoIterator<Item = Term>, stopwords: &Stopwords) -> TermStats {
    let tokens: Vec<Term> = tokens.into_iter().filter(|t| !stopwords.contains(t)).collect();
    let mut counts = BTreeMap::new();
    for t in &tokens {
        *counts.entry(t.clone()).or_insert(0) += 1;
    }
    TermStats { tokens, counts }
}

/// Tokenize and count in one step.
pub fn analyze(text: &str, stopwords: &Stopwords) -> TermStats {
    build_term_stats(tokenize(text), stopwords)
}
