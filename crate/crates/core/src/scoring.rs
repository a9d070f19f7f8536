//! Interestingness functions.
//!
//! Every function composes a relevance signal with an unexpectedness signal
//! computed against a [`DomainProfile`]:
//!
//! * Match-Mismatch: `((match · mismatch) − competitors) / normf`, where
//!   `match` counts target-entry occurrences, `mismatch = |T Δ S|` between the
//!   target entry set and the entries present in the document, `competitors`
//!   counts competitor-entry occurrences and `normf` is the surviving token
//!   count.
//! * Tf-Idf: `Σ_k tf_k · ln(N / df_k) / normf` over target entries, with `N`
//!   and `df_k` taken over the result set being scored.
//!
//! Both return 0 for an empty document.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{DomainProfile, EntrySet, ProfileEntry};
use crate::text::TermStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScorerId {
    #[serde(rename = "mm")]
    MatchMismatch,
    #[serde(rename = "tfidf")]
    TfIdf,
}

impl ScorerId {
    pub const ALL: [ScorerId; 2] = [ScorerId::MatchMismatch, ScorerId::TfIdf];

    pub fn name(self) -> &'static str {
        match self {
            ScorerId::MatchMismatch => "mm",
            ScorerId::TfIdf => "tfidf",
        }
    }

    /// Score a whole result set with this function.
    pub fn score_all(
        self,
        docs: &[TermStats],
        profile: &DomainProfile,
    ) -> Result<Vec<InterestingnessScore>, ScoringError> {
        match self {
            ScorerId::MatchMismatch => MatchMismatch.score_all(docs, profile),
            ScorerId::TfIdf => TfIdf.score_all(docs, profile),
        }
    }
}

impl fmt::Display for ScorerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scorer {given:?}; valid scorers: mm, tfidf")]
pub struct UnknownScorer {
    pub given: String,
}

impl FromStr for ScorerId {
    type Err = UnknownScorer;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mm" => Ok(ScorerId::MatchMismatch),
            "tfidf" => Ok(ScorerId::TfIdf),
            _ => Err(UnknownScorer { given: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("cannot build corpus statistics over an empty result set")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterestingnessScore {
    pub value: f64,
    pub scorer: ScorerId,
}

impl InterestingnessScore {
    fn new(value: f64, scorer: ScorerId) -> Self {
        debug_assert!(value.is_finite(), "non-finite {scorer} score");
        Self { value, scorer }
    }
}

/// Contract for an interestingness function.
///
/// `context` is computed once per result set (e.g. document frequencies) and
/// shared read-only by every per-document `score` call.
pub trait Interestingness: Send + Sync {
    type Context: Send + Sync;

    fn id(&self) -> ScorerId;

    fn context(&self, docs: &[TermStats], profile: &DomainProfile) -> Result<Self::Context, ScoringError>;

    fn score(&self, doc: &TermStats, profile: &DomainProfile, ctx: &Self::Context) -> InterestingnessScore;

    fn score_all(
        &self,
        docs: &[TermStats],
        profile: &DomainProfile,
    ) -> Result<Vec<InterestingnessScore>, ScoringError> {
        let ctx = self.context(docs, profile)?;
        Ok(docs.iter().map(|d| self.score(d, profile, &ctx)).collect())
    }
}

/// Occurrences of one entry in a document. Phrases count contiguous,
/// non-overlapping runs found left to right.
pub fn occurrences(doc: &TermStats, entry: &ProfileEntry) -> u64 {
    let phrase = entry.terms();
    if phrase.len() == 1 {
        return doc.count(&phrase[0]);
    }
    let tokens = doc.tokens();
    let m = phrase.len();
    let mut count = 0;
    let mut i = 0;
    while i + m <= tokens.len() {
        if tokens[i..i + m] == *phrase {
            count += 1;
            i += m;
        } else {
            i += 1;
        }
    }
    count
}

fn occurs(doc: &TermStats, entry: &ProfileEntry) -> bool {
    match entry.terms() {
        [single] => doc.count(single) > 0,
        phrase => doc.tokens().windows(phrase.len()).any(|w| w == phrase),
    }
}

/// Sum of target-entry occurrences in the document.
pub fn match_count(doc: &TermStats, target: &EntrySet) -> u64 {
    target.iter().map(|e| occurrences(doc, e)).sum()
}

/// Sum of competitor-entry occurrences in the document.
pub fn competitor_count(doc: &TermStats, competitors: &EntrySet) -> u64 {
    competitors.iter().map(|e| occurrences(doc, e)).sum()
}

/// `|T Δ S|`, with `S` = the document's unique terms plus every target
/// phrase that occurs in it.
pub fn mismatch_cardinality(doc: &TermStats, target: &EntrySet) -> u64 {
    let mut present_singles = 0u64;
    let mut present_phrases = 0u64;
    for e in target.iter().filter(|e| occurs(doc, e)) {
        if e.is_phrase() {
            present_phrases += 1;
        } else {
            present_singles += 1;
        }
    }
    let t = target.len() as u64;
    let s = doc.counts().len() as u64 + present_phrases;
    let common = present_singles + present_phrases;
    t + s - 2 * common
}

pub fn mm_score(doc: &TermStats, profile: &DomainProfile) -> InterestingnessScore {
    let normf = doc.total_tokens();
    if normf == 0 {
        return InterestingnessScore::new(0.0, ScorerId::MatchMismatch);
    }
    let matched = i128::from(match_count(doc, &profile.target));
    let mismatch = i128::from(mismatch_cardinality(doc, &profile.target));
    let competitors = i128::from(competitor_count(doc, &profile.competitors));
    let numerator = matched * mismatch - competitors;
    InterestingnessScore::new(numerator as f64 / normf as f64, ScorerId::MatchMismatch)
}

/// Result-set statistics for Idf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    n_results: u64,
    doc_freq: BTreeMap<ProfileEntry, u64>,
}

impl CorpusStats {
    pub fn n_results(&self) -> u64 {
        self.n_results
    }

    pub fn doc_freq(&self, entry: &ProfileEntry) -> u64 {
        self.doc_freq.get(entry).copied().unwrap_or(0)
    }
}

pub fn build_corpus_stats(docs: &[TermStats], target: &EntrySet) -> Result<CorpusStats, ScoringError> {
    if docs.is_empty() {
        return Err(ScoringError::EmptyCorpus);
    }
    let doc_freq = target
        .iter()
        .map(|e| (e.clone(), docs.iter().filter(|d| occurs(d, e)).count() as u64))
        .collect();
    Ok(CorpusStats {
        n_results: docs.len() as u64,
        doc_freq,
    })
}

/// Natural-log Idf; an entry found in no document gets 0.
pub fn idf(entry: &ProfileEntry, cs: &CorpusStats) -> f64 {
    let df = cs.doc_freq(entry);
    if df == 0 {
        return 0.0;
    }
    (cs.n_results as f64 / df as f64).ln()
}

pub fn tfidf_score(doc: &TermStats, profile: &DomainProfile, cs: &CorpusStats) -> InterestingnessScore {
    let normf = doc.total_tokens();
    if normf == 0 {
        return InterestingnessScore::new(0.0, ScorerId::TfIdf);
    }
    let weighted: f64 = profile
        .target
        .iter()
        .map(|k| occurrences(doc, k) as f64 * idf(k, cs))
        .sum();
    InterestingnessScore::new(weighted / normf as f64, ScorerId::TfIdf)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MatchMismatch;

impl Interestingness for MatchMismatch {
    type Context = ();

    fn id(&self) -> ScorerId {
        ScorerId::MatchMismatch
    }

    fn context(&self, _docs: &[TermStats], _profile: &DomainProfile) -> Result<(), ScoringError> {
        Ok(())
    }

    fn score(&self, doc: &TermStats, profile: &DomainProfile, _ctx: &()) -> InterestingnessScore {
        mm_score(doc, profile)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TfIdf;

impl Interestingness for TfIdf {
    type Context = CorpusStats;

    fn id(&self) -> ScorerId {
        ScorerId::TfIdf
    }

    fn context(&self, docs: &[TermStats], profile: &DomainProfile) -> Result<CorpusStats, ScoringError> {
        build_corpus_stats(docs, &profile.target)
    }

    fn score(&self, doc: &TermStats, profile: &DomainProfile, ctx: &CorpusStats) -> InterestingnessScore {
        tfidf_score(doc, profile, ctx)
    }
}
