//! Re-ordering of a fetched result set by interestingness.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{DomainProfile, ProfileError};
use crate::scoring::{InterestingnessScore, ScorerId, ScoringError};
use crate::text::{analyze, TermStats};

/// One result as returned by a search backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub id: String,
    /// 1-based native position.
    pub rank: u32,
    pub url: String,
    pub title: String,
    pub snippet: String,
    #[serde(default)]
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResult {
    pub result_id: String,
    pub score: InterestingnessScore,
    pub engine_rank: u32,
    pub new_rank: u32,
}

#[derive(Debug, Error)]
pub enum RerankError {
    #[error("empty result set")]
    EmptyResultSet,
    #[error(transparent)]
    InvalidProfile(#[from] ProfileError),
    #[error("duplicate result id {0:?}")]
    DuplicateId(String),
    #[error("duplicate engine rank {0}")]
    DuplicateRank(u32),
    #[error("engine rank must be positive (result {0:?})")]
    ZeroRank(String),
}

impl From<ScoringError> for RerankError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::EmptyCorpus => RerankError::EmptyResultSet,
        }
    }
}

/// Text that gets scored: title, snippet and body joined by single spaces,
/// empty fields skipped.
pub fn scoring_text(r: &SearchResult) -> String {
    [r.title.as_str(), r.snippet.as_str(), r.body.as_str()]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn check_results(results: &[SearchResult]) -> Result<(), RerankError> {
    if results.is_empty() {
        return Err(RerankError::EmptyResultSet);
    }
    let mut ids = HashSet::with_capacity(results.len());
    let mut ranks = HashSet::with_capacity(results.len());
    for r in results {
        if r.rank == 0 {
            return Err(RerankError::ZeroRank(r.id.clone()));
        }
        if !ids.insert(r.id.as_str()) {
            return Err(RerankError::DuplicateId(r.id.clone()));
        }
        if !ranks.insert(r.rank) {
            return Err(RerankError::DuplicateRank(r.rank));
        }
    }
    Ok(())
}

/// Score every result and sort by score descending, breaking ties by
/// ascending engine rank. The output is a permutation of the input ids with
/// `new_rank` running 1..=n.
pub fn rerank(
    results: &[SearchResult],
    profile: &DomainProfile,
    scorer: ScorerId,
) -> Result<Vec<ScoredResult>, RerankError> {
    check_results(results)?;
    profile.ensure_valid()?;

    let docs: Vec<TermStats> = results
        .par_iter()
        .map(|r| analyze(&scoring_text(r), &profile.stopwords))
        .collect();
    let scores = scorer.score_all(&docs, profile)?;

    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .value
            .total_cmp(&scores[a].value)
            .then_with(|| results[a].rank.cmp(&results[b].rank))
    });

    Ok(order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| ScoredResult {
            result_id: results[i].id.clone(),
            score: scores[i],
            engine_rank: results[i].rank,
            new_rank: pos as u32 + 1,
        })
        .collect())
}

/// Ordering used by `rerank`, exposed for callers that merge scored lists.
pub fn by_score_then_rank(a: &ScoredResult, b: &ScoredResult) -> Ordering {
    b.score
        .value
        .total_cmp(&a.score.value)
        .then_with(|| a.engine_rank.cmp(&b.engine_rank))
}
