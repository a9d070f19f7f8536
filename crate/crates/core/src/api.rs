//! Request/response types and the fetch → score → report path shared by the
//! HTTP service and the CLI. Both front-ends serialize through the helpers
//! here so identical inputs produce byte-identical reports.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::analysis::{
    compare_orders, AnalysisError, ComparisonSummary, RankComparison, RankPairing, DEFAULT_OUTLIER_FACTOR,
};
use crate::connectors::{record_fixture, ConnectorError, ConnectorRegistry, FetchPolicy, DEFAULT_MAX_RESULTS};
use crate::profile::{parse_profile_file, DomainProfile, EntrySet, ProfileError, ProfileStore, Violation};
use crate::rerank::{rerank, RerankError, ScoredResult, SearchResult};
use crate::scoring::ScorerId;

fn default_max_results() -> usize {
    DEFAULT_MAX_RESULTS
}

fn scorer_from_str<'de, D: Deserializer<'de>>(d: D) -> Result<ScorerId, D::Error> {
    let raw = String::deserialize(d)?;
    raw.parse().map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankRequest {
    pub connector: String,
    pub query: String,
    pub profile: String,
    #[serde(deserialize_with = "scorer_from_str")]
    pub scorer: ScorerId,
    #[serde(default = "default_max_results")]
    pub max_results: usize,
    #[serde(default)]
    pub fetch_bodies: bool,
    /// Save the fetched results as a fixture corpus (needs a record dir).
    #[serde(default)]
    pub record: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRequest {
    pub connector: String,
    pub query: String,
    pub profile: String,
    #[serde(deserialize_with = "scorer_from_str")]
    pub scorer_a: ScorerId,
    #[serde(deserialize_with = "scorer_from_str")]
    pub scorer_b: ScorerId,
    #[serde(default = "default_max_results")]
    pub max_results: usize,
    #[serde(default)]
    pub fetch_bodies: bool,
    /// Compare only the first `top_k` of order A.
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub outlier_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringMode {
    SnippetOnly,
    FullBody,
}

impl ScoringMode {
    pub fn of(results: &[SearchResult]) -> Self {
        if results.iter().any(|r| !r.body.is_empty()) {
            ScoringMode::FullBody
        } else {
            ScoringMode::SnippetOnly
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub new_rank: u32,
    pub engine_rank: u32,
    pub score: f64,
    pub id: String,
    pub url: String,
    pub title: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResponse {
    pub query: String,
    pub connector: String,
    pub profile: String,
    pub scorer: ScorerId,
    pub scoring_mode: ScoringMode,
    pub results: Vec<ResultRow>,
}

impl RerankResponse {
    pub fn build(
        query: &str,
        connector: &str,
        profile: &str,
        scorer: ScorerId,
        results: &[SearchResult],
        scored: &[ScoredResult],
    ) -> Self {
        let by_id: std::collections::HashMap<&str, &SearchResult> =
            results.iter().map(|r| (r.id.as_str(), r)).collect();
        let mut rows: Vec<ResultRow> = scored
            .iter()
            .map(|s| {
                let r = by_id[s.result_id.as_str()];
                ResultRow {
                    new_rank: s.new_rank,
                    engine_rank: s.engine_rank,
                    score: s.score.value,
                    id: r.id.clone(),
                    url: r.url.clone(),
                    title: r.title.clone(),
                    snippet: r.snippet.clone(),
                }
            })
            .collect();
        rows.sort_by_key(|r| r.new_rank);
        Self {
            query: query.to_string(),
            connector: connector.to_string(),
            profile: profile.to_string(),
            scorer,
            scoring_mode: ScoringMode::of(results),
            results: rows,
        }
    }

    /// `new_rank,engine_rank,score,id,url,title,snippet`
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["new_rank", "engine_rank", "score", "id", "url", "title", "snippet"])
            .expect("in-memory csv");
        for r in &self.results {
            w.write_record([
                r.new_rank.to_string(),
                r.engine_rank.to_string(),
                r.score.to_string(),
                r.id.clone(),
                r.url.clone(),
                r.title.clone(),
                r.snippet.clone(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub summary: ComparisonSummary,
    pub pairing: RankPairing,
    pub order_a: RerankResponse,
    pub order_b: RerankResponse,
}

impl CompareResponse {
    pub fn comparison(&self) -> RankComparison {
        RankComparison {
            pairing: self.pairing.clone(),
            mean_displacement: self.summary.mean_displacement,
            kendall_tau: self.summary.kendall_tau,
            footrule: self.summary.footrule,
            outliers: self.summary.outlier_indices.clone(),
        }
    }
}

/// Pretty JSON with a trailing newline; the one serializer for reports.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

/// A profile as exchanged over the API; entries are space-joined phrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub name: String,
    pub target: Vec<String>,
    #[serde(default)]
    pub competitors: Vec<String>,
}

impl ProfileDoc {
    pub fn from_profile(p: &DomainProfile) -> Self {
        let render = |s: &EntrySet| s.iter().map(ToString::to_string).collect();
        Self {
            name: p.name.clone(),
            target: render(&p.target),
            competitors: render(&p.competitors),
        }
    }
}

/// Body of a profile PUT or validate call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileUpdate {
    #[serde(default)]
    pub target: Vec<String>,
    #[serde(default)]
    pub competitors: Vec<String>,
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Connector(#[from] ConnectorError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    BadRequest(String),
}

impl AppError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            AppError::Profile(e) => profile_code(e),
            AppError::Connector(e) => match e {
                ConnectorError::EmptyQuery => "EMPTY_QUERY",
                ConnectorError::UnknownConnector(_) => "UNKNOWN_CONNECTOR",
                ConnectorError::InvalidSpec { .. } => "CONNECTOR_MISCONFIGURED",
                ConnectorError::Unavailable { .. } => "CONNECTOR_UNAVAILABLE",
                ConnectorError::MalformedResponse { .. } => "MALFORMED_RESPONSE",
                ConnectorError::MalformedFixture { .. } => "MALFORMED_FIXTURE",
                ConnectorError::QueryNotRecorded { .. } => "QUERY_NOT_RECORDED",
                ConnectorError::Io { .. } => "CONNECTOR_IO",
            },
            AppError::Rerank(e) => match e {
                RerankError::EmptyResultSet => "EMPTY_RESULT_SET",
                RerankError::InvalidProfile(p) => profile_code(p),
                RerankError::DuplicateId(_) | RerankError::DuplicateRank(_) | RerankError::ZeroRank(_) => {
                    "INCONSISTENT_RESULTS"
                }
            },
            AppError::Analysis(e) => match e {
                AnalysisError::DegeneratePairing { .. } => "DEGENERATE_PAIRING",
                AnalysisError::IdMismatch(_) => "ID_MISMATCH",
                AnalysisError::InvalidPairing(_) => "INVALID_PAIRING",
                AnalysisError::InvalidFactor(_) => "INVALID_OUTLIER_FACTOR",
            },
            AppError::BadRequest(_) => "BAD_REQUEST",
        }
    }

    pub fn status(&self) -> u16 {
        match self.code() {
            "EMPTY_QUERY" | "BAD_REQUEST" | "INVALID_PROFILE_NAME" | "INVALID_OUTLIER_FACTOR" => 400,
            "PROFILE_NOT_FOUND" | "UNKNOWN_CONNECTOR" | "QUERY_NOT_RECORDED" => 404,
            "INVALID_PROFILE" | "MALFORMED_LINE" | "EMPTY_RESULT_SET" | "DEGENERATE_PAIRING" => 422,
            "CONNECTOR_UNAVAILABLE"
            | "MALFORMED_RESPONSE"
            | "MALFORMED_FIXTURE"
            | "CONNECTOR_IO"
            | "INCONSISTENT_RESULTS" => 502,
            _ => 500,
        }
    }

    /// 0 success, 1 validation, 2 usage, 3 I/O, 4 connector.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Profile(ProfileError::Io { .. } | ProfileError::NotFound(_)) => 3,
            AppError::Connector(ConnectorError::Io { .. }) => 3,
            AppError::Connector(ConnectorError::EmptyQuery | ConnectorError::UnknownConnector(_)) => 2,
            AppError::Connector(_) => 4,
            AppError::Rerank(
                RerankError::DuplicateId(_) | RerankError::DuplicateRank(_) | RerankError::ZeroRank(_),
            ) => 4,
            AppError::BadRequest(_) | AppError::Profile(ProfileError::InvalidName(_)) => 2,
            AppError::Analysis(AnalysisError::InvalidFactor(_)) => 2,
            _ => 1,
        }
    }

    /// Profile violations carried by this error, if any.
    pub fn violations(&self) -> Option<&[Violation]> {
        match self {
            AppError::Profile(ProfileError::Invalid { violations, .. })
            | AppError::Rerank(RerankError::InvalidProfile(ProfileError::Invalid { violations, .. })) => {
                Some(violations)
            }
            _ => None,
        }
    }
}

fn profile_code(e: &ProfileError) -> &'static str {
    match e {
        ProfileError::NotFound(_) => "PROFILE_NOT_FOUND",
        ProfileError::InvalidName(_) => "INVALID_PROFILE_NAME",
        ProfileError::Invalid { .. } => "INVALID_PROFILE",
        ProfileError::MalformedLine { .. } | ProfileError::Parse { .. } => "MALFORMED_LINE",
        ProfileError::Io { .. } => "PROFILE_IO",
    }
}

/// Profile store, connectors and optional fixture recording in one place.
#[derive(Debug, Clone)]
pub struct Engine {
    profiles: Arc<ProfileStore>,
    connectors: ConnectorRegistry,
    record_dir: Option<PathBuf>,
}

impl Engine {
    pub fn new(profiles: ProfileStore, connectors: ConnectorRegistry) -> Self {
        Self {
            profiles: Arc::new(profiles),
            connectors,
            record_dir: None,
        }
    }

    pub fn with_record_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.record_dir = Some(dir.into());
        self
    }

    pub fn profiles(&self) -> &ProfileStore {
        &self.profiles
    }

    pub fn connectors(&self) -> &ConnectorRegistry {
        &self.connectors
    }

    fn policy(max_results: usize, fetch_bodies: bool) -> Result<FetchPolicy, AppError> {
        if max_results == 0 {
            return Err(AppError::BadRequest("max_results must be at least 1".into()));
        }
        Ok(FetchPolicy::default()
            .with_max_results(max_results)
            .with_bodies(fetch_bodies))
    }

    async fn fetch(&self, connector: &str, query: &str, policy: &FetchPolicy) -> Result<Vec<SearchResult>, AppError> {
        if query.trim().is_empty() {
            return Err(ConnectorError::EmptyQuery.into());
        }
        Ok(self.connectors.search(connector, query, policy).await?)
    }

    pub async fn rerank(&self, req: &RerankRequest) -> Result<RerankResponse, AppError> {
        let policy = Self::policy(req.max_results, req.fetch_bodies)?;
        if req.record && self.record_dir.is_none() {
            return Err(AppError::BadRequest(
                "fixture recording is not enabled on this server".into(),
            ));
        }
        let profile = self.profiles.load(&req.profile)?;
        let results = self.fetch(&req.connector, &req.query, &policy).await?;
        if req.record {
            self.record(&req.connector, &req.query, &results)?;
        }
        rerank_results(&req.query, &req.connector, &profile, req.scorer, &results)
    }

    pub async fn compare(&self, req: &CompareRequest) -> Result<CompareResponse, AppError> {
        let policy = Self::policy(req.max_results, req.fetch_bodies)?;
        let profile = self.profiles.load(&req.profile)?;
        let results = self.fetch(&req.connector, &req.query, &policy).await?;
        compare_results(
            &req.query,
            &req.connector,
            &profile,
            (req.scorer_a, req.scorer_b),
            &results,
            req.top_k,
            req.outlier_factor.unwrap_or(DEFAULT_OUTLIER_FACTOR),
        )
    }

    fn record(&self, connector: &str, query: &str, results: &[SearchResult]) -> Result<PathBuf, AppError> {
        let dir = self.record_dir.as_deref().unwrap_or_else(|| Path::new("."));
        std::fs::create_dir_all(dir).map_err(|source| ConnectorError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let slug: String = query
            .chars()
            .map(|c| {
                if c.is_alphanumeric() {
                    c.to_ascii_lowercase()
                } else {
                    '_'
                }
            })
            .take(48)
            .collect();
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%3fZ");
        let path = dir.join(format!("{connector}-{slug}-{stamp}.jsonl"));
        let engine = self.connectors.get(connector)?.engine_label();
        record_fixture(results, query, &engine, &path)?;
        Ok(path)
    }

    pub fn profile_names(&self) -> Result<Vec<String>, AppError> {
        Ok(self.profiles.list()?)
    }

    pub fn get_profile(&self, name: &str) -> Result<ProfileDoc, AppError> {
        Ok(ProfileDoc::from_profile(&self.profiles.load(name)?))
    }

    /// Parse an update into a profile without persisting it.
    pub fn parse_update(&self, name: &str, update: &ProfileUpdate) -> Result<DomainProfile, AppError> {
        crate::profile::check_profile_name(name)?;
        let stopwords = self.profiles.stopwords()?;
        let target = parse_profile_file(&update.target.join("\n"), &stopwords)?;
        let competitors = parse_profile_file(&update.competitors.join("\n"), &stopwords)?;
        Ok(DomainProfile::new(name, target, competitors, stopwords))
    }

    pub fn put_profile(&self, name: &str, update: &ProfileUpdate) -> Result<ProfileDoc, AppError> {
        let profile = self.parse_update(name, update)?;
        self.profiles.save(&profile)?;
        Ok(ProfileDoc::from_profile(&profile))
    }
}

/// Score and package an already-fetched result set.
pub fn rerank_results(
    query: &str,
    connector: &str,
    profile: &DomainProfile,
    scorer: ScorerId,
    results: &[SearchResult],
) -> Result<RerankResponse, AppError> {
    let scored = rerank(results, profile, scorer)?;
    Ok(RerankResponse::build(
        query,
        connector,
        &profile.name,
        scorer,
        results,
        &scored,
    ))
}

/// Run both scorers over one result set and compare their orders.
pub fn compare_results(
    query: &str,
    connector: &str,
    profile: &DomainProfile,
    (scorer_a, scorer_b): (ScorerId, ScorerId),
    results: &[SearchResult],
    top_k: Option<usize>,
    outlier_factor: f64,
) -> Result<CompareResponse, AppError> {
    if top_k == Some(0) {
        return Err(AppError::BadRequest("top_k must be at least 1".into()));
    }
    let a = rerank(results, profile, scorer_a)?;
    let b = rerank(results, profile, scorer_b)?;
    let cmp = compare_orders(&a, &b, top_k, outlier_factor)?;
    Ok(CompareResponse {
        summary: cmp.summary(),
        pairing: cmp.pairing,
        order_a: RerankResponse::build(query, connector, &profile.name, scorer_a, results, &a),
        order_b: RerankResponse::build(query, connector, &profile.name, scorer_b, results, &b),
    })
}
