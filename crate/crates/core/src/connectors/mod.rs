//! Pluggable search backends.
//!
//! A backend is configured, not coded: either a recorded fixture corpus or a
//! generic HTTP template that knows where to find results in a JSON response.
//! The connector config file is a JSON object mapping connector names to
//! their parameters:
//!
//! ```json
//! {
//!   "stars": { "kind": "fixture", "path": "fixtures/stars_mars.jsonl" },
//!   "searx": {
//!     "kind": "http_template",
//!     "url_template": "https://searx.example/search?q={query}&format=json",
//!     "results_path": "results",
//!     "url_field": "url",
//!     "title_field": "title",
//!     "snippet_field": "content"
//!   }
//! }
//! ```

mod extract;
pub mod fixture;
mod http;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use extract::extract_text;
pub use fixture::{read_fixture, record_fixture, FixtureCorpus, FixtureHeader};
pub use http::HttpTemplate;

use crate::rerank::SearchResult;

pub const DEFAULT_MAX_RESULTS: usize = 100;

#[derive(Debug, Error)]
pub enum ConnectorError {
    #[error("query must not be empty")]
    EmptyQuery,
    #[error("unknown connector {0:?}")]
    UnknownConnector(String),
    #[error("invalid connector {name:?}: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("connector {connector:?} unavailable: {cause}")]
    Unavailable { connector: String, cause: String },
    #[error("malformed response from {connector:?}: missing or invalid field {path}")]
    MalformedResponse { connector: String, path: String },
    #[error("{path}:{line}: malformed fixture: {detail}")]
    MalformedFixture { path: PathBuf, line: usize, detail: String },
    #[error("fixture {connector:?} recorded query {recorded:?}, not {given:?}")]
    QueryNotRecorded {
        connector: String,
        recorded: String,
        given: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConnectorKind {
    Fixture { path: PathBuf },
    HttpTemplate(HttpTemplate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectorSpec {
    pub name: String,
    pub kind: ConnectorKind,
}

impl ConnectorSpec {
    pub fn fixture(name: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            kind: ConnectorKind::Fixture { path: path.into() },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ConnectorKind::Fixture { .. } => "fixture",
            ConnectorKind::HttpTemplate(_) => "http_template",
        }
    }

    pub fn validate(&self) -> Result<(), ConnectorError> {
        let invalid = |reason: String| ConnectorError::InvalidSpec {
            name: self.name.clone(),
            reason,
        };
        match &self.kind {
            ConnectorKind::Fixture { path } => {
                fs::metadata(path)
                    .ok()
                    .filter(|m| m.is_file())
                    .ok_or_else(|| invalid(format!("fixture path {} is not a readable file", path.display())))?;
            }
            ConnectorKind::HttpTemplate(t) => t.validate().map_err(invalid)?,
        }
        Ok(())
    }

    /// Label stored in fixture headers and reports.
    pub fn engine_label(&self) -> String {
        match &self.kind {
            ConnectorKind::HttpTemplate(t) => t.engine.clone().unwrap_or_else(|| self.name.clone()),
            ConnectorKind::Fixture { .. } => self.name.clone(),
        }
    }
}

/// How much to fetch.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchPolicy {
    pub max_results: usize,
    pub fetch_bodies: bool,
    pub timeout: Duration,
    /// Maximum requests per second to any one host.
    pub rate_limit: f64,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self {
            max_results: DEFAULT_MAX_RESULTS,
            fetch_bodies: false,
            timeout: Duration::from_secs(10),
            rate_limit: 2.0,
        }
    }
}

impl FetchPolicy {
    pub fn with_max_results(mut self, n: usize) -> Self {
        self.max_results = n;
        self
    }

    pub fn with_bodies(mut self, fetch: bool) -> Self {
        self.fetch_bodies = fetch;
        self
    }
}

/// Stable result id: hash of the URL with scheme, fragment, default port and
/// trailing slash normalized away, so `http://Example.org/a/` and
/// `https://example.org/a#top` share one id.
pub fn result_id(raw_url: &str) -> String {
    let key = match url::Url::parse(raw_url.trim()) {
        Ok(u) if u.host_str().is_some() => {
            let mut key = u.host_str().unwrap_or_default().to_string();
            if let Some(port) = u.port() {
                key.push_str(&format!(":{port}"));
            }
            key.push_str(u.path().trim_end_matches('/'));
            if let Some(q) = u.query() {
                key.push('?');
                key.push_str(q);
            }
            key
        }
        _ => raw_url.trim().to_lowercase(),
    };
    Sha256::digest(key.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Spaces requests to the same host by `1 / rate` seconds.
#[derive(Debug, Default)]
pub struct HostRateLimiter {
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl HostRateLimiter {
    pub async fn acquire(&self, host: &str, rate: f64) {
        if !(rate.is_finite() && rate > 0.0) {
            return;
        }
        let interval = Duration::from_secs_f64(1.0 / rate);
        let wait = {
            let mut slots = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = slots.get(host).copied().filter(|s| *s > now).unwrap_or(now);
            slots.insert(host.to_string(), slot + interval);
            slot - now
        };
        if !wait.is_zero() {
            tokio::time::sleep(wait).await;
        }
    }
}

/// The configured connectors plus shared HTTP state.
#[derive(Debug, Clone)]
pub struct ConnectorRegistry {
    specs: BTreeMap<String, ConnectorSpec>,
    client: reqwest::Client,
    limiter: Arc<HostRateLimiter>,
}

impl Default for ConnectorRegistry {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl ConnectorRegistry {
    pub fn new(specs: impl IntoIterator<Item = ConnectorSpec>) -> Self {
        Self {
            specs: specs.into_iter().map(|s| (s.name.clone(), s)).collect(),
            client: reqwest::Client::builder()
                .user_agent(concat!("interest/", env!("CARGO_PKG_VERSION")))
                .build()
                .unwrap_or_default(),
            limiter: Arc::new(HostRateLimiter::default()),
        }
    }

    /// Parse a connector config. Relative fixture paths resolve against
    /// `base_dir`.
    pub fn from_config_str(content: &str, base_dir: &Path) -> Result<Self, ConnectorError> {
        let raw: BTreeMap<String, ConnectorKind> =
            serde_json::from_str(content).map_err(|e| ConnectorError::InvalidSpec {
                name: "<config>".into(),
                reason: e.to_string(),
            })?;
        let specs = raw.into_iter().map(|(name, mut kind)| {
            if let ConnectorKind::Fixture { path } = &mut kind {
                if path.is_relative() {
                    *path = base_dir.join(&*path);
                }
            }
            ConnectorSpec { name, kind }
        });
        let registry = Self::new(specs);
        for spec in registry.specs.values() {
            if let ConnectorKind::HttpTemplate(t) = &spec.kind {
                t.validate().map_err(|reason| ConnectorError::InvalidSpec {
                    name: spec.name.clone(),
                    reason,
                })?;
            }
        }
        Ok(registry)
    }

    pub fn from_config_file(path: &Path) -> Result<Self, ConnectorError> {
        let content = fs::read_to_string(path).map_err(|source| ConnectorError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_config_str(&content, base)
    }

    pub fn insert(&mut self, spec: ConnectorSpec) {
        self.specs.insert(spec.name.clone(), spec);
    }

    pub fn get(&self, name: &str) -> Result<&ConnectorSpec, ConnectorError> {
        self.specs
            .get(name)
            .ok_or_else(|| ConnectorError::UnknownConnector(name.to_string()))
    }

    pub fn specs(&self) -> impl Iterator<Item = &ConnectorSpec> {
        self.specs.values()
    }

    pub async fn search(
        &self,
        name: &str,
        query: &str,
        policy: &FetchPolicy,
    ) -> Result<Vec<SearchResult>, ConnectorError> {
        let spec = self.get(name)?;
        self.search_spec(spec, query, policy).await
    }

    pub async fn search_spec(
        &self,
        spec: &ConnectorSpec,
        query: &str,
        policy: &FetchPolicy,
    ) -> Result<Vec<SearchResult>, ConnectorError> {
        if query.trim().is_empty() {
            return Err(ConnectorError::EmptyQuery);
        }
        spec.validate()?;
        match &spec.kind {
            ConnectorKind::Fixture { path } => replay_fixture(&spec.name, path, query, policy),
            ConnectorKind::HttpTemplate(t) => {
                http::search(t, &spec.name, query, policy, &self.client, &self.limiter).await
            }
        }
    }
}

/// Search through a single connector without a shared registry.
pub async fn search(
    spec: &ConnectorSpec,
    query: &str,
    policy: &FetchPolicy,
) -> Result<Vec<SearchResult>, ConnectorError> {
    ConnectorRegistry::default().search_spec(spec, query, policy).await
}

/// Replay a recorded corpus: recorded order, truncated to `max_results`,
/// bodies kept only when `fetch_bodies` is set.
pub fn replay_fixture(
    name: &str,
    path: &Path,
    query: &str,
    policy: &FetchPolicy,
) -> Result<Vec<SearchResult>, ConnectorError> {
    if query.trim().is_empty() {
        return Err(ConnectorError::EmptyQuery);
    }
    let corpus = read_fixture(path)?;
    if !corpus.answers(query) {
        return Err(ConnectorError::QueryNotRecorded {
            connector: name.to_string(),
            recorded: corpus.header.query,
            given: query.to_string(),
        });
    }
    let mut results = corpus.results;
    results.truncate(policy.max_results);
    if !policy.fetch_bodies {
        for r in &mut results {
            r.body.clear();
        }
    }
    Ok(results)
}
