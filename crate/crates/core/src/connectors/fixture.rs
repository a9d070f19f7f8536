//! Line-delimited JSON fixture corpora.
//!
//! Line 1 is a header `{"query", "engine", "recorded_at"}`; every following
//! line is one result `{"id", "rank", "url", "title", "snippet", "body"}` in
//! engine order.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ConnectorError;
use crate::rerank::SearchResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureHeader {
    pub query: String,
    pub engine: String,
    pub recorded_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureCorpus {
    pub header: FixtureHeader,
    pub results: Vec<SearchResult>,
}

impl FixtureCorpus {
    /// Whether `query` asks for what this corpus recorded. Comparison ignores
    /// case and runs of whitespace.
    pub fn answers(&self, query: &str) -> bool {
        canonical_query(&self.header.query) == canonical_query(query)
    }
}

fn canonical_query(q: &str) -> String {
    q.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_fixture(content: &str, origin: &Path) -> Result<FixtureCorpus, ConnectorError> {
    let malformed = |line: usize, detail: String| ConnectorError::MalformedFixture {
        path: origin.to_path_buf(),
        line,
        detail,
    };
    let mut lines = content.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| malformed(1, "missing header line".into()))?;
    let header: FixtureHeader = serde_json::from_str(first).map_err(|e| malformed(1, e.to_string()))?;
    let mut results = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let r: SearchResult = serde_json::from_str(line).map_err(|e| malformed(idx + 1, e.to_string()))?;
        results.push(r);
    }
    Ok(FixtureCorpus { header, results })
}

pub fn read_fixture(path: &Path) -> Result<FixtureCorpus, ConnectorError> {
    let content = fs::read_to_string(path).map_err(|source| ConnectorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_fixture(&content, path)
}

pub fn render_fixture(header: &FixtureHeader, results: &[SearchResult]) -> String {
    let mut out = serde_json::to_string(header).expect("header serializes");
    out.push('\n');
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("result serializes"));
        out.push('\n');
    }
    out
}

/// Write a corpus, replacing any existing file atomically.
pub fn write_fixture(path: &Path, header: &FixtureHeader, results: &[SearchResult]) -> Result<(), ConnectorError> {
    let io_err = |source: io::Error| ConnectorError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(render_fixture(header, results).as_bytes())
        .map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Freeze a result list under `query`, stamped with the current UTC time.
pub fn record_fixture(results: &[SearchResult], query: &str, engine: &str, path: &Path) -> Result<(), ConnectorError> {
    let header = FixtureHeader {
        query: query.to_string(),
        engine: engine.to_string(),
        recorded_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    write_fixture(path, &header, results)
}
