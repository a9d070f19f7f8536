use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{extract_text, result_id, ConnectorError, FetchPolicy, HostRateLimiter};
use crate::rerank::SearchResult;

const BODY_FETCH_CONCURRENCY: usize = 8;

/// A JSON search API described by configuration.
///
/// Field paths are dot-separated object keys, with numeric segments indexing
/// arrays (`data.items`, `results.0.url`). `url_field`, `title_field` and
/// `snippet_field` are relative to one element of the results array.
/// `{query}` (required) and `{count}` in the template are substituted, and
/// when `credential_env` is set its value fills `{credential}` and/or the
/// `credential_header` header. Credentials never live in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpTemplate {
    pub url_template: String,
    pub results_path: String,
    pub url_field: String,
    pub title_field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_header: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    /// Requests per second to the API host; falls back to the fetch policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_limit: Option<f64>,
}

impl HttpTemplate {
    pub fn validate(&self) -> Result<(), String> {
        if !self.url_template.contains("{query}") {
            return Err("url_template must contain a {query} placeholder".into());
        }
        if self.url_template.contains("{credential}") && self.credential_env.is_none() {
            return Err("url_template uses {credential} but credential_env is not set".into());
        }
        if self.credential_header.is_some() && self.credential_env.is_none() {
            return Err("credential_header requires credential_env".into());
        }
        Ok(())
    }
}

pub(crate) fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.')
        .filter(|s| !s.is_empty())
        .try_fold(root, |v, seg| match v {
            Value::Object(m) => m.get(seg),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get(i)),
            _ => None,
        })
}

fn text_field(item: &Value, field: &str) -> Option<String> {
    match lookup(item, field)? {
        Value::String(s) => Some(s.clone()),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

fn encode(s: &str) -> String {
    url::form_urlencoded::byte_serialize(s.as_bytes()).collect()
}

fn host_of(raw: &str) -> String {
    url::Url::parse(raw)
        .ok()
        .and_then(|u| u.host_str().map(str::to_string))
        .unwrap_or_default()
}

/// Map a JSON response onto results: arrival order, capped, deduplicated
/// by result id, ranks renumbered 1..=n.
pub(crate) fn parse_response(
    t: &HttpTemplate,
    connector: &str,
    body: &Value,
    max_results: usize,
) -> Result<Vec<SearchResult>, ConnectorError> {
    let malformed = |path: String| ConnectorError::MalformedResponse {
        connector: connector.to_string(),
        path,
    };
    let items = lookup(body, &t.results_path)
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(t.results_path.clone()))?;

    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if out.len() >= max_results {
            break;
        }
        let field_path = |f: &str| format!("{}.{i}.{f}", t.results_path);
        let url = text_field(item, &t.url_field).ok_or_else(|| malformed(field_path(&t.url_field)))?;
        let title = text_field(item, &t.title_field).ok_or_else(|| malformed(field_path(&t.title_field)))?;
        let snippet = match &t.snippet_field {
            Some(f) => text_field(item, f).unwrap_or_default(),
            None => String::new(),
        };
        let id = result_id(&url);
        if !seen.insert(id.clone()) {
            continue;
        }
        out.push(SearchResult {
            id,
            rank: out.len() as u32 + 1,
            url,
            title: extract_text(&title),
            snippet: extract_text(&snippet),
            body: String::new(),
        });
    }
    Ok(out)
}

pub(crate) async fn search(
    t: &HttpTemplate,
    connector: &str,
    query: &str,
    policy: &FetchPolicy,
    client: &reqwest::Client,
    limiter: &HostRateLimiter,
) -> Result<Vec<SearchResult>, ConnectorError> {
    let unavailable = |cause: String| ConnectorError::Unavailable {
        connector: connector.to_string(),
        cause,
    };

    let credential = match &t.credential_env {
        Some(var) => {
            Some(std::env::var(var).map_err(|_| unavailable(format!("credential variable {var} is not set")))?)
        }
        None => None,
    };
    let mut url = t
        .url_template
        .replace("{query}", &encode(query))
        .replace("{count}", &policy.max_results.to_string());
    if let Some(c) = &credential {
        url = url.replace("{credential}", &encode(c));
    }

    let mut req = client.get(&url).timeout(policy.timeout);
    if let (Some(header), Some(c)) = (&t.credential_header, &credential) {
        req = req.header(header.as_str(), c.as_str());
    }
    limiter
        .acquire(&host_of(&url), t.rate_limit.unwrap_or(policy.rate_limit))
        .await;
    let resp = req.send().await.map_err(|e| unavailable(e.to_string()))?;
    let status = resp.status();
    if !status.is_success() {
        return Err(unavailable(format!("HTTP {status}")));
    }
    let body: Value = resp.json().await.map_err(|_| ConnectorError::MalformedResponse {
        connector: connector.to_string(),
        path: "$".into(),
    })?;

    let mut results = parse_response(t, connector, &body, policy.max_results)?;
    if policy.fetch_bodies {
        fetch_bodies(&mut results, policy, client, limiter).await;
    }
    Ok(results)
}

/// Best effort: a page that cannot be fetched keeps an empty body.
async fn fetch_bodies(
    results: &mut [SearchResult],
    policy: &FetchPolicy,
    client: &reqwest::Client,
    limiter: &HostRateLimiter,
) {
    let urls: Vec<(usize, String)> = results.iter().map(|r| r.url.clone()).enumerate().collect();
    let bodies: Vec<(usize, String)> = stream::iter(urls)
        .map(|(i, url)| async move {
            limiter.acquire(&host_of(&url), policy.rate_limit).await;
            (i, fetch_page_text(client, &url, policy).await.unwrap_or_default())
        })
        .buffer_unordered(BODY_FETCH_CONCURRENCY)
        .collect()
        .await;
    for (i, body) in bodies {
        results[i].body = body;
    }
}

async fn fetch_page_text(client: &reqwest::Client, url: &str, policy: &FetchPolicy) -> Option<String> {
    let resp = client.get(url).timeout(policy.timeout).send().await.ok()?;
    if !resp.status().is_success() {
        return None;
    }
    let is_html = resp
        .headers()
        .get(reqwest::header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_none_or(|ct| ct.contains("html"));
    let text = resp.text().await.ok()?;
    Some(if is_html {
        extract_text(&text)
    } else {
        text.split_whitespace().collect::<Vec<_>>().join(" ")
    })
}
