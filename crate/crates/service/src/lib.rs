//! JSON-over-HTTP facade.
//!
//! | method | path                             | body                 |
//! |--------|----------------------------------|----------------------|
//! | GET    | `/health`                        |                      |
//! | GET    | `/api/connectors`                |                      |
//! | POST   | `/api/rerank`                    | `RerankRequest`      |
//! | POST   | `/api/compare`                   | `CompareRequest`     |
//! | GET    | `/api/profiles`                  |                      |
//! | GET    | `/api/profiles/{name}`           |                      |
//! | PUT    | `/api/profiles/{name}`           | `ProfileUpdate`      |
//! | POST   | `/api/profiles/{name}/validate`  | `ProfileUpdate`      |
//!
//! Errors are `{"code": "...", "message": "...", "violations"?: [...]}` with
//! a stable `code`.

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use interest_core::api::{to_json_bytes, AppError, CompareRequest, Engine, ProfileUpdate, RerankRequest};
use interest_core::connectors::{ConnectorError, ConnectorRegistry};
use interest_core::profile::{ProfileStore, Violation};
use interest_core::scoring::ScorerId;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    violations: Option<&'a [Violation]>,
}

/// An error rendered as a JSON response.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    violations: Option<Vec<Violation>>,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
            violations: None,
        }
    }
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        Self {
            status: StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
            code: e.code(),
            message: e.to_string(),
            violations: e.violations().map(<[Violation]>::to_vec),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: self.message,
            violations: self.violations.as_deref(),
        };
        (self.status, json_bytes(&body)).into_response()
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], to_json_bytes(value)).into_response()
}

/// Parse a JSON body, reporting unknown scorer names with their own code.
fn parse_body<T: DeserializeOwned>(body: &[u8], scorer_fields: &[&str]) -> Result<T, ApiError> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request("BAD_REQUEST", format!("invalid JSON: {e}")))?;
    for field in scorer_fields {
        if let Some(Value::String(name)) = value.get(field) {
            name.parse::<ScorerId>()
                .map_err(|e| ApiError::bad_request("UNKNOWN_SCORER", e.to_string()))?;
        }
    }
    serde_json::from_value(value).map_err(|e| ApiError::bad_request("BAD_REQUEST", e.to_string()))
}

async fn health() -> Response {
    json_bytes(&json!({"status": "ok"}))
}

async fn connectors(State(engine): State<Engine>) -> Response {
    let list: Vec<Value> = engine
        .connectors()
        .specs()
        .map(|s| json!({"name": s.name, "kind": s.kind_name(), "engine": s.engine_label()}))
        .collect();
    json_bytes(&list)
}

async fn rerank(State(engine): State<Engine>, body: Bytes) -> Result<Response, ApiError> {
    let req: RerankRequest = parse_body(&body, &["scorer"])?;
    Ok(json_bytes(&engine.rerank(&req).await?))
}

async fn compare(State(engine): State<Engine>, body: Bytes) -> Result<Response, ApiError> {
    let req: CompareRequest = parse_body(&body, &["scorer_a", "scorer_b"])?;
    Ok(json_bytes(&engine.compare(&req).await?))
}

async fn list_profiles(State(engine): State<Engine>) -> Result<Response, ApiError> {
    Ok(json_bytes(&engine.profile_names()?))
}

async fn get_profile(State(engine): State<Engine>, Path(name): Path<String>) -> Result<Response, ApiError> {
    Ok(json_bytes(&engine.get_profile(&name)?))
}

async fn put_profile(
    State(engine): State<Engine>,
    Path(name): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let update: ProfileUpdate = parse_body(&body, &[])?;
    Ok(json_bytes(&engine.put_profile(&name, &update)?))
}

/// Dry-run validation: violations are returned as data, never persisted.
async fn validate_profile(
    State(engine): State<Engine>,
    Path(name): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let update: ProfileUpdate = parse_body(&body, &[])?;
    let profile = engine.parse_update(&name, &update)?;
    let violations = profile.validate();
    Ok(json_bytes(
        &json!({"valid": violations.is_empty(), "violations": violations}),
    ))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "NOT_FOUND",
        message: "no such endpoint".into(),
        violations: None,
    }
}

pub fn router(engine: Engine) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/connectors", get(connectors))
        .route("/api/rerank", post(rerank))
        .route("/api/compare", post(compare))
        .route("/api/profiles", get(list_profiles))
        .route("/api/profiles/{name}", get(get_profile).put(put_profile))
        .route("/api/profiles/{name}/validate", post(validate_profile))
        .fallback(not_found)
        .with_state(engine)
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub addr: SocketAddr,
    pub profiles_dir: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub connectors_config: Option<PathBuf>,
    pub record_dir: Option<PathBuf>,
}

impl ServerConfig {
    pub fn engine(&self) -> Result<Engine, ConnectorError> {
        let connectors = match &self.connectors_config {
            Some(path) => ConnectorRegistry::from_config_file(path)?,
            None => ConnectorRegistry::default(),
        };
        let mut engine = Engine::new(
            ProfileStore::new(&self.profiles_dir, self.stopwords.clone()),
            connectors,
        );
        if let Some(dir) = &self.record_dir {
            engine = engine.with_record_dir(dir);
        }
        Ok(engine)
    }
}

/// Bind and serve until Ctrl-C.
pub async fn serve(config: ServerConfig) -> std::io::Result<()> {
    let engine = config
        .engine()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Clone, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    /// Directory for fixtures recorded on request.
    #[arg(long)]
    pub record_dir: Option<PathBuf>,
}
