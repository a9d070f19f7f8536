//! Batch commands behind the `interest` binary.
//!
//! Every command goes through [`interest_core::api`], the same code path the
//! HTTP service uses, so report files match service response bodies byte for
//! byte.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use interest_core::analysis::DEFAULT_OUTLIER_FACTOR;
use interest_core::api::{compare_results, rerank_results, to_json_bytes, AppError};
use interest_core::connectors::fixture::{read_fixture, record_fixture};
use interest_core::connectors::{ConnectorError, ConnectorRegistry, ConnectorSpec, FetchPolicy};
use interest_core::profile::{ProfileStore, Violation};
use interest_core::rerank::SearchResult;
use interest_core::scoring::ScorerId;
use interest_service::{ServeArgs, ServerConfig};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "interest",
    version,
    about = "Re-rank search results by domain interestingness"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Directory holding `<name>.target` / `<name>.competitor` files.
    #[arg(long, global = true, default_value = "profiles")]
    pub profiles_dir: PathBuf,
    /// Stopwords file; defaults to `<profiles-dir>/stopwords`.
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,
    /// JSON map of connector name to connector spec.
    #[arg(long, global = true)]
    pub connectors_config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one result set and write rerank.csv / rerank.json.
    Rerank(RerankArgs),
    /// Rank one result set with two scorers and compare the orders.
    Compare(CompareArgs),
    /// Profile maintenance.
    #[command(subcommand)]
    Profile(ProfileCommand),
    /// Fixture corpus maintenance.
    #[command(subcommand)]
    Fixture(FixtureCommand),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
#[group(skip)]
pub struct SourceArgs {
    /// Replay a recorded fixture corpus.
    #[arg(long, required_unless_present = "connector", conflicts_with = "connector")]
    pub fixture: Option<PathBuf>,
    /// Query a configured connector.
    #[arg(long)]
    pub connector: Option<String>,
    /// Defaults to the recorded query when replaying a fixture.
    #[arg(long)]
    pub query: Option<String>,
    #[arg(long)]
    pub profile: String,
    #[arg(long, default_value_t = 100)]
    pub max_results: usize,
    #[arg(long)]
    pub fetch_bodies: bool,
    /// Directory for report files; created if missing.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerankArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value = "mm", value_parser = parse_scorer)]
    pub scorer: ScorerId,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value = "mm", value_parser = parse_scorer)]
    pub scorer_a: ScorerId,
    #[arg(long, default_value = "tfidf", value_parser = parse_scorer)]
    pub scorer_b: ScorerId,
    /// Compare only the first k results of order A.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_OUTLIER_FACTOR)]
    pub outlier_factor: f64,
}

#[derive(Debug, Subcommand)]
pub enum ProfileCommand {
    /// Exit 0 if the profile is valid; otherwise list violations on stderr.
    Validate { name: String },
}

#[derive(Debug, Subcommand)]
pub enum FixtureCommand {
    /// Fetch results from a connector and save them as a fixture corpus.
    Record {
        #[arg(long)]
        connector: String,
        #[arg(long)]
        query: String,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_results: usize,
        #[arg(long)]
        fetch_bodies: bool,
    },
}

fn parse_scorer(raw: &str) -> Result<ScorerId, String> {
    raw.parse()
        .map_err(|e: interest_core::scoring::UnknownScorer| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    App(#[from] AppError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("profile {name:?} is invalid")]
    Invalid { name: String, violations: Vec<Violation> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::App(e) => e.exit_code(),
            CliError::Io { .. } => 3,
            CliError::Usage(_) => 2,
            CliError::Invalid { .. } => 1,
        }
    }

    fn from_connector(e: ConnectorError) -> Self {
        CliError::App(e.into())
    }
}

/// Files written by a command, in write order.
pub type Written = Vec<PathBuf>;

pub fn run(cli: Cli) -> Result<Written, CliError> {
    match cli.command {
        Command::Rerank(args) => cmd_rerank(&cli.global, &args),
        Command::Compare(args) => cmd_compare(&cli.global, &args),
        Command::Profile(ProfileCommand::Validate { name }) => {
            cmd_profile_validate(&cli.global, &name).map(|()| vec![])
        }
        Command::Fixture(FixtureCommand::Record {
            connector,
            query,
            output,
            max_results,
            fetch_bodies,
        }) => {
            let policy = FetchPolicy::default()
                .with_max_results(max_results)
                .with_bodies(fetch_bodies);
            cmd_fixture_record(&cli.global, &connector, &query, &policy, &output).map(|()| vec![output])
        }
        Command::Serve(args) => cmd_serve(&cli.global, args).map(|()| vec![]),
    }
}

fn registry(global: &GlobalArgs) -> Result<ConnectorRegistry, CliError> {
    match &global.connectors_config {
        Some(path) => ConnectorRegistry::from_config_file(path).map_err(CliError::from_connector),
        None => Ok(ConnectorRegistry::default()),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<runtime>"),
            source,
        })
}

/// The fetched result set plus the query and connector label it came from.
struct Fetched {
    query: String,
    connector: String,
    results: Vec<SearchResult>,
}

fn fetch(global: &GlobalArgs, src: &SourceArgs) -> Result<Fetched, CliError> {
    if src.max_results == 0 {
        return Err(CliError::Usage("--max-results must be at least 1".into()));
    }
    let policy = FetchPolicy::default()
        .with_max_results(src.max_results)
        .with_bodies(src.fetch_bodies);
    let (registry, name, query) = match (&src.fixture, &src.connector) {
        (Some(path), _) => {
            let query = match &src.query {
                Some(q) => q.clone(),
                None => read_fixture(path).map_err(CliError::from_connector)?.header.query,
            };
            let name = path
                .file_stem()
                .map_or_else(|| "fixture".into(), |s| s.to_string_lossy().into_owned());
            (
                ConnectorRegistry::new([ConnectorSpec::fixture(&name, path)]),
                name,
                query,
            )
        }
        (None, Some(name)) => {
            let query = src
                .query
                .clone()
                .ok_or_else(|| CliError::Usage("--query is required with --connector".into()))?;
            (registry(global)?, name.clone(), query)
        }
        (None, None) => return Err(CliError::Usage("one of --fixture or --connector is required".into())),
    };
    if query.trim().is_empty() {
        return Err(CliError::from_connector(ConnectorError::EmptyQuery));
    }
    let results = runtime()?
        .block_on(registry.search(&name, &query, &policy))
        .map_err(CliError::from_connector)?;
    Ok(Fetched {
        query,
        connector: name,
        results,
    })
}

fn write_reports(dir: &Path, files: &[(&str, &[u8])]) -> Result<Written, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `rerank.csv` and `rerank.json` into the output directory.
pub fn cmd_rerank(global: &GlobalArgs, args: &RerankArgs) -> Result<Written, CliError> {
    let profile = ProfileStore::new(&global.profiles_dir, global.stopwords.clone())
        .load(&args.source.profile)
        .map_err(AppError::from)?;
    let fetched = fetch(global, &args.source)?;
    let report = rerank_results(
        &fetched.query,
        &fetched.connector,
        &profile,
        args.scorer,
        &fetched.results,
    )?;
    write_reports(
        &args.source.output,
        &[
            ("rerank.csv", report.to_csv().as_bytes()),
            ("rerank.json", &to_json_bytes(&report)),
        ],
    )
}

/// Writes `comparison.csv`, `summary.json` and the full `compare.json`.
pub fn cmd_compare(global: &GlobalArgs, args: &CompareArgs) -> Result<Written, CliError> {
    let profile = ProfileStore::new(&global.profiles_dir, global.stopwords.clone())
        .load(&args.source.profile)
        .map_err(AppError::from)?;
    let fetched = fetch(global, &args.source)?;
    let report = compare_results(
        &fetched.query,
        &fetched.connector,
        &profile,
        (args.scorer_a, args.scorer_b),
        &fetched.results,
        args.top_k,
        args.outlier_factor,
    )?;
    write_reports(
        &args.source.output,
        &[
            ("comparison.csv", report.comparison().to_csv().as_bytes()),
            ("summary.json", &to_json_bytes(&report.summary)),
            ("compare.json", &to_json_bytes(&report)),
        ],
    )
}

pub fn cmd_profile_validate(global: &GlobalArgs, name: &str) -> Result<(), CliError> {
    let store = ProfileStore::new(&global.profiles_dir, global.stopwords.clone());
    let profile = store.load(name).map_err(AppError::from)?;
    let violations = profile.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid {
            name: name.to_string(),
            violations,
        })
    }
}

pub fn cmd_fixture_record(
    global: &GlobalArgs,
    connector: &str,
    query: &str,
    policy: &FetchPolicy,
    output: &Path,
) -> Result<(), CliError> {
    let registry = registry(global)?;
    let spec = registry.get(connector).map_err(CliError::from_connector)?;
    let results = runtime()?
        .block_on(registry.search(connector, query, policy))
        .map_err(CliError::from_connector)?;
    record_fixture(&results, query, &spec.engine_label(), output).map_err(CliError::from_connector)
}

pub fn cmd_serve(global: &GlobalArgs, args: ServeArgs) -> Result<(), CliError> {
    let config = ServerConfig {
        addr: SocketAddr::new(args.bind, args.port),
        profiles_dir: global.profiles_dir.clone(),
        stopwords: global.stopwords.clone(),
        connectors_config: global.connectors_config.clone(),
        record_dir: args.record_dir,
    };
    runtime()?
        .block_on(interest_service::serve(config))
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<server>"),
            source,
        })
}

/// Print a diagnostic for `err` to `out`, one violation per line.
pub fn report_error(err: &CliError, out: &mut impl Write) {
    match err {
        CliError::Invalid { violations, .. } => {
            for v in violations {
                let _ = writeln!(out, "{v}");
            }
        }
        CliError::App(e) => {
            let _ = writeln!(out, "error: {e}");
            for v in e.violations().unwrap_or_default() {
                let _ = writeln!(out, "  {v}");
            }
        }
        other => {
            let _ = writeln!(out, "error: {other}");
        }
    }
}
