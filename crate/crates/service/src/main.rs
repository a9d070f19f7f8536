use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use interest_service::{serve, ServeArgs, ServerConfig};

#[derive(Debug, Parser)]
#[command(name = "interest-server", version, about = "Interestingness re-ranking HTTP service")]
struct Cli {
    #[arg(long, default_value = "profiles")]
    profiles_dir: PathBuf,
    /// Stopwords file; defaults to `<profiles-dir>/stopwords`.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    connectors_config: Option<PathBuf>,
    #[command(flatten)]
    serve: ServeArgs,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let cli = Cli::parse();
    serve(ServerConfig {
        addr: SocketAddr::new(cli.serve.bind, cli.serve.port),
        profiles_dir: cli.profiles_dir,
        stopwords: cli.stopwords,
        connectors_config: cli.connectors_config,
        record_dir: cli.serve.record_dir,
    })
    .await
}
