//! Service daemon. Serves scoring, lexicon, audit, signed-rank,
//! tokenizer-fairness, and cache endpoints over HTTP/JSON.

use std::fs::File;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;

use dialign_core::alignment::ScoringConfig;
use dialign_core::lexicon::{load_lexicon, Lexicon, LoadMode};
use dialign_core::ngram::{DiskCache, FrequencyProvider, HttpTransport, ProviderConfig};
use dialign_server::{router, AppState};

#[derive(Debug, Parser)]
#[command(name = "dialignd", version, about = "Dialect alignment analysis service")]
struct Args {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8787")]
    bind: SocketAddr,

    /// Frequency cache file (JSONL, append-only).
    #[arg(long, default_value = "dialign-cache.jsonl")]
    cache: PathBuf,

    /// Variant lexicon TSV (ame<TAB>bre per row); bundled seed lexicon
    /// when absent.
    #[arg(long)]
    lexicon: Option<PathBuf>,

    /// Frequency endpoint base URL; DIALIGN_NGRAM_URL or the built-in
    /// default when absent.
    #[arg(long)]
    base_url: Option<String>,

    /// Outbound requests per second toward the frequency endpoint;
    /// 0 disables limiting.
    #[arg(long, default_value_t = 2.0)]
    rate_limit: f64,

    /// Weight multiplier for n-grams containing lexicon variants.
    #[arg(long, default_value_t = 1.5)]
    beta: f64,

    /// Frequency window, inclusive.
    #[arg(long, default_value_t = 1950)]
    year_start: u16,
    #[arg(long, default_value_t = 2022)]
    year_end: u16,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .init();
    let args = Args::parse();

    let lexicon = match &args.lexicon {
        Some(path) => load_lexicon(BufReader::new(File::open(path)?), LoadMode::Strict)?,
        None => Lexicon::seed(),
    };
    let transport = match &args.base_url {
        Some(url) => HttpTransport::new(url.clone()),
        None => HttpTransport::from_env(),
    };
    let cfg = ProviderConfig {
        rate_limit_per_sec: (args.rate_limit > 0.0).then_some(args.rate_limit),
        ..ProviderConfig::default()
    };
    let provider = FrequencyProvider::new(Arc::new(transport), DiskCache::open(&args.cache)?, cfg);
    let scoring = ScoringConfig {
        beta: args.beta,
        year_start: args.year_start,
        year_end: args.year_end,
        ..ScoringConfig::default()
    };

    let state = Arc::new(AppState { lexicon, provider, scoring });
    let listener = tokio::net::TcpListener::bind(args.bind).await?;
    tracing::info!(addr = %args.bind, "listening");
    axum::serve(listener, router(state)).await?;
    Ok(())
}
