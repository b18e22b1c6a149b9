use std::net::SocketAddr;
use std::sync::Arc;

use dialign_server::{router, AppState};

use crate::error::CliError;
use crate::settings::Settings;

#[derive(clap::Args, Debug)]
pub struct ServeArgs {
    /// Address to listen on; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8787")]
    pub bind: SocketAddr,
}

pub async fn run(args: ServeArgs, settings: &Settings) -> Result<(), CliError> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "warn".into()),
        )
        .try_init();
    let state = AppState {
        lexicon: settings.load_lexicon()?,
        provider: settings.build_provider()?,
        scoring: settings.scoring(),
    };
    let listener = tokio::net::TcpListener::bind(args.bind)
        .await
        .map_err(|e| CliError::Input(format!("cannot bind {}: {e}", args.bind)))?;
    let addr = listener.local_addr().map_err(|e| CliError::Input(e.to_string()))?;
    // scripts scrape this line to find the port when binding port 0
    crate::output::print_line(&format!("listening on http://{addr}"))?;
    axum::serve(listener, router(Arc::new(state)))
        .await
        .map_err(|e| CliError::Input(format!("server: {e}")))
}
