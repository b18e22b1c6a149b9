use dialign_client::ServiceClient;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{to_value, Inputs};
use crate::settings::Settings;

#[derive(clap::Subcommand, Debug)]
pub enum CacheCmd {
    /// Entry and hit counts for the frequency cache.
    Stats,
    /// Drop every cached frequency.
    Purge,
}

pub async fn run(cmd: CacheCmd, settings: &Settings) -> Result<(Value, Inputs), CliError> {
    let inputs = Inputs::default();
    let value = match &settings.server {
        Some(url) => {
            let client = ServiceClient::new(url);
            match cmd {
                CacheCmd::Stats => to_value(&client.cache_stats().await?),
                CacheCmd::Purge => json!({ "purged": client.cache_purge().await? }),
            }
        }
        None => {
            let cache = settings.open_cache()?;
            match cmd {
                CacheCmd::Stats => to_value(&cache.stats()),
                CacheCmd::Purge => {
                    let purged = cache.purge().map_err(|e| {
                        CliError::Input(format!("cache {}: {e}", settings.cache.display()))
                    })?;
                    json!({ "purged": purged })
                }
            }
        }
    };
    Ok((value, inputs))
}
