//! Layered configuration: built-in defaults, then an optional
//! `dialign.toml`, then environment variables, then command line flags.
//! Later layers win per key.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use dialign_core::alignment::ScoringConfig;
use dialign_core::lexicon::{load_lexicon, Lexicon, LoadMode};
use dialign_core::ngram::{DiskCache, FrequencyProvider, HttpTransport, ProviderConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::GlobalArgs;

pub const ENV_CACHE: &str = "DIALIGN_CACHE";
pub const ENV_LEXICON: &str = "DIALIGN_LEXICON";
pub const ENV_SERVER: &str = "DIALIGN_SERVER";
/// Read for the frequency endpoint; shared with the transport layer.
pub const ENV_BASE_URL: &str = dialign_core::ngram::BASE_URL_ENV;

/// Everything a command needs to know, fully resolved. Serialized form
/// is what `dialign config` prints and what the provenance digest
/// covers.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub cache: PathBuf,
    /// Lexicon TSV; the bundled seed lexicon when absent.
    pub lexicon: Option<PathBuf>,
    /// Service URL; commands run in process when absent.
    pub server: Option<String>,
    /// Frequency endpoint; the transport default when absent.
    pub base_url: Option<String>,
    /// Requests per second toward the frequency endpoint; 0 disables
    /// limiting.
    pub rate_limit: f64,
    pub beta: f64,
    pub year_start: u16,
    pub year_end: u16,
    /// Treat malformed input rows as errors instead of skips.
    pub strict: bool,
}

impl Default for Settings {
    fn default() -> Self {
        let scoring = ScoringConfig::default();
        Settings {
            cache: PathBuf::from("dialign-cache.jsonl"),
            lexicon: None,
            server: None,
            base_url: None,
            rate_limit: 2.0,
            beta: scoring.beta,
            year_start: scoring.year_start,
            year_end: scoring.year_end,
            strict: false,
        }
    }
}

/// On-disk config shape. Every key optional; unknown keys are errors so
/// typos surface instead of silently falling back to defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    cache: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    server: Option<String>,
    base_url: Option<String>,
    rate_limit: Option<f64>,
    beta: Option<f64>,
    year_start: Option<u16>,
    year_end: Option<u16>,
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let raw = fs::read_to_string(path).map_err(|e| {
        CliError::Input(format!("cannot read config {}: {e}", path.display()))
    })?;
    toml::from_str(&raw)
        .map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

/// Resolves the effective settings and reports which config file, if
/// any, contributed.
pub fn resolve(globals: &GlobalArgs) -> Result<(Settings, Option<PathBuf>), CliError> {
    let mut settings = Settings::default();

    let config_path = match &globals.config {
        Some(p) => {
            if !p.exists() {
                return Err(CliError::Input(format!("config {} not found", p.display())));
            }
            Some(p.clone())
        }
        None => {
            let default = PathBuf::from("dialign.toml");
            default.exists().then_some(default)
        }
    };
    if let Some(path) = &config_path {
        let file = load_file(path)?;
        if let Some(v) = file.cache {
            settings.cache = v;
        }
        settings.lexicon = file.lexicon.or(settings.lexicon);
        settings.server = file.server.or(settings.server);
        settings.base_url = file.base_url.or(settings.base_url);
        if let Some(v) = file.rate_limit {
            settings.rate_limit = v;
        }
        if let Some(v) = file.beta {
            settings.beta = v;
        }
        if let Some(v) = file.year_start {
            settings.year_start = v;
        }
        if let Some(v) = file.year_end {
            settings.year_end = v;
        }
    }

    if let Some(v) = env_var(ENV_CACHE) {
        settings.cache = PathBuf::from(v);
    }
    if let Some(v) = env_var(ENV_LEXICON) {
        settings.lexicon = Some(PathBuf::from(v));
    }
    if let Some(v) = env_var(ENV_SERVER) {
        settings.server = Some(v);
    }
    if let Some(v) = env_var(ENV_BASE_URL) {
        settings.base_url = Some(v);
    }

    if let Some(v) = &globals.cache {
        settings.cache = v.clone();
    }
    if let Some(v) = &globals.lexicon {
        settings.lexicon = Some(v.clone());
    }
    if let Some(v) = &globals.server {
        settings.server = Some(v.clone());
    }
    if let Some(v) = &globals.base_url {
        settings.base_url = Some(v.clone());
    }
    if let Some(v) = globals.rate_limit {
        settings.rate_limit = v;
    }
    if let Some(v) = globals.beta {
        settings.beta = v;
    }
    if let Some(v) = globals.year_start {
        settings.year_start = v;
    }
    if let Some(v) = globals.year_end {
        settings.year_end = v;
    }
    if globals.strict {
        settings.strict = true;
    }

    Ok((settings, config_path))
}

impl Settings {
    pub fn scoring(&self) -> ScoringConfig {
        ScoringConfig {
            beta: self.beta,
            year_start: self.year_start,
            year_end: self.year_end,
            ..ScoringConfig::default()
        }
    }

    /// Loads the configured lexicon, or the bundled seed one. File
    /// loads are strict regardless of `--strict`: a broken lexicon
    /// poisons every downstream count.
    pub fn load_lexicon(&self) -> Result<Lexicon, CliError> {
        match &self.lexicon {
            None => Ok(Lexicon::seed()),
            Some(path) => {
                let file = fs::File::open(path).map_err(|e| {
                    CliError::Input(format!("cannot open lexicon {}: {e}", path.display()))
                })?;
                load_lexicon(BufReader::new(file), LoadMode::Strict).map_err(|e| {
                    CliError::Input(format!("lexicon {}: {e}", path.display()))
                })
            }
        }
    }

    pub fn open_cache(&self) -> Result<DiskCache, CliError> {
        DiskCache::open(&self.cache).map_err(|e| {
            CliError::Input(format!("cannot open cache {}: {e}", self.cache.display()))
        })
    }

    pub fn build_provider(&self) -> Result<FrequencyProvider, CliError> {
        let transport = match &self.base_url {
            Some(url) => HttpTransport::new(url.clone()),
            None => HttpTransport::from_env(),
        };
        let cfg = ProviderConfig {
            rate_limit_per_sec: (self.rate_limit > 0.0).then_some(self.rate_limit),
            ..ProviderConfig::default()
        };
        Ok(FrequencyProvider::new(Arc::new(transport), self.open_cache()?, cfg))
    }
}
