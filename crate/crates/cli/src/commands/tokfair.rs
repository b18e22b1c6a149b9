use std::fs;
use std::path::PathBuf;

use dialign_client::ServiceClient;
use dialign_core::subword::{analyze_tokenizer, SubwordTokenizer};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{to_value, Inputs};
use crate::settings::Settings;

#[derive(clap::Args, Debug)]
pub struct TokfairArgs {
    /// Combined tokenizer JSON (vocab, merges, optional normalization).
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "vocab",
        conflicts_with_all = ["vocab", "merges"]
    )]
    pub tokenizer: Option<PathBuf>,
    /// Vocabulary JSON mapping piece to id; pair with --merges.
    #[arg(long, value_name = "FILE", requires = "merges")]
    pub vocab: Option<PathBuf>,
    /// Merge rules, one pair per line.
    #[arg(long, value_name = "FILE", requires = "vocab")]
    pub merges: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub async fn run(args: TokfairArgs, settings: &Settings) -> Result<(Value, Inputs), CliError> {
    let mut inputs = Inputs::default();
    match &settings.server {
        Some(url) => {
            let spec = match (&args.tokenizer, &args.vocab, &args.merges) {
                (Some(path), _, _) => {
                    let raw = read(path)?;
                    inputs.digest("tokenizer", &raw);
                    serde_json::from_slice(&raw).map_err(|e| {
                        CliError::Input(format!("bad tokenizer {}: {e}", path.display()))
                    })?
                }
                (None, Some(vocab_path), Some(merges_path)) => {
                    let vocab_raw = read(vocab_path)?;
                    inputs.digest("vocab", &vocab_raw);
                    let merges_raw = read(merges_path)?;
                    inputs.digest("merges", &merges_raw);
                    let vocab: Value = serde_json::from_slice(&vocab_raw).map_err(|e| {
                        CliError::Input(format!("bad vocab {}: {e}", vocab_path.display()))
                    })?;
                    let merges: Vec<&str> = std::str::from_utf8(&merges_raw)
                        .map_err(|e| {
                            CliError::Input(format!("{}: {e}", merges_path.display()))
                        })?
                        .lines()
                        .map(str::trim_end)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .collect();
                    json!({ "vocab": vocab, "merges": merges })
                }
                _ => unreachable!("clap enforces a tokenizer source"),
            };
            let report = ServiceClient::new(url).tokfair(&spec).await?;
            Ok((to_value(&report), inputs))
        }
        None => {
            let tok = match (&args.tokenizer, &args.vocab, &args.merges) {
                (Some(path), _, _) => {
                    inputs.digest("tokenizer", &read(path)?);
                    SubwordTokenizer::from_json_file(path)?
                }
                (None, Some(vocab_path), Some(merges_path)) => {
                    inputs.digest("vocab", &read(vocab_path)?);
                    inputs.digest("merges", &read(merges_path)?);
                    SubwordTokenizer::from_files(vocab_path, merges_path)?
                }
                _ => unreachable!("clap enforces a tokenizer source"),
            };
            let lexicon = settings.load_lexicon()?;
            Ok((to_value(&analyze_tokenizer(&tok, &lexicon)), inputs))
        }
    }
}
