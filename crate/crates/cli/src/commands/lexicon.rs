use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use dialign_client::ServiceClient;
use dialign_core::lexicon::{classify_pair, load_lexicon, serialize_classified, Lexicon, LoadMode};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{to_value, Inputs};
use crate::settings::Settings;

#[derive(clap::Subcommand, Debug)]
pub enum LexiconCmd {
    /// Classify one American/British spelling pair.
    Classify { ame: String, bre: String },
    /// Check a lexicon TSV, rejecting the first malformed row.
    Validate { file: PathBuf },
    /// Combine lexicon files, dropping duplicate pairs.
    Merge {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Where the merged TSV goes.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
}

fn group_breakdown(lex: &Lexicon) -> (BTreeMap<String, usize>, BTreeMap<u8, usize>) {
    let mut by_category = BTreeMap::new();
    let mut by_group = BTreeMap::new();
    for pair in lex.pairs() {
        *by_category.entry(pair.category.as_str().to_string()).or_insert(0) += 1;
        *by_group.entry(pair.group).or_insert(0) += 1;
    }
    (by_category, by_group)
}

pub async fn run(cmd: LexiconCmd, settings: &Settings) -> Result<(Value, Inputs), CliError> {
    match cmd {
        LexiconCmd::Classify { ame, bre } => {
            let mut inputs = Inputs::default();
            inputs.digest("pair", format!("{ame}\t{bre}").as_bytes());
            let value = match &settings.server {
                Some(url) => to_value(&ServiceClient::new(url).classify(&ame, &bre).await?),
                None => {
                    let (group, category) = classify_pair(&ame, &bre)?;
                    json!({ "ame": ame, "bre": bre, "group": group, "category": category })
                }
            };
            Ok((value, inputs))
        }
        LexiconCmd::Validate { file } => {
            let bytes = fs::read(&file)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", file.display())))?;
            let mut inputs = Inputs::default();
            inputs.digest("lexicon", &bytes);
            let lex = load_lexicon(bytes.as_slice(), LoadMode::Strict)
                .map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
            let (by_category, by_group) = group_breakdown(&lex);
            let value = json!({
                "valid": true,
                "pairs": lex.len(),
                "by_category": by_category,
                "by_group": by_group,
            });
            Ok((value, inputs))
        }
        LexiconCmd::Merge { files, output } => {
            let mode = if settings.strict { LoadMode::Strict } else { LoadMode::Skip };
            let mut inputs = Inputs::default();
            let mut merged: Option<Lexicon> = None;
            for path in &files {
                let bytes = fs::read(path).map_err(|e| {
                    CliError::Input(format!("cannot read {}: {e}", path.display()))
                })?;
                inputs.digest(&path.display().to_string(), &bytes);
                let lex = load_lexicon(bytes.as_slice(), mode)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                merged = Some(match merged {
                    None => lex,
                    Some(mut base) => {
                        base.merge(lex);
                        base
                    }
                });
            }
            let merged = merged.expect("clap requires at least one file");
            let out = fs::File::create(&output).map_err(|e| {
                CliError::Input(format!("cannot write {}: {e}", output.display()))
            })?;
            serialize_classified(&merged, BufWriter::new(out))
                .map_err(|e| CliError::Input(format!("{}: {e}", output.display())))?;
            let value = json!({
                "pairs": merged.len(),
                "rows_skipped": merged.rows_skipped(),
                "output": output.display().to_string(),
            });
            Ok((value, inputs))
        }
    }
}
