use std::fs;
use std::io::Read;
use std::path::PathBuf;

use dialign_client::ServiceClient;
use dialign_core::alignment::score_text;
use serde_json::Value;

use crate::error::CliError;
use crate::output::{to_value, Inputs};
use crate::settings::Settings;

#[derive(clap::Args, Debug)]
pub struct ScoreArgs {
    /// Text to score; stdin when neither this nor --file is given.
    pub text: Option<String>,
    /// Read the text from a file.
    #[arg(long, value_name = "FILE", conflicts_with = "text")]
    pub file: Option<PathBuf>,
}

pub async fn run(args: ScoreArgs, settings: &Settings) -> Result<(Value, Inputs), CliError> {
    let text = match (&args.file, args.text) {
        (Some(path), _) => fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(text)) => text,
        (None, None) => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::Input(format!("cannot read stdin: {e}")))?;
            buf
        }
    };
    let mut inputs = Inputs::default();
    inputs.digest("text", text.as_bytes());

    let scoring = settings.scoring();
    let result = match &settings.server {
        Some(url) => ServiceClient::new(url).score(&text, Some(&scoring)).await?,
        None => {
            let lexicon = settings.load_lexicon()?;
            let provider = settings.build_provider()?;
            score_text(&text, &lexicon, &provider, &scoring).await?
        }
    };
    Ok((to_value(&result), inputs))
}
