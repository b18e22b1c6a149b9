use std::fs;
use std::path::{Path, PathBuf};

use dialign_core::geneval::{
    evaluate, filter_items, rescore, write_run, DecodingParams, EvalConfig, EvalRun,
    HttpChatClient, RawQaPair, RunFiles, API_KEY_ENV, DEFAULT_WORD_LIMIT,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{to_value, Inputs};
use crate::settings::Settings;

#[derive(clap::Subcommand, Debug)]
pub enum GenevalCmd {
    /// Prompt a generation endpoint under both language conditions and
    /// score every answer.
    Run(RunArgs),
    /// Recompute scores and the summary for a stored run.
    Rescore(RescoreArgs),
}

#[derive(clap::Args, Debug)]
pub struct RunArgs {
    /// QA items, one JSON object per line with question and answer.
    #[arg(long, value_name = "FILE")]
    pub questions: PathBuf,
    /// Directory the run files land in.
    #[arg(long, value_name = "DIR")]
    pub run_dir: PathBuf,
    /// Chat completions endpoint URL.
    #[arg(long, value_name = "URL")]
    pub endpoint: String,
    /// Model name sent with every request.
    #[arg(long)]
    pub model: String,
    /// Evaluate at most this many items (seeded uniform sample).
    #[arg(long, value_name = "N")]
    pub limit: Option<usize>,
    /// Seed for the sample draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Word budget stated in the prompt.
    #[arg(long, default_value_t = DEFAULT_WORD_LIMIT)]
    pub word_limit: u32,
    /// In-flight requests toward the endpoint.
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    #[arg(long, default_value_t = 512)]
    pub max_tokens: u32,
}

#[derive(clap::Args, Debug)]
pub struct RescoreArgs {
    /// Directory holding an existing run.
    #[arg(long, value_name = "DIR")]
    pub run_dir: PathBuf,
    /// Write the rescored run here instead of in place.
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
}

fn run_value(dir: &Path, run: &EvalRun) -> Value {
    json!({
        "run_dir": dir.display().to_string(),
        "generated": run.records.len(),
        "failures": run.failures.len(),
        "summary": to_value(&run.summary),
    })
}

pub async fn run(cmd: GenevalCmd, settings: &Settings) -> Result<(Value, Inputs), CliError> {
    match cmd {
        GenevalCmd::Run(args) => {
            let bytes = fs::read(&args.questions).map_err(|e| {
                CliError::Input(format!("cannot read {}: {e}", args.questions.display()))
            })?;
            let mut inputs = Inputs::default();
            inputs.digest("questions", &bytes);
            let text = String::from_utf8(bytes).map_err(|e| {
                CliError::Input(format!("{}: {e}", args.questions.display()))
            })?;
            let mut raw = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let pair: RawQaPair = serde_json::from_str(line).map_err(|e| {
                    CliError::Input(format!(
                        "{} line {}: {e}",
                        args.questions.display(),
                        lineno + 1
                    ))
                })?;
                raw.push(pair);
            }
            let lexicon = settings.load_lexicon()?;
            let items = filter_items(&raw, &lexicon, args.word_limit);
            if items.is_empty() {
                return Err(CliError::Input(
                    "no items pass the eligibility filter".to_string(),
                ));
            }
            if std::env::var(API_KEY_ENV).is_err() {
                eprintln!("note: {API_KEY_ENV} not set, sending unauthenticated requests");
            }
            let provider = settings.build_provider()?;
            let client = HttpChatClient::new(args.endpoint.clone(), args.model.clone());
            let cfg = EvalConfig {
                decoding: DecodingParams { max_tokens: args.max_tokens, ..Default::default() },
                concurrency: args.concurrency,
                sample: args.limit.map(|n| (n, args.seed)),
                scoring: settings.scoring(),
                model: Some(args.model.clone()),
                ..Default::default()
            };
            let run = evaluate(&items, &client, &lexicon, &provider, &cfg).await;
            write_run(&args.run_dir, &run)?;
            Ok((run_value(&args.run_dir, &run), inputs))
        }
        GenevalCmd::Rescore(args) => {
            let mut inputs = Inputs::default();
            for file in [RunFiles::PROMPTS, RunFiles::RESPONSES] {
                let path = args.run_dir.join(file);
                let bytes = fs::read(&path).map_err(|e| {
                    CliError::Input(format!("cannot read {}: {e}", path.display()))
                })?;
                inputs.digest(file, &bytes);
            }
            let lexicon = settings.load_lexicon()?;
            let provider = settings.build_provider()?;
            let run = rescore(&args.run_dir, &lexicon, &provider, &settings.scoring()).await?;
            let out_dir = args.output.unwrap_or_else(|| args.run_dir.clone());
            write_run(&out_dir, &run)?;
            Ok((run_value(&out_dir, &run), inputs))
        }
    }
}
