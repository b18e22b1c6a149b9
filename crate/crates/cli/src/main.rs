//! `dialign`: dialect alignment from the command line. Every command
//! runs in process by default; pass `--server` (or set DIALIGN_SERVER)
//! to delegate to a running service instead. `serve`, `geneval`, and
//! the lexicon file operations always run locally.

mod commands;
mod error;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::CliError;
use crate::output::{Format, Inputs};

#[derive(Parser, Debug)]
#[command(
    name = "dialign",
    version,
    about = "Scores text for American vs British English alignment and audits corpora and tokenizers for dialect skew",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// Config file; ./dialign.toml is picked up when present.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Frequency cache file.
    #[arg(long, global = true, value_name = "FILE")]
    cache: Option<PathBuf>,
    /// Variant lexicon TSV; the bundled seed lexicon when absent.
    #[arg(long, global = true, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Delegate to a running dialign service at this URL.
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    /// Frequency endpoint base URL.
    #[arg(long, global = true, value_name = "URL")]
    base_url: Option<String>,
    /// Weight boost for grams containing a lexicon variant.
    #[arg(long, global = true, value_name = "FACTOR")]
    beta: Option<f64>,
    /// First year of the frequency window.
    #[arg(long, global = true, value_name = "YEAR")]
    year_start: Option<u16>,
    /// Last year of the frequency window.
    #[arg(long, global = true, value_name = "YEAR")]
    year_end: Option<u16>,
    /// Requests per second toward the frequency endpoint; 0 disables
    /// limiting.
    #[arg(long, global = true, value_name = "PER_SEC")]
    rate_limit: Option<f64>,
    /// Treat malformed input rows as errors instead of skips.
    #[arg(long, global = true)]
    strict: bool,
    /// Output layout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a text for dialect alignment.
    Score(commands::score::ScoreArgs),
    /// Stream a corpus, tally variant usage, and optionally score a
    /// sample of documents.
    Audit(commands::audit::AuditArgs),
    /// Compare subword token costs across the lexicon's spelling pairs.
    Tokfair(commands::tokfair::TokfairArgs),
    /// Inspect and maintain variant lexicons.
    #[command(subcommand)]
    Lexicon(commands::lexicon::LexiconCmd),
    /// Inspect and maintain the frequency cache.
    #[command(subcommand)]
    Cache(commands::cache::CacheCmd),
    /// Run the HTTP service.
    Serve(commands::serve::ServeArgs),
    /// Generate answers under dialect steering prompts and score them.
    #[command(subcommand)]
    Geneval(commands::geneval::GenevalCmd),
    /// Print the resolved settings.
    Config,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help and version land on stdout with a zero exit; real
            // usage errors are input errors
            let failed = err.use_stderr();
            let _ = err.print();
            return if failed { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start async runtime: {e}");
            return ExitCode::from(1);
        }
    };
    match runtime.block_on(dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

async fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (settings, config_file) = settings::resolve(&cli.globals)?;
    let format = cli.globals.format;

    if let Command::Serve(args) = cli.command {
        return commands::serve::run(args, &settings).await;
    }

    let (value, inputs) = match cli.command {
        Command::Score(args) => commands::score::run(args, &settings).await?,
        Command::Audit(args) => commands::audit::run(args, &settings).await?,
        Command::Tokfair(args) => commands::tokfair::run(args, &settings).await?,
        Command::Lexicon(cmd) => commands::lexicon::run(cmd, &settings).await?,
        Command::Cache(cmd) => commands::cache::run(cmd, &settings).await?,
        Command::Geneval(cmd) => commands::geneval::run(cmd, &settings).await?,
        Command::Config => {
            let mut inputs = Inputs::default();
            if let Some(path) = &config_file {
                let bytes = std::fs::read(path).map_err(|e| {
                    CliError::Input(format!("cannot read config {}: {e}", path.display()))
                })?;
                inputs.digest("config", &bytes);
            }
            let value = json!({
                "settings": output::to_value(&settings),
                "config_file": config_file.as_ref().map(|p| p.display().to_string()),
            });
            (value, inputs)
        }
        Command::Serve(_) => unreachable!("handled above"),
    };

    output::print_line(&output::render(value, &settings, inputs, format))
}
