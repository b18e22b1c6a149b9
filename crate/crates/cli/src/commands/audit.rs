use std::fs;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;

use clap::ValueEnum;
use dialign_client::ServiceClient;
use dialign_core::audit::{audit_corpus, AuditOptions, DocumentFormat, DocumentIter, SampleOptions};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{to_value, Inputs};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One document per line.
    Plain,
    /// One JSON object per line; the text sits under --text-field.
    Jsonl,
}

#[derive(clap::Args, Debug)]
pub struct AuditArgs {
    /// Corpus file; stdin when omitted.
    pub file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Plain)]
    pub input_format: InputFormat,
    /// JSON field holding the document text (jsonl input only).
    #[arg(long, default_value = "text", value_name = "FIELD")]
    pub text_field: String,
    /// Also score a seeded uniform sample of this many documents.
    #[arg(long, value_name = "N")]
    pub sample: Option<usize>,
    /// Seed for the sample draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub async fn run(args: AuditArgs, settings: &Settings) -> Result<(Value, Inputs), CliError> {
    let reader: Box<dyn BufRead> = match &args.file {
        Some(path) => Box::new(BufReader::new(fs::File::open(path).map_err(|e| {
            CliError::Input(format!("cannot open {}: {e}", path.display()))
        })?)),
        None => Box::new(BufReader::new(std::io::stdin())),
    };
    let format = match args.input_format {
        InputFormat::Plain => DocumentFormat::PlainLines,
        InputFormat::Jsonl => DocumentFormat::Jsonl { text_field: args.text_field.clone() },
    };
    let mut docs = DocumentIter::new(reader, format);
    let mut inputs = Inputs::default();

    let value = match &settings.server {
        Some(url) => {
            // extraction happens client-side, so lenient-mode skips are
            // folded back into the report the service returns
            let mut documents = Vec::new();
            let mut skipped: u64 = 0;
            for record in &mut docs {
                match record {
                    Ok(doc) => documents.push(doc),
                    Err(e) if settings.strict => return Err(e.into()),
                    Err(_) => skipped += 1,
                }
            }
            inputs.digest_hex("corpus", docs.digest());
            let report = ServiceClient::new(url)
                .audit(&documents, settings.strict, args.sample.map(|n| (n, args.seed)))
                .await?;
            let mut value = to_value(&report);
            if skipped > 0 {
                value["skipped_records"] = json!(report.skipped_records + skipped);
            }
            value
        }
        None => {
            let lexicon = settings.load_lexicon()?;
            let provider;
            let dialign = match args.sample {
                Some(limit) => {
                    provider = settings.build_provider()?;
                    Some(SampleOptions {
                        provider: &provider,
                        lexicon: &lexicon,
                        scoring: settings.scoring(),
                        sample_limit: limit,
                        seed: args.seed,
                    })
                }
                None => None,
            };
            let options = AuditOptions { strict: settings.strict, dialign };
            let report = audit_corpus(&mut docs, &lexicon, options).await?;
            inputs.digest_hex("corpus", docs.digest());
            to_value(&report)
        }
    };
    Ok((value, inputs))
}
