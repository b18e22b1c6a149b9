//! Run directory persistence and offline re-scoring. Raw responses are
//! written before scoring, so a run can be scored again later (for
//! example after the frequency cache has grown) and the summary
//! reproduced bit for bit.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{AlignmentResult, ScoringConfig};
use crate::lexicon::Lexicon;
use crate::ngram::FrequencyProvider;

use super::{
    score_responses, summarize, Condition, EvalConfig, EvalRun, FailedGeneration, PromptRecord,
    ResponseRecord,
};

pub struct RunFiles;

impl RunFiles {
    pub const PROMPTS: &'static str = "prompts.jsonl";
    pub const RESPONSES: &'static str = "responses.jsonl";
    pub const SCORES: &'static str = "scores.jsonl";
    pub const SUMMARY: &'static str = "summary.json";
    /// Generation-stage failures have no stored response, so they are
    /// kept separately for replay.
    pub const FAILURES: &'static str = "failures.jsonl";
}

/// One scored output, keyed back to its prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub item_id: String,
    pub condition: Condition,
    pub word_count: usize,
    pub alignment: AlignmentResult,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{file} line {line}: {source}")]
    Parse { file: String, line: usize, source: serde_json::Error },
    #[error("{file}: {source}")]
    Encode { file: String, source: serde_json::Error },
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunError> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).map_err(|source| RunError::Encode {
            file: path.display().to_string(),
            source,
        })?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, RunError> {
    let file = fs::File::open(path)?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|source| RunError::Parse {
            file: path.display().to_string(),
            line: i + 1,
            source,
        })?);
    }
    Ok(rows)
}

/// Persists every artifact of a run under one directory.
pub fn write_run(dir: &Path, run: &EvalRun) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    write_jsonl(&dir.join(RunFiles::PROMPTS), &run.prompts)?;
    write_jsonl(&dir.join(RunFiles::RESPONSES), &run.responses)?;
    let scores: Vec<ScoreRecord> = run
        .records
        .iter()
        .map(|r| ScoreRecord {
            item_id: r.item.id.clone(),
            condition: r.condition,
            word_count: r.word_count,
            alignment: r.alignment.clone(),
        })
        .collect();
    write_jsonl(&dir.join(RunFiles::SCORES), &scores)?;
    write_jsonl(&dir.join(RunFiles::FAILURES), &run.failures)?;
    let mut summary = serde_json::to_string_pretty(&run.summary).map_err(|source| {
        RunError::Encode { file: RunFiles::SUMMARY.to_string(), source }
    })?;
    summary.push('\n');
    fs::write(dir.join(RunFiles::SUMMARY), summary)?;
    Ok(())
}

pub fn read_responses(dir: &Path) -> Result<Vec<ResponseRecord>, RunError> {
    read_jsonl(&dir.join(RunFiles::RESPONSES))
}

/// Re-scores a stored run from its raw responses. Generation-stage
/// failures are carried over unchanged; scoring and the summary are
/// recomputed, reproducing the original summary bit for bit when the
/// cache serves the same frequencies.
pub async fn rescore(
    dir: &Path,
    lexicon: &Lexicon,
    provider: &FrequencyProvider,
    scoring: &ScoringConfig,
) -> Result<EvalRun, RunError> {
    let prompts: Vec<PromptRecord> = read_jsonl(&dir.join(RunFiles::PROMPTS))?;
    let responses = read_responses(dir)?;
    let summary_path = dir.join(RunFiles::SUMMARY);
    let raw = fs::read_to_string(&summary_path)?;
    let old: super::EvalSummary =
        serde_json::from_str(&raw).map_err(|source| RunError::Parse {
            file: summary_path.display().to_string(),
            line: 1,
            source,
        })?;
    let mut failures: Vec<FailedGeneration> = read_jsonl(&dir.join(RunFiles::FAILURES))?
        .into_iter()
        .filter(|f: &FailedGeneration| f.stage == "generation")
        .collect();

    let cfg = EvalConfig {
        conditions: old.conditions.keys().filter_map(|k| condition_from_key(k)).collect(),
        decoding: old.decoding,
        model: old.model.clone(),
        sample: old.sample_seed.map(|seed| (0, seed)),
        scoring: scoring.clone(),
        ..EvalConfig::default()
    };
    let records = score_responses(&responses, lexicon, provider, scoring, &mut failures).await;
    let summary = summarize(old.items, &records, &failures, &cfg);
    Ok(EvalRun { prompts, responses, records, failures, summary })
}

fn condition_from_key(key: &str) -> Option<Condition> {
    match key {
        "default_english" => Some(Condition::DefaultEnglish),
        "british_english" => Some(Condition::BritishEnglish),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geneval::{evaluate, ClientError, EvalItem, StubClient};
    use crate::lexicon::{load_lexicon, LoadMode};
    use crate::ngram::{DiskCache, MockTransport, ProviderConfig};
    use std::sync::Arc;

    fn lexicon() -> Lexicon {
        load_lexicon("color\tcolour\n".as_bytes(), LoadMode::Strict).unwrap()
    }

    fn provider(dir: &Path) -> FrequencyProvider {
        let mock = Arc::new(MockTransport::new());
        mock.seed_pair("fizzy drink", 4e-7, 1e-7);
        let cache = DiskCache::open(dir.join("cache.jsonl")).unwrap();
        FrequencyProvider::new(mock, cache, ProviderConfig::unthrottled())
    }

    fn items(n: usize) -> Vec<EvalItem> {
        (0..n)
            .map(|i| EvalItem {
                id: format!("q{i:05}"),
                question: "how do tides work on the coast".to_string(),
                source_tag: String::new(),
                word_limit: 50,
            })
            .collect()
    }

    #[tokio::test]
    async fn rescoring_a_stored_run_reproduces_the_summary_exactly() {
        let tmp = tempfile::tempdir().unwrap();
        let provider = provider(tmp.path());
        let client = StubClient::canned("fizzy drink fizzy drink");
        let lex = lexicon();
        let run = evaluate(&items(3), &client, &lex, &provider, &Default::default()).await;
        let run_dir = tmp.path().join("run");
        write_run(&run_dir, &run).unwrap();

        let replay = rescore(&run_dir, &lex, &provider, &Default::default()).await.unwrap();
        let original = serde_json::to_string_pretty(&run.summary).unwrap();
        let replayed = serde_json::to_string_pretty(&replay.summary).unwrap();
        assert_eq!(original, replayed);
        assert_eq!(run.records, replay.records);
    }

    #[tokio::test(start_paused = true)]
    async fn generation_failures_survive_replay() {
        let tmp = tempfile::tempdir().unwrap();
        let provider = provider(tmp.path());
        let client = StubClient::canned("fizzy drink fizzy drink");
        client.fail_next(ClientError::Auth);
        let lex = lexicon();
        let cfg = crate::geneval::EvalConfig { concurrency: 1, ..Default::default() };
        let run = evaluate(&items(1), &client, &lex, &provider, &cfg).await;
        assert_eq!(run.failures.len(), 1);
        let run_dir = tmp.path().join("run");
        write_run(&run_dir, &run).unwrap();

        let replay = rescore(&run_dir, &lex, &provider, &Default::default()).await.unwrap();
        assert_eq!(replay.failures, run.failures);
        assert_eq!(
            serde_json::to_string(&replay.summary).unwrap(),
            serde_json::to_string(&run.summary).unwrap()
        );
    }

    #[tokio::test]
    async fn corrupted_response_lines_surface_with_their_location() {
        let tmp = tempfile::tempdir().unwrap();
        let run_dir = tmp.path().join("run");
        fs::create_dir_all(&run_dir).unwrap();
        fs::write(run_dir.join(RunFiles::RESPONSES), "{\"bad\": \n").unwrap();
        let err = read_responses(&run_dir).unwrap_err();
        assert!(matches!(err, RunError::Parse { line: 1, .. }));
    }

    #[tokio::test]
    async fn run_directory_contains_all_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let provider = provider(tmp.path());
        let client = StubClient::canned("fizzy drink fizzy drink");
        let run = evaluate(&items(1), &client, &lexicon(), &provider, &Default::default()).await;
        let run_dir = tmp.path().join("run");
        write_run(&run_dir, &run).unwrap();
        for file in
            [RunFiles::PROMPTS, RunFiles::RESPONSES, RunFiles::SCORES, RunFiles::SUMMARY, RunFiles::FAILURES]
        {
            assert!(run_dir.join(file).exists(), "{file} missing");
        }
        let summary = fs::read_to_string(run_dir.join(RunFiles::SUMMARY)).unwrap();
        assert!(summary.ends_with('\n'));
        assert!(summary.contains("\"max_tokens\": 512"));
    }
}
