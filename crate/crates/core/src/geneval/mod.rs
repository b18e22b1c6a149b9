//! Generation-preference protocol: filter QA items, prompt a
//! text-generation endpoint under two language conditions, score the
//! outputs, and aggregate per-condition statistics.

mod client;
mod run;

pub use client::{
    generate, ClientError, Completion, DecodingParams, GenerationClient, HttpChatClient,
    StubClient, API_KEY_ENV,
};
pub use run::{read_responses, rescore, write_run, RunError, RunFiles};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::{score_text, AlignmentResult, Label, ScoringConfig};
use crate::audit::preprocess;
use crate::lexicon::Lexicon;
use crate::ngram::FrequencyProvider;
use crate::retry::Backoff;

pub const DEFAULT_WORD_LIMIT: u32 = 50;
pub const MIN_QUESTION_WORDS: usize = 5;
pub const MIN_ANSWER_WORDS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    DefaultEnglish,
    BritishEnglish,
}

impl Condition {
    /// The exact string substituted for {language} in the prompt.
    pub fn language(self) -> &'static str {
        match self {
            Condition::DefaultEnglish => "English",
            Condition::BritishEnglish => "British English (en-GB)",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Condition::DefaultEnglish => "default_english",
            Condition::BritishEnglish => "british_english",
        }
    }

    pub fn both() -> Vec<Condition> {
        vec![Condition::DefaultEnglish, Condition::BritishEnglish]
    }
}

/// Unfiltered input row: a question with its reference answer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawQaPair {
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub source_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub question: String,
    pub source_tag: String,
    pub word_limit: u32,
}

/// Keeps items whose question has at least 5 words, whose reference
/// answer has at least 30, and whose question contains no variant from
/// either side of the lexicon (to avoid priming the output dialect).
/// Item ids are ordinals into the raw input, so they stay stable when
/// filters change.
pub fn filter_items(raw: &[RawQaPair], lexicon: &Lexicon, word_limit: u32) -> Vec<EvalItem> {
    raw.iter()
        .enumerate()
        .filter(|(_, pair)| {
            pair.question.split_whitespace().count() >= MIN_QUESTION_WORDS
                && pair.answer.split_whitespace().count() >= MIN_ANSWER_WORDS
                && !preprocess(&pair.question)
                    .split_ascii_whitespace()
                    .any(|token| lexicon.contains_variant(token))
        })
        .map(|(i, pair)| EvalItem {
            id: format!("q{i:05}"),
            question: pair.question.clone(),
            source_tag: pair.source_tag.clone().unwrap_or_default(),
            word_limit,
        })
        .collect()
}

/// Byte-exact prompt instantiation; identical inputs yield identical
/// bytes.
pub fn render_prompt(item: &EvalItem, condition: Condition) -> String {
    format!(
        "Answer the following question in {language}. Write a single, coherent paragraph \
         in plain text, using descriptive and open-ended language. Avoid bullet points, \
         lists, or formatting. Your response must be exactly {limit} words \
         long\u{2014}no more, no fewer. Count your words carefully.\n\nQuestion: {question}",
        language = condition.language(),
        limit = item.word_limit,
        question = item.question,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub item: EvalItem,
    pub condition: Condition,
    pub output: String,
    pub word_count: usize,
    pub alignment: AlignmentResult,
    pub latency_ms: u64,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedGeneration {
    pub item_id: String,
    pub condition: Condition,
    /// Which stage failed: "generation" or "scoring".
    pub stage: String,
    pub attempts: u32,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub item_id: String,
    pub condition: Condition,
    pub prompt: String,
}

/// Raw endpoint output, persisted before scoring so runs can be
/// re-scored offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub item: EvalItem,
    pub condition: Condition,
    pub output: String,
    pub raw: serde_json::Value,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// Word-length adherence over all successful records of a condition.
/// SD is the population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub mean: f64,
    pub sd: f64,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub records: usize,
    pub failures: usize,
    pub excluded_zero_signal: usize,
    /// Shares over non-excluded records; `None` when every record was
    /// excluded.
    pub percent_ame: Option<f64>,
    pub percent_bre: Option<f64>,
    /// Mean P_AmE over all non-excluded records.
    pub mean_p_ame: Option<f64>,
    /// Mean P_AmE over records labeled American only. Both aggregations
    /// are reported because either reading of "mean alignment
    /// confidence" is defensible.
    pub mean_p_ame_labeled: Option<f64>,
    pub words: Option<LengthStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub items: usize,
    pub conditions: BTreeMap<String, ConditionSummary>,
    pub decoding: DecodingParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_seed: Option<u64>,
}

pub struct EvalConfig {
    pub conditions: Vec<Condition>,
    pub decoding: DecodingParams,
    pub backoff: Backoff,
    /// In-flight request limit toward the generation endpoint.
    pub concurrency: usize,
    /// Uniformly sample this many items with the seeded shuffle; the
    /// seed lands in the summary for replay.
    pub sample: Option<(usize, u64)>,
    pub scoring: ScoringConfig,
    pub model: Option<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            conditions: Condition::both(),
            decoding: DecodingParams::default(),
            backoff: Backoff::default(),
            concurrency: 4,
            sample: None,
            scoring: ScoringConfig::default(),
            model: None,
        }
    }
}

/// Everything one run produces. The summary is a pure function of the
/// records, so re-scoring stored responses reproduces it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub prompts: Vec<PromptRecord>,
    pub responses: Vec<ResponseRecord>,
    pub records: Vec<GenerationRecord>,
    pub failures: Vec<FailedGeneration>,
    pub summary: EvalSummary,
}

/// Runs item x condition through the endpoint, scores every output,
/// and aggregates. Failures are recorded, never silently dropped.
pub async fn evaluate(
    items: &[EvalItem],
    client: &dyn GenerationClient,
    lexicon: &Lexicon,
    provider: &FrequencyProvider,
    cfg: &EvalConfig,
) -> EvalRun {
    let selected: Vec<EvalItem> = match cfg.sample {
        Some((n, seed)) if n < items.len() => {
            let mut shuffled = items.to_vec();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            shuffled.truncate(n);
            shuffled.sort_by(|a, b| a.id.cmp(&b.id));
            shuffled
        }
        _ => items.to_vec(),
    };

    let mut prompts = Vec::new();
    let mut tasks = Vec::new();
    for item in &selected {
        for &condition in &cfg.conditions {
            let prompt = render_prompt(item, condition);
            prompts.push(PromptRecord {
                item_id: item.id.clone(),
                condition,
                prompt: prompt.clone(),
            });
            tasks.push((item.clone(), condition, prompt));
        }
    }

    use futures::StreamExt;
    let outcomes: Vec<_> = futures::stream::iter(tasks.into_iter().map(
        |(item, condition, prompt)| async move {
            let out = generate(client, &prompt, &cfg.decoding, &cfg.backoff).await;
            (item, condition, out)
        },
    ))
    .buffered(cfg.concurrency.max(1))
    .collect()
    .await;

    let mut responses = Vec::new();
    let mut failures = Vec::new();
    for (item, condition, out) in outcomes {
        match out {
            Ok((completion, attempts)) => responses.push(ResponseRecord {
                item,
                condition,
                output: completion.text,
                raw: completion.raw,
                latency_ms: completion.latency_ms,
                attempts,
            }),
            Err((attempts, err)) => failures.push(FailedGeneration {
                item_id: item.id,
                condition,
                stage: "generation".to_string(),
                attempts,
                error: err.to_string(),
            }),
        }
    }

    let records = score_responses(&responses, lexicon, provider, &cfg.scoring, &mut failures).await;
    let summary = summarize(selected.len(), &records, &failures, cfg);
    EvalRun { prompts, responses, records, failures, summary }
}

/// Scores stored responses. Shared by the live path and offline
/// re-scoring.
pub async fn score_responses(
    responses: &[ResponseRecord],
    lexicon: &Lexicon,
    provider: &FrequencyProvider,
    scoring: &ScoringConfig,
    failures: &mut Vec<FailedGeneration>,
) -> Vec<GenerationRecord> {
    let mut records = Vec::with_capacity(responses.len());
    for resp in responses {
        match score_text(&resp.output, lexicon, provider, scoring).await {
            Ok(alignment) => records.push(GenerationRecord {
                item: resp.item.clone(),
                condition: resp.condition,
                output: resp.output.clone(),
                word_count: resp.output.split_whitespace().count(),
                alignment,
                latency_ms: resp.latency_ms,
                attempts: resp.attempts,
            }),
            Err(e) => failures.push(FailedGeneration {
                item_id: resp.item.id.clone(),
                condition: resp.condition,
                stage: "scoring".to_string(),
                attempts: resp.attempts,
                error: e.to_string(),
            }),
        }
    }
    records
}

/// Aggregates one condition's records: shares and confidence means
/// skip zero-signal records, word statistics cover every record.
pub fn summarize(
    items: usize,
    records: &[GenerationRecord],
    failures: &[FailedGeneration],
    cfg: &EvalConfig,
) -> EvalSummary {
    let mut conditions = BTreeMap::new();
    for &condition in &cfg.conditions {
        let rows: Vec<&GenerationRecord> =
            records.iter().filter(|r| r.condition == condition).collect();
        let failed =
            failures.iter().filter(|f| f.condition == condition).count();

        let scored: Vec<&&GenerationRecord> =
            rows.iter().filter(|r| !r.alignment.is_zero_signal()).collect();
        let excluded = rows.len() - scored.len();
        let n = scored.len() as f64;

        let (percent_ame, percent_bre, mean_p_ame) = if scored.is_empty() {
            (None, None, None)
        } else {
            let ame = scored.iter().filter(|r| r.alignment.label == Label::Ame).count() as f64;
            (
                Some(100.0 * ame / n),
                Some(100.0 * (n - ame) / n),
                Some(scored.iter().map(|r| r.alignment.p_ame).sum::<f64>() / n),
            )
        };
        let labeled: Vec<f64> = scored
            .iter()
            .filter(|r| r.alignment.label == Label::Ame)
            .map(|r| r.alignment.p_ame)
            .collect();
        let mean_p_ame_labeled = if labeled.is_empty() {
            None
        } else {
            Some(labeled.iter().sum::<f64>() / labeled.len() as f64)
        };

        let words = length_stats(rows.iter().map(|r| r.word_count));

        conditions.insert(
            condition.key().to_string(),
            ConditionSummary {
                records: rows.len(),
                failures: failed,
                excluded_zero_signal: excluded,
                percent_ame,
                percent_bre,
                mean_p_ame,
                mean_p_ame_labeled,
                words,
            },
        );
    }
    EvalSummary {
        items,
        conditions,
        decoding: cfg.decoding,
        model: cfg.model.clone(),
        sample_seed: cfg.sample.map(|(_, seed)| seed),
    }
}

fn length_stats(counts: impl Iterator<Item = usize>) -> Option<LengthStats> {
    let counts: Vec<usize> = counts.collect();
    if counts.is_empty() {
        return None;
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    Some(LengthStats {
        mean,
        sd: var.sqrt(),
        min: *counts.iter().min().expect("nonempty"),
        max: *counts.iter().max().expect("nonempty"),
    })
}
