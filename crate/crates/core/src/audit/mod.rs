//! Corpus auditing: streaming preprocessing, variant counting, per-pair
//! and per-category dialect distributions, and significance testing.
//! Accumulators merge associatively so shards can be counted in
//! parallel and combined.

mod preprocess;
pub mod wilcoxon;

pub use preprocess::preprocess;
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_with_method, Method, WilcoxonError, WilcoxonResult,
};

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{score_text, AlignmentError, Label, ScoringConfig};
use crate::lexicon::{Category, Lexicon, Side, VariantPair};
use crate::ngram::FrequencyProvider;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("record {index}: {reason}")]
    Record { index: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("accumulators were built against different lexicons")]
    LexiconMismatch,
}

/// Raw occurrence counts for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub pair: VariantPair,
    pub f_ame: u64,
    pub f_bre: u64,
}

/// (p_ame, p_bre) for a pair, or `None` when neither side was observed;
/// undefined pairs are excluded from aggregates.
pub fn normalize_distribution(pc: &PairCounts) -> Option<(f64, f64)> {
    let total = pc.f_ame + pc.f_bre;
    if total == 0 {
        return None;
    }
    let p_ame = pc.f_ame as f64 / total as f64;
    Some((p_ame, 1.0 - p_ame))
}

/// Exact type-level counting over an already-preprocessed token stream.
/// A token sitting on several pairs increments each of them.
pub fn count_variants<'a>(
    tokens: impl IntoIterator<Item = &'a str>,
    lexicon: &Lexicon,
) -> Vec<PairCounts> {
    let mut acc = AuditAccumulator::new(lexicon);
    acc.add_tokens(tokens, lexicon);
    acc.pair_counts(lexicon)
}

/// Mergeable counting state for one shard of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditAccumulator {
    counts: Vec<(u64, u64)>,
    pub documents_seen: u64,
    pub tokens_seen: u64,
    pub skipped_records: u64,
}

impl AuditAccumulator {
    pub fn new(lexicon: &Lexicon) -> AuditAccumulator {
        AuditAccumulator {
            counts: vec![(0, 0); lexicon.len()],
            documents_seen: 0,
            tokens_seen: 0,
            skipped_records: 0,
        }
    }

    /// Preprocesses one raw document and counts its variants.
    pub fn add_document(&mut self, raw: &str, lexicon: &Lexicon) {
        let cleaned = preprocess(raw);
        self.add_tokens(cleaned.split_ascii_whitespace(), lexicon);
        self.documents_seen += 1;
    }

    fn add_tokens<'a>(&mut self, tokens: impl IntoIterator<Item = &'a str>, lexicon: &Lexicon) {
        for token in tokens {
            self.tokens_seen += 1;
            for &(idx, side) in lexicon.occurrences(token) {
                let slot = &mut self.counts[idx as usize];
                match side {
                    Side::Ame => slot.0 += 1,
                    Side::Bre => slot.1 += 1,
                }
            }
        }
    }

    /// Associative, commutative combination of two shards.
    pub fn merge(&mut self, other: &AuditAccumulator) -> Result<(), AuditError> {
        if self.counts.len() != other.counts.len() {
            return Err(AuditError::LexiconMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self.documents_seen += other.documents_seen;
        self.tokens_seen += other.tokens_seen;
        self.skipped_records += other.skipped_records;
        Ok(())
    }

    pub fn pair_counts(&self, lexicon: &Lexicon) -> Vec<PairCounts> {
        lexicon
            .pairs()
            .iter()
            .zip(&self.counts)
            .map(|(pair, &(f_ame, f_bre))| PairCounts { pair: pair.clone(), f_ame, f_bre })
            .collect()
    }
}

/// Counts a materialized shard list in parallel and merges the results.
pub fn accumulate_parallel(documents: &[String], lexicon: &Lexicon) -> AuditAccumulator {
    use rayon::prelude::*;
    documents
        .par_iter()
        .fold(
            || AuditAccumulator::new(lexicon),
            |mut acc, doc| {
                acc.add_document(doc, lexicon);
                acc
            },
        )
        .reduce(
            || AuditAccumulator::new(lexicon),
            |mut a, b| {
                a.merge(&b).expect("accumulators share one lexicon");
                a
            },
        )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    /// Pairs with at least one observation; only these enter the means.
    pub pairs_counted: usize,
    pub mean_p_ame: f64,
    pub mean_p_bre: f64,
}

/// Sampled text-scoring summary over a corpus subset. Zero-signal
/// documents are excluded from shares and confidence means but counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub sampled: usize,
    pub zero_signal: usize,
    pub ame_share: f64,
    pub bre_share: f64,
    /// Mean probability of whichever side won, per document.
    pub mean_winner_confidence: f64,
    /// Per-dialect means over the same scored documents.
    pub mean_p_ame: f64,
    pub mean_p_bre: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub per_pair: Vec<PairCounts>,
    /// Keyed by category name; categories without observed pairs are
    /// omitted.
    pub per_category: BTreeMap<String, CategoryStats>,
    /// Signed-rank test over per-pair (f_ame - f_bre); `None` when every
    /// difference is zero (e.g. an empty corpus).
    pub wilcoxon: Option<WilcoxonResult>,
    pub documents_seen: u64,
    pub tokens_seen: u64,
    pub skipped_records: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dialign_sample: Option<ScoredSample>,
}

/// Folds an accumulator into the final report.
pub fn build_report(
    acc: &AuditAccumulator,
    lexicon: &Lexicon,
    dialign_sample: Option<ScoredSample>,
) -> AuditReport {
    let per_pair = acc.pair_counts(lexicon);

    let mut sums: BTreeMap<Category, (usize, f64, f64)> = BTreeMap::new();
    for pc in &per_pair {
        if let Some((p_ame, p_bre)) = normalize_distribution(pc) {
            let entry = sums.entry(pc.pair.category).or_insert((0, 0.0, 0.0));
            entry.0 += 1;
            entry.1 += p_ame;
            entry.2 += p_bre;
        }
    }
    let per_category = sums
        .into_iter()
        .map(|(cat, (n, sum_ame, sum_bre))| {
            (
                cat.as_str().to_string(),
                CategoryStats {
                    pairs_counted: n,
                    mean_p_ame: sum_ame / n as f64,
                    mean_p_bre: sum_bre / n as f64,
                },
            )
        })
        .collect();

    let diffs: Vec<f64> =
        per_pair.iter().map(|pc| pc.f_ame as f64 - pc.f_bre as f64).collect();
    let wilcoxon = wilcoxon_signed_rank(&diffs).ok();

    AuditReport {
        per_pair,
        per_category,
        wilcoxon,
        documents_seen: acc.documents_seen,
        tokens_seen: acc.tokens_seen,
        skipped_records: acc.skipped_records,
        dialign_sample,
    }
}

/// Optional text-scoring pass configuration for [`audit_corpus`].
pub struct SampleOptions<'a> {
    pub provider: &'a FrequencyProvider,
    pub lexicon: &'a Lexicon,
    pub scoring: ScoringConfig,
    pub sample_limit: usize,
    pub seed: u64,
}

#[derive(Default)]
pub struct AuditOptions<'a> {
    /// Strict mode turns unreadable records into errors instead of
    /// skip tallies.
    pub strict: bool,
    pub dialign: Option<SampleOptions<'a>>,
}

/// Streams a corpus once: every document is preprocessed and counted,
/// and (optionally) a seeded uniform reservoir sample is scored for
/// dialect alignment afterwards.
pub async fn audit_corpus<I>(
    documents: I,
    lexicon: &Lexicon,
    options: AuditOptions<'_>,
) -> Result<AuditReport, AuditError>
where
    I: IntoIterator<Item = Result<String, AuditError>>,
{
    let mut acc = AuditAccumulator::new(lexicon);
    let mut reservoir: Vec<String> = Vec::new();
    let (sample_limit, mut rng) = match &options.dialign {
        Some(s) => (s.sample_limit, Some(ChaCha8Rng::seed_from_u64(s.seed))),
        None => (0, None),
    };

    let mut seen: u64 = 0;
    for record in documents {
        let doc = match record {
            Ok(doc) => doc,
            Err(e) if options.strict => return Err(e),
            Err(e) => {
                tracing::warn!(error = %e, "skipping unreadable record");
                acc.skipped_records += 1;
                continue;
            }
        };
        acc.add_document(&doc, lexicon);
        if sample_limit > 0 {
            // single-pass uniform reservoir, deterministic under the seed
            if reservoir.len() < sample_limit {
                reservoir.push(doc);
            } else if let Some(rng) = rng.as_mut() {
                let j = rng.random_range(0..=seen);
                if (j as usize) < sample_limit {
                    reservoir[j as usize] = doc;
                }
            }
            seen += 1;
        }
    }

    let dialign_sample = match options.dialign {
        Some(s) if !reservoir.is_empty() => {
            Some(score_sample(&reservoir, s.lexicon, s.provider, &s.scoring, s.seed).await?)
        }
        _ => None,
    };

    Ok(build_report(&acc, lexicon, dialign_sample))
}

async fn score_sample(
    documents: &[String],
    lexicon: &Lexicon,
    provider: &FrequencyProvider,
    scoring: &ScoringConfig,
    seed: u64,
) -> Result<ScoredSample, AuditError> {
    let mut zero_signal = 0usize;
    let mut ame = 0usize;
    let mut bre = 0usize;
    let (mut sum_winner, mut sum_ame, mut sum_bre) = (0.0f64, 0.0f64, 0.0f64);
    for doc in documents {
        let r = score_text(doc, lexicon, provider, scoring).await?;
        match r.label {
            Label::ZeroSignal => zero_signal += 1,
            Label::Ame => {
                ame += 1;
                sum_winner += r.p_ame;
                sum_ame += r.p_ame;
                sum_bre += r.p_bre;
            }
            Label::Bre => {
                bre += 1;
                sum_winner += r.p_bre;
                sum_ame += r.p_ame;
                sum_bre += r.p_bre;
            }
        }
    }
    let scored = (ame + bre) as f64;
    let (ame_share, bre_share, mean_winner, mean_ame, mean_bre) = if scored > 0.0 {
        (
            ame as f64 / scored,
            bre as f64 / scored,
            sum_winner / scored,
            sum_ame / scored,
            sum_bre / scored,
        )
    } else {
        (0.0, 0.0, 0.0, 0.0, 0.0)
    };
    Ok(ScoredSample {
        sampled: documents.len(),
        zero_signal,
        ame_share,
        bre_share,
        mean_winner_confidence: mean_winner,
        mean_p_ame: mean_ame,
        mean_p_bre: mean_bre,
        seed,
    })
}

/// How raw corpus bytes map to documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DocumentFormat {
    /// One document per line; blank lines are skipped.
    PlainLines,
    /// Newline-delimited JSON objects with the text under this field.
    Jsonl { text_field: String },
}

/// Pulls documents out of a byte stream while hashing the raw input, so
/// reports can carry an input digest without a second pass.
pub struct DocumentIter<R: BufRead> {
    lines: std::io::Lines<R>,
    format: DocumentFormat,
    index: u64,
    hasher: sha2::Sha256,
}

impl<R: BufRead> DocumentIter<R> {
    pub fn new(reader: R, format: DocumentFormat) -> DocumentIter<R> {
        use sha2::Digest;
        DocumentIter { lines: reader.lines(), format, index: 0, hasher: sha2::Sha256::new() }
    }

    /// Hex SHA-256 of every raw line consumed so far (newline-normalized).
    pub fn digest(&self) -> String {
        use sha2::Digest;
        hex::encode(self.hasher.clone().finalize())
    }
}

impl<R: BufRead> Iterator for DocumentIter<R> {
    type Item = Result<String, AuditError>;

    fn next(&mut self) -> Option<Self::Item> {
        use sha2::Digest;
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.index += 1;
            self.hasher.update(line.as_bytes());
            self.hasher.update(b"\n");
            match &self.format {
                DocumentFormat::PlainLines => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(Ok(line));
                }
                DocumentFormat::Jsonl { text_field } => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let parsed: Result<serde_json::Value, _> = serde_json::from_str(&line);
                    return Some(match parsed {
                        Ok(v) => match v.get(text_field).and_then(|t| t.as_str()) {
                            Some(text) => Ok(text.to_string()),
                            None => Err(AuditError::Record {
                                index: self.index,
                                reason: format!("missing string field {text_field:?}"),
                            }),
                        },
                        Err(e) => Err(AuditError::Record {
                            index: self.index,
                            reason: format!("bad JSON: {e}"),
                        }),
                    });
                }
            }
        }
    }
}
