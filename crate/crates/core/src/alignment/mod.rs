//! Dialect alignment scoring: tokenize, extract contiguous n-grams,
//! filter, look up dialect frequencies, weight the log-ratio evidence,
//! and normalize into alignment probabilities.

mod filter;
mod tokenize;

pub use filter::{
    filter_ngrams, EntityDetector, FilterTallies, GramSpan, HeuristicDetector, NoEntityDetector,
};
pub use tokenize::{tokenize, tokenize_words, Token};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::ngram::{FrequencyProvider, NgramError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub year_start: u16,
    pub year_end: u16,
    pub smoothing: u32,
    /// Weight multiplier for grams containing a lexicon variant; must
    /// exceed 1 so diagnostic grams gain influence.
    pub beta: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            n_min: 2,
            n_max: 5,
            year_start: crate::ngram::DEFAULT_YEAR_START,
            year_end: crate::ngram::DEFAULT_YEAR_END,
            smoothing: crate::ngram::DEFAULT_SMOOTHING,
            beta: 1.5,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), AlignmentError> {
        if self.n_min < 1 || self.n_min > self.n_max || self.n_max > 5 {
            return Err(AlignmentError::InvalidConfig(format!(
                "n-gram range {}..={} must sit inside 1..=5",
                self.n_min, self.n_max
            )));
        }
        if self.beta.is_nan() || self.beta <= 1.0 {
            return Err(AlignmentError::InvalidConfig(format!("beta {} must be > 1", self.beta)));
        }
        if self.year_start > self.year_end {
            return Err(AlignmentError::InvalidConfig(format!(
                "year range {}..{} is inverted",
                self.year_start, self.year_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("invalid scoring config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ngram(#[from] NgramError),
}

/// One scored n-gram: frequencies, signed log-ratio, divergence, and the
/// boost-adjusted weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramEvidence {
    pub gram: Vec<String>,
    pub f_ame: f64,
    pub f_bre: f64,
    /// log2(f_ame) - log2(f_bre); positive leans AmE. Computed as a
    /// difference of logs so mirrored inputs negate it bit-exactly.
    pub lr: f64,
    /// |f_ame - f_bre| / (f_ame + f_bre), in [0, 1).
    pub delta: f64,
    pub weight: f64,
    pub boosted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Ame,
    Bre,
    ZeroSignal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discards {
    pub entity: usize,
    pub stopword: usize,
    pub nofreq: usize,
}

/// Scoring output. Zero-signal results carry p_ame = p_bre = 0; all
/// others satisfy p_ame + p_bre = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub p_ame: f64,
    pub p_bre: f64,
    pub label: Label,
    pub s_ame: f64,
    pub s_bre: f64,
    pub retained: usize,
    pub discarded: Discards,
    /// Exact 0.5/0.5 split; labeled AmE by argmax convention.
    pub tie: bool,
}

impl AlignmentResult {
    pub fn zero_signal(discarded: Discards) -> AlignmentResult {
        AlignmentResult {
            p_ame: 0.0,
            p_bre: 0.0,
            label: Label::ZeroSignal,
            s_ame: 0.0,
            s_bre: 0.0,
            retained: 0,
            discarded,
            tie: false,
        }
    }

    pub fn is_zero_signal(&self) -> bool {
        self.label == Label::ZeroSignal
    }
}

/// All contiguous n-grams for n_min..=n_max in positional order,
/// shortest length first.
pub fn extract_ngrams(tokens: &[Token], cfg: &ScoringConfig) -> Vec<GramSpan> {
    let mut spans = Vec::new();
    for n in cfg.n_min..=cfg.n_max {
        for start in 0..tokens.len().saturating_sub(n - 1) {
            spans.push(GramSpan { start, len: n });
        }
    }
    spans
}

/// Scores one gram against its dialect frequencies. `None` means the
/// gram carries no usable signal (unattested in either corpus) and must
/// tally as a no-frequency discard.
pub fn score_gram(
    gram: &[String],
    f_ame: f64,
    f_bre: f64,
    lexicon: &Lexicon,
    cfg: &ScoringConfig,
) -> Option<GramEvidence> {
    if f_ame == 0.0 || f_bre == 0.0 {
        return None;
    }
    let lr = f_ame.log2() - f_bre.log2();
    let delta = (f_ame - f_bre).abs() / (f_ame + f_bre);
    let boosted = gram.iter().any(|t| lexicon.contains_variant(t));
    let weight = if boosted { delta * cfg.beta } else { delta };
    Some(GramEvidence { gram: gram.to_vec(), f_ame, f_bre, lr, delta, weight, boosted })
}

/// Folds evidence into side sums and alignment probabilities. Grams with
/// lr = 0 are retained but contribute to neither side.
pub fn aggregate(evidence: &[GramEvidence], discarded: Discards) -> AlignmentResult {
    // + 0.0 turns the empty-sum identity -0.0 into plain zero so it
    // doesn't leak into serialized results
    let s_ame: f64 =
        evidence.iter().filter(|e| e.lr > 0.0).map(|e| e.lr * e.weight).sum::<f64>() + 0.0;
    let s_bre: f64 =
        evidence.iter().filter(|e| e.lr < 0.0).map(|e| e.lr.abs() * e.weight).sum::<f64>() + 0.0;
    let total = s_ame + s_bre;
    if total == 0.0 {
        return AlignmentResult { retained: evidence.len(), ..AlignmentResult::zero_signal(discarded) };
    }
    let p_ame = s_ame / total;
    let p_bre = s_bre / total;
    let tie = p_ame == p_bre;
    let label = if p_ame >= p_bre { Label::Ame } else { Label::Bre };
    AlignmentResult {
        p_ame,
        p_bre,
        label,
        s_ame,
        s_bre,
        retained: evidence.len(),
        discarded,
        tie,
    }
}

/// Full pipeline over one text with the default entity heuristic.
pub async fn score_text(
    text: &str,
    lexicon: &Lexicon,
    provider: &FrequencyProvider,
    cfg: &ScoringConfig,
) -> Result<AlignmentResult, AlignmentError> {
    score_text_with(text, lexicon, provider, cfg, &HeuristicDetector).await
}

/// Full pipeline with a caller-supplied entity detector.
pub async fn score_text_with(
    text: &str,
    lexicon: &Lexicon,
    provider: &FrequencyProvider,
    cfg: &ScoringConfig,
    detector: &dyn EntityDetector,
) -> Result<AlignmentResult, AlignmentError> {
    cfg.validate()?;
    let tokens = tokenize(text);
    let spans = extract_ngrams(&tokens, cfg);
    let (retained, tallies) = filter_ngrams(&tokens, &spans, crate::data::stopword_set(), detector);

    // Repeated grams are looked up once but scored per occurrence.
    let grams: Vec<Vec<String>> = retained.iter().map(|s| s.words(&tokens)).collect();
    let lookup = provider
        .batch_lookup(&grams, cfg.year_start, cfg.year_end, cfg.smoothing, true)
        .await
        .map_err(AlignmentError::Ngram)?;

    let mut discarded = Discards { entity: tallies.entity, stopword: tallies.stopword, nofreq: 0 };
    let mut evidence = Vec::with_capacity(grams.len());
    for gram in &grams {
        let (f_ame, f_bre) = lookup.freqs[gram];
        match score_gram(gram, f_ame, f_bre, lexicon, cfg) {
            Some(e) => evidence.push(e),
            None => discarded.nofreq += 1,
        }
    }
    Ok(aggregate(&evidence, discarded))
}
