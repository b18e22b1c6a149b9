//! Subword segmentation disparity between American and British variant
//! forms: fertility means per category, relative gaps, granularity
//! bins, and paired significance tests.

mod tokenizer;

pub use tokenizer::{
    BoundaryMarker, Normalization, Piece, SubwordError, SubwordTokenizer,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::audit::{wilcoxon_signed_rank, WilcoxonResult};
use crate::lexicon::{Category, Lexicon, VariantPair};

/// Per-category significance threshold for the paired test.
pub const SIGNIFICANCE_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTokenCounts {
    pub pair: VariantPair,
    pub n_tokens_ame: usize,
    pub n_tokens_bre: usize,
}

/// How often words split into one, two, or three-plus pieces. Bins
/// always partition the measured word set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GranularityBins {
    pub one: usize,
    pub two: usize,
    pub three_plus: usize,
}

impl GranularityBins {
    fn add(&mut self, n_tokens: usize) {
        match n_tokens {
            0 | 1 => self.one += 1,
            2 => self.two += 1,
            _ => self.three_plus += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.one + self.two + self.three_plus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryFertility {
    pub pairs: usize,
    pub fertility_ame: f64,
    pub fertility_bre: f64,
    /// Relative gap in percent; positive means the tokenizer favors the
    /// American side.
    pub delta_pct: f64,
    /// `None` when every paired difference is zero.
    pub wilcoxon: Option<WilcoxonResult>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilityReport {
    pub per_pair: Vec<PairTokenCounts>,
    /// Keyed by category name; categories without pairs are omitted.
    pub per_category: BTreeMap<String, CategoryFertility>,
    pub delta_o: Option<f64>,
    pub delta_v: Option<f64>,
    pub granularity_ame: GranularityBins,
    pub granularity_bre: GranularityBins,
    pub alpha: f64,
}

/// Macro-averaged subword count per word type. Always at least 1 for
/// words the tokenizer can see.
pub fn fertility<S: AsRef<str>>(
    tok: &SubwordTokenizer,
    words: &[S],
) -> Result<f64, SubwordError> {
    if words.is_empty() {
        return Err(SubwordError::EmptyInput);
    }
    let total: usize = words.iter().map(|w| tok.encode_word(w.as_ref()).len()).sum();
    Ok(total as f64 / words.len() as f64)
}

/// Relative fertility gap in percent. Negative values mean the
/// tokenizer favors the British side. The AmE mean is the baseline, so
/// it must be positive, which fertility guarantees.
pub fn delta_gap(f_ame: f64, f_bre: f64) -> f64 {
    debug_assert!(f_ame > 0.0, "fertility is at least 1");
    100.0 * (f_bre - f_ame) / f_ame
}

pub fn granularity<S: AsRef<str>>(tok: &SubwordTokenizer, words: &[S]) -> GranularityBins {
    let mut bins = GranularityBins::default();
    for w in words {
        bins.add(tok.encode_word(w.as_ref()).len());
    }
    bins
}

/// Encodes both sides of every pair and aggregates fertility, gaps,
/// granularity, and a signed-rank test over paired count differences
/// per category.
pub fn analyze_tokenizer(tok: &SubwordTokenizer, lexicon: &Lexicon) -> FertilityReport {
    let per_pair: Vec<PairTokenCounts> = lexicon
        .pairs()
        .iter()
        .map(|pair| PairTokenCounts {
            pair: pair.clone(),
            n_tokens_ame: tok.encode_word(&pair.ame).len(),
            n_tokens_bre: tok.encode_word(&pair.bre).len(),
        })
        .collect();

    let mut per_category = BTreeMap::new();
    for category in [Category::Orthographic, Category::Vocabulary, Category::Uncategorized] {
        let rows: Vec<&PairTokenCounts> =
            per_pair.iter().filter(|r| r.pair.category == category).collect();
        if rows.is_empty() {
            tracing::warn!(category = category.as_str(), "category has no pairs, omitting");
            continue;
        }
        let n = rows.len() as f64;
        let fertility_ame = rows.iter().map(|r| r.n_tokens_ame as f64).sum::<f64>() / n;
        let fertility_bre = rows.iter().map(|r| r.n_tokens_bre as f64).sum::<f64>() / n;
        let diffs: Vec<f64> =
            rows.iter().map(|r| r.n_tokens_bre as f64 - r.n_tokens_ame as f64).collect();
        let wilcoxon = wilcoxon_signed_rank(&diffs).ok();
        let significant = wilcoxon.as_ref().is_some_and(|w| w.p_value < SIGNIFICANCE_ALPHA);
        per_category.insert(
            category.as_str().to_string(),
            CategoryFertility {
                pairs: rows.len(),
                fertility_ame,
                fertility_bre,
                delta_pct: delta_gap(fertility_ame, fertility_bre),
                wilcoxon,
                significant,
            },
        );
    }

    let mut granularity_ame = GranularityBins::default();
    let mut granularity_bre = GranularityBins::default();
    for r in &per_pair {
        granularity_ame.add(r.n_tokens_ame);
        granularity_bre.add(r.n_tokens_bre);
    }

    FertilityReport {
        delta_o: per_category.get(Category::Orthographic.as_str()).map(|c| c.delta_pct),
        delta_v: per_category.get(Category::Vocabulary.as_str()).map(|c| c.delta_pct),
        granularity_ame,
        granularity_bre,
        per_pair,
        per_category,
        alpha: SIGNIFICANCE_ALPHA,
    }
}
