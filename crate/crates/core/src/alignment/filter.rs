//! N-gram filtering: drop grams touching named entities and grams made
//! entirely of stopwords.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::tokenize::Token;

/// Marks tokens that look like named entities. Implementations see the
/// whole token sequence so positional casing can inform the decision.
/// Swap in a real NER behind this trait when parity with one matters.
pub trait EntityDetector: Send + Sync {
    fn flag_tokens(&self, tokens: &[Token]) -> Vec<bool>;
}

/// Default detector. A token is an entity when its lowercase form is in
/// the bundled gazetteer (catches "barack obama" even after
/// lowercasing), or when it is capitalized mid-sentence and not
/// explainable as a stopword, contraction of "I", or acronym-shaped
/// all-caps emphasis.
#[derive(Debug, Default, Clone, Copy)]
pub struct HeuristicDetector;

impl EntityDetector for HeuristicDetector {
    fn flag_tokens(&self, tokens: &[Token]) -> Vec<bool> {
        let gazetteer = crate::data::gazetteer();
        let stopwords = crate::data::stopword_set();
        tokens
            .iter()
            .map(|t| {
                gazetteer.contains(t.text.as_str())
                    || (t.titlecase
                        && !t.all_caps
                        && !t.sentence_initial
                        && t.text.len() > 1
                        && !stopwords.contains(t.text.as_str())
                        && !t.text.starts_with("i'"))
            })
            .collect()
    }
}

/// Detector that never flags anything; for callers that pre-strip
/// entities or deliberately skip the filter.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoEntityDetector;

impl EntityDetector for NoEntityDetector {
    fn flag_tokens(&self, tokens: &[Token]) -> Vec<bool> {
        vec![false; tokens.len()]
    }
}

/// Half-open token range identifying one extracted n-gram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GramSpan {
    pub start: usize,
    pub len: usize,
}

impl GramSpan {
    pub fn words(&self, tokens: &[Token]) -> Vec<String> {
        tokens[self.start..self.start + self.len]
            .iter()
            .map(|t| t.text.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterTallies {
    pub entity: usize,
    pub stopword: usize,
}

/// Drops grams that contain an entity token or consist exclusively of
/// stopwords. A gram hitting both rules tallies as an entity discard;
/// the checks run in that order.
pub fn filter_ngrams(
    tokens: &[Token],
    grams: &[GramSpan],
    stopwords: &HashSet<&str>,
    detector: &dyn EntityDetector,
) -> (Vec<GramSpan>, FilterTallies) {
    let entity_flags = detector.flag_tokens(tokens);
    let stop_flags: Vec<bool> =
        tokens.iter().map(|t| stopwords.contains(t.text.as_str())).collect();
    let mut retained = Vec::with_capacity(grams.len());
    let mut tallies = FilterTallies::default();
    for &g in grams {
        let range = g.start..g.start + g.len;
        if entity_flags[range.clone()].iter().any(|&f| f) {
            tallies.entity += 1;
        } else if stop_flags[range].iter().all(|&f| f) {
            tallies.stopword += 1;
        } else {
            retained.push(g);
        }
    }
    (retained, tallies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::tokenize::tokenize;

    fn all_spans(tokens: &[Token], n: usize) -> Vec<GramSpan> {
        (0..tokens.len().saturating_sub(n - 1))
            .map(|start| GramSpan { start, len: n })
            .collect()
    }

    #[test]
    fn all_stopword_grams_are_discarded() {
        let toks = tokenize("in the");
        let (kept, tallies) = filter_ngrams(
            &toks,
            &all_spans(&toks, 2),
            crate::data::stopword_set(),
            &HeuristicDetector,
        );
        assert!(kept.is_empty());
        assert_eq!(tallies, FilterTallies { entity: 0, stopword: 1 });
    }

    #[test]
    fn gazetteer_entities_are_caught_even_lowercased() {
        let toks = tokenize("barack obama said");
        let (kept, tallies) = filter_ngrams(
            &toks,
            &all_spans(&toks, 3),
            crate::data::stopword_set(),
            &HeuristicDetector,
        );
        assert!(kept.is_empty());
        assert_eq!(tallies.entity, 1);
    }

    #[test]
    fn plain_content_grams_are_retained() {
        let toks = tokenize("fizzy drink");
        let (kept, tallies) = filter_ngrams(
            &toks,
            &all_spans(&toks, 2),
            crate::data::stopword_set(),
            &HeuristicDetector,
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(tallies, FilterTallies::default());
    }

    #[test]
    fn midsentence_capitalization_flags_unknown_names() {
        // "Pemberley" is in no gazetteer; casing alone must catch it.
        let toks = tokenize("we toured Pemberley yesterday");
        let flags = HeuristicDetector.flag_tokens(&toks);
        assert_eq!(flags, [false, false, true, false]);
        // Sentence-initial position explains the capital away.
        let toks = tokenize("Pemberley was closed");
        let flags = HeuristicDetector.flag_tokens(&toks);
        assert_eq!(flags, [false, false, false]);
    }

    #[test]
    fn capitalized_function_words_are_not_entities() {
        let toks = tokenize("she said I've finished And left");
        let flags = HeuristicDetector.flag_tokens(&toks);
        assert!(!flags.iter().any(|&f| f), "{flags:?}");
    }

    #[test]
    fn entity_tally_wins_over_stopword_tally() {
        // "the" + gazetteer "london": both rules could claim it.
        let toks = tokenize("in the london");
        let spans = [GramSpan { start: 0, len: 3 }];
        let (kept, tallies) =
            filter_ngrams(&toks, &spans, crate::data::stopword_set(), &HeuristicDetector);
        assert!(kept.is_empty());
        assert_eq!(tallies, FilterTallies { entity: 1, stopword: 0 });
    }

    #[test]
    fn no_entity_detector_disables_that_rule() {
        let toks = tokenize("barack obama said");
        let (kept, tallies) = filter_ngrams(
            &toks,
            &all_spans(&toks, 3),
            crate::data::stopword_set(),
            &NoEntityDetector,
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(tallies.entity, 0);
    }
}
