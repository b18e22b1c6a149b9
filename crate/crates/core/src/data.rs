//! Bundled word lists, embedded at compile time so every run filters and
//! boosts against the exact same data.

use std::collections::HashSet;

use once_cell::sync::Lazy;

/// Seed variant lexicon shipped with the crate, TSV source text.
pub const SEED_LEXICON_TSV: &str = include_str!("../data/seed_lexicon.tsv");

const STOPWORDS_RAW: &str = include_str!("../data/stopwords_en.txt");
const GAZETTEER_RAW: &str = include_str!("../data/gazetteer_en.txt");

static STOPWORDS: Lazy<HashSet<&'static str>> = Lazy::new(|| parse_word_list(STOPWORDS_RAW));
static GAZETTEER: Lazy<HashSet<&'static str>> = Lazy::new(|| parse_word_list(GAZETTEER_RAW));

/// English stopword set (179 entries), all lowercase.
pub fn stopword_set() -> &'static HashSet<&'static str> {
    &STOPWORDS
}

/// Lowercased given names, places, and organisations used by the default
/// named-entity heuristic.
pub fn gazetteer() -> &'static HashSet<&'static str> {
    &GAZETTEER
}

fn parse_word_list(raw: &'static str) -> HashSet<&'static str> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}
