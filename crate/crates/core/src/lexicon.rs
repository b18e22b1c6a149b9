//! American/British variant pairs: loading, validation, the ten-group
//! classifier, and the membership index used by the scoring boost and the
//! corpus audit counters.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Broad class of a variant pair. Derived from the group, never stored
/// independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Orthographic,
    Vocabulary,
    Uncategorized,
}

impl Category {
    /// Groups 1..=8 are spelling-level contrasts, 9 is distinct lexical
    /// items, 10 is the (unreachable) fallback.
    pub fn from_group(group: u8) -> Category {
        match group {
            1..=8 => Category::Orthographic,
            9 => Category::Vocabulary,
            _ => Category::Uncategorized,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Orthographic => "orthographic",
            Category::Vocabulary => "vocabulary",
            Category::Uncategorized => "uncategorized",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One strict one-to-one AmE/BrE word mapping with its classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantPair {
    pub ame: String,
    pub bre: String,
    pub group: u8,
    pub category: Category,
}

/// Which side of a pair a word sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Ame,
    Bre,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("row {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error("not a lowercase alphabetic word: {0:?}")]
    NotAWord(String),
    #[error("identical forms on both sides: {0:?}")]
    IdenticalForms(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Malformed-row handling for [`load_lexicon`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// First malformed row aborts the load.
    Strict,
    /// Malformed rows are counted and skipped with a warning.
    Skip,
}

/// Immutable after load; share freely across threads.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pairs: Vec<VariantPair>,
    // word -> every (pair index, side) it appears on; a word may sit on
    // both sides of different pairs.
    index: HashMap<String, Vec<(u32, Side)>>,
    rows_skipped: usize,
}

impl Lexicon {
    /// The bundled seed lexicon (~85 pairs).
    pub fn seed() -> Lexicon {
        load_lexicon(crate::data::SEED_LEXICON_TSV.as_bytes(), LoadMode::Strict)
            .expect("bundled seed lexicon is valid")
    }

    pub fn pairs(&self) -> &[VariantPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Rows dropped during a `LoadMode::Skip` load.
    pub fn rows_skipped(&self) -> usize {
        self.rows_skipped
    }

    /// True iff `token` equals the AmE or BrE side of any pair.
    /// Callers must lowercase first; a cased query is a contract
    /// violation, not a miss.
    pub fn contains_variant(&self, token: &str) -> bool {
        debug_assert!(
            !token.chars().any(|c| c.is_uppercase()),
            "contains_variant requires a lowercased token, got {token:?}"
        );
        self.index.contains_key(token)
    }

    /// Every (pair index, side) slot `token` occupies. Empty when the
    /// token is not in the lexicon.
    pub fn occurrences(&self, token: &str) -> &[(u32, Side)] {
        self.index.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All distinct words across both sides.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn has_pair(&self, ame: &str, bre: &str) -> bool {
        self.occurrences(ame)
            .iter()
            .any(|&(i, side)| side == Side::Ame && self.pairs[i as usize].bre == bre)
    }

    /// Adds `other`'s pairs, dropping exact (ame, bre) duplicates.
    pub fn merge(&mut self, other: Lexicon) {
        for pair in other.pairs {
            if !self.has_pair(&pair.ame, &pair.bre) {
                self.push_pair(pair);
            }
        }
        self.rows_skipped += other.rows_skipped;
    }

    fn push_pair(&mut self, pair: VariantPair) {
        let idx = self.pairs.len() as u32;
        self.index
            .entry(pair.ame.clone())
            .or_default()
            .push((idx, Side::Ame));
        self.index
            .entry(pair.bre.clone())
            .or_default()
            .push((idx, Side::Bre));
        self.pairs.push(pair);
    }
}

/// Assigns a pair to the first matching of ten mutually exclusive groups,
/// checked in order:
///
///  1. AmE `-or` / BrE `-our`, same stem
///  2. `-ize` / `-ise`
///  3. `-er` / `-re`
///  4. `-og` / `-ogue`
///  5. one side equals the other with a single existing `l` doubled
///  6. `-ense` / `-ence`
///  7. a BrE `ae` digraph collapses to AmE `e`
///  8. equal length and Levenshtein distance 1 or 2
///  9. different lengths or distance above 2
/// 10. fallback (unreachable for valid input; kept so the procedure is
///     total by construction)
pub fn classify_pair(ame: &str, bre: &str) -> Result<(u8, Category), LexiconError> {
    validate_word(ame)?;
    validate_word(bre)?;
    if ame == bre {
        return Err(LexiconError::IdenticalForms(ame.to_string()));
    }
    let group = classify_valid(ame, bre);
    Ok((group, Category::from_group(group)))
}

fn classify_valid(ame: &str, bre: &str) -> u8 {
    if suffix_swap(ame, bre, "or", "our") {
        1
    } else if suffix_swap(ame, bre, "ize", "ise") {
        2
    } else if suffix_swap(ame, bre, "er", "re") {
        3
    } else if suffix_swap(ame, bre, "og", "ogue") {
        4
    } else if doubles_one_l(ame, bre) || doubles_one_l(bre, ame) {
        5
    } else if suffix_swap(ame, bre, "ense", "ence") {
        6
    } else if ae_collapses_to_e(ame, bre) {
        7
    } else {
        let d = levenshtein(ame, bre);
        if ame.len() == bre.len() && (1..=2).contains(&d) {
            8
        } else if ame.len() != bre.len() || d > 2 {
            9
        } else {
            10
        }
    }
}

// Both sides carry their dialect's suffix and share a nonempty stem.
fn suffix_swap(ame: &str, bre: &str, ame_suffix: &str, bre_suffix: &str) -> bool {
    match (ame.strip_suffix(ame_suffix), bre.strip_suffix(bre_suffix)) {
        (Some(sa), Some(sb)) => !sa.is_empty() && sa == sb,
        _ => false,
    }
}

// `long` equals `short` with exactly one of short's existing `l`
// occurrences doubled. Checked in both directions by the caller since
// either dialect may carry the doubled form (traveller vs enroll).
fn doubles_one_l(short: &str, long: &str) -> bool {
    if long.len() != short.len() + 1 {
        return false;
    }
    let (s, l) = (short.as_bytes(), long.as_bytes());
    (0..s.len()).any(|i| {
        s[i] == b'l' && l[..=i] == s[..=i] && l[i + 1] == b'l' && l[i + 2..] == s[i + 1..]
    })
}

// Some BrE "ae" digraph, replaced by "e", yields the AmE form.
fn ae_collapses_to_e(ame: &str, bre: &str) -> bool {
    if ame.len() + 1 != bre.len() {
        return false;
    }
    let (a, b) = (ame.as_bytes(), bre.as_bytes());
    (0..b.len() - 1).any(|i| {
        b[i] == b'a' && b[i + 1] == b'e' && a[..i] == b[..i] && a[i] == b'e' && a[i + 1..] == b[i + 2..]
    })
}

/// Standard unit-cost edit distance. Symmetric; 0 iff the words are equal.
pub fn levenshtein(a: &str, b: &str) -> usize {
    if a == b {
        return 0;
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

fn validate_word(w: &str) -> Result<(), LexiconError> {
    if w.is_empty() || !w.bytes().all(|b| b.is_ascii_lowercase()) {
        return Err(LexiconError::NotAWord(w.to_string()));
    }
    Ok(())
}

/// Parses rows of `ame<TAB>bre` (or the four-column classified form, whose
/// trailing columns are ignored and recomputed). `#` lines are comments.
/// Rows are lowercased, validated, classified, and deduplicated.
pub fn load_lexicon<R: BufRead>(reader: R, mode: LoadMode) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        match parse_row(&line) {
            Ok(None) => {}
            Ok(Some((ame, bre))) => {
                if !lex.has_pair(&ame, &bre) {
                    let (group, category) = match classify_pair(&ame, &bre) {
                        Ok(g) => g,
                        Err(e) => {
                            row_error(&mut lex, mode, lineno, e.to_string())?;
                            continue;
                        }
                    };
                    lex.push_pair(VariantPair { ame, bre, group, category });
                }
            }
            Err(reason) => row_error(&mut lex, mode, lineno, reason)?,
        }
    }
    Ok(lex)
}

fn row_error(lex: &mut Lexicon, mode: LoadMode, line: usize, reason: String) -> Result<(), LexiconError> {
    match mode {
        LoadMode::Strict => Err(LexiconError::Row { line, reason }),
        LoadMode::Skip => {
            tracing::warn!(line, %reason, "skipping malformed lexicon row");
            lex.rows_skipped += 1;
            Ok(())
        }
    }
}

fn parse_row(line: &str) -> Result<Option<(String, String)>, String> {
    let line = line.trim_end();
    if line.is_empty() || line.trim_start().starts_with('#') {
        return Ok(None);
    }
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 2 && cols.len() != 4 {
        return Err(format!("expected 2 or 4 tab-separated columns, got {}", cols.len()));
    }
    let mut words = [String::new(), String::new()];
    for (slot, cell) in words.iter_mut().zip(&cols[..2]) {
        let cell = cell.trim();
        if cell.split_whitespace().count() != 1 {
            return Err(format!("multi-word cell {cell:?}; only one-to-one word mappings are admitted"));
        }
        *slot = cell.to_lowercase();
    }
    let [ame, bre] = words;
    Ok(Some((ame, bre)))
}

/// Writes the four-column classified TSV: `ame, bre, group, category`.
pub fn serialize_classified<W: Write>(lex: &Lexicon, mut out: W) -> io::Result<()> {
    for p in lex.pairs() {
        writeln!(out, "{}\t{}\t{}\t{}", p.ame, p.bre, p.group, p.category)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group_of(ame: &str, bre: &str) -> u8 {
        classify_pair(ame, bre).unwrap().0
    }

    #[test]
    fn classifies_each_group_exemplar() {
        assert_eq!(classify_pair("color", "colour").unwrap(), (1, Category::Orthographic));
        assert_eq!(group_of("organize", "organise"), 2);
        assert_eq!(group_of("center", "centre"), 3);
        assert_eq!(group_of("dialog", "dialogue"), 4);
        assert_eq!(group_of("traveler", "traveller"), 5);
        assert_eq!(group_of("defense", "defence"), 6);
        assert_eq!(group_of("pediatric", "paediatric"), 7);
        assert_eq!(classify_pair("gray", "grey").unwrap(), (8, Category::Orthographic));
        assert_eq!(classify_pair("elevator", "lift").unwrap(), (9, Category::Vocabulary));
    }

    #[test]
    fn doubled_l_works_in_both_directions() {
        // BrE doubles: traveller. AmE doubles: enroll, fulfill.
        assert_eq!(group_of("traveling", "travelling"), 5);
        assert_eq!(group_of("enroll", "enrol"), 5);
        assert_eq!(group_of("fulfill", "fulfil"), 5);
        assert_eq!(group_of("willfully", "wilfully"), 5);
    }

    #[test]
    fn near_miss_suffixes_fall_through() {
        // -yze/-yse is not -ize/-ise; equal length distance 1 lands in 8.
        assert_eq!(group_of("analyze", "analyse"), 8);
        // practice/practise carries -ice/-ise, not a listed suffix swap.
        assert_eq!(group_of("practice", "practise"), 8);
        // favourite inserts a letter mid-word, no suffix rule fires.
        assert_eq!(group_of("favorite", "favourite"), 9);
        // oe digraph is not ae.
        assert_eq!(group_of("estrogen", "oestrogen"), 9);
    }

    #[test]
    fn equal_length_distant_pairs_are_group_nine() {
        assert_eq!(classify_pair("sidewalk", "pavement").unwrap(), (9, Category::Vocabulary));
        assert_eq!(group_of("truck", "lorry"), 9);
    }

    #[test]
    fn rejects_invalid_words() {
        assert!(matches!(classify_pair("", "colour"), Err(LexiconError::NotAWord(_))));
        assert!(matches!(classify_pair("Color", "colour"), Err(LexiconError::NotAWord(_))));
        assert!(matches!(classify_pair("color", "col our"), Err(LexiconError::NotAWord(_))));
        assert!(matches!(classify_pair("caf\u{e9}", "cafe"), Err(LexiconError::NotAWord(_))));
        assert!(matches!(classify_pair("color", "color"), Err(LexiconError::IdenticalForms(_))));
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("defense", "defence"), 1);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), levenshtein("sitting", "kitten"));
    }

    #[test]
    fn load_dedups_and_indexes() {
        let src = "# comment\ncolor\tcolour\ncolor\tcolour\ncenter\tcentre\n";
        let lex = load_lexicon(src.as_bytes(), LoadMode::Strict).unwrap();
        assert_eq!(lex.len(), 2);
        assert!(lex.contains_variant("colour"));
        assert!(lex.contains_variant("center"));
        assert!(!lex.contains_variant("table"));
        assert_eq!(lex.occurrences("centre"), &[(1, Side::Bre)]);
    }

    #[test]
    fn load_rejects_multiword_rows_in_strict_mode() {
        let src = "parking lot\tcar park\n";
        let err = load_lexicon(src.as_bytes(), LoadMode::Strict).unwrap_err();
        assert!(matches!(err, LexiconError::Row { line: 1, .. }), "{err}");
    }

    #[test]
    fn skip_mode_counts_bad_rows() {
        let src = "color\tcolour\nparking lot\tcar park\nbad row no tab\ncenter\tcentre\n";
        let lex = load_lexicon(src.as_bytes(), LoadMode::Skip).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.rows_skipped(), 2);
    }

    #[test]
    fn load_normalizes_case() {
        let lex = load_lexicon("Color\tColour\n".as_bytes(), LoadMode::Strict).unwrap();
        assert_eq!(lex.pairs()[0].ame, "color");
        assert_eq!(lex.pairs()[0].bre, "colour");
    }

    #[test]
    fn empty_stream_gives_empty_lexicon() {
        let lex = load_lexicon("".as_bytes(), LoadMode::Strict).unwrap();
        assert!(lex.is_empty());
    }

    #[test]
    fn serialize_then_load_is_identity_on_pairs() {
        let lex = Lexicon::seed();
        let mut buf = Vec::new();
        serialize_classified(&lex, &mut buf).unwrap();
        let reloaded = load_lexicon(buf.as_slice(), LoadMode::Strict).unwrap();
        assert_eq!(lex.pairs(), reloaded.pairs());
    }

    #[test]
    fn seed_lexicon_is_classified_and_stable() {
        let lex = Lexicon::seed();
        assert!(lex.len() >= 80, "seed has {} pairs", lex.len());
        for p in lex.pairs() {
            let (group, category) = classify_pair(&p.ame, &p.bre).unwrap();
            assert_eq!((group, category), (p.group, p.category), "{}/{}", p.ame, p.bre);
        }
    }

    #[test]
    fn merge_drops_duplicates() {
        let mut a = load_lexicon("color\tcolour\n".as_bytes(), LoadMode::Strict).unwrap();
        let b = load_lexicon("color\tcolour\ngray\tgrey\n".as_bytes(), LoadMode::Strict).unwrap();
        a.merge(b);
        assert_eq!(a.len(), 2);
        assert!(a.has_pair("gray", "grey"));
    }
}
