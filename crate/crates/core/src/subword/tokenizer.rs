//! Subword tokenizer loading and deterministic word encoding.
//!
//! Two segmentation strategies are supported: ranked-merge application
//! (BPE style) when merge rules are present, and greedy longest-prefix
//! matching against the vocabulary when they are not.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubwordError {
    #[error("empty word list")]
    EmptyInput,
    #[error("tokenizer file {path}: {reason}")]
    Load { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    Lowercase,
}

/// Word-boundary convention baked into the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryMarker {
    None,
    /// Sentinel prepended to word-initial pieces (such as "\u{2581}" or
    /// "\u{0120}").
    Prefix(String),
}

/// One unit of a segmentation. `id` is `None` for fallback pieces that
/// the vocabulary cannot cover; their text is kept verbatim so decoding
/// still round-trips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    pub id: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct SubwordTokenizer {
    vocab: HashMap<String, u32>,
    merges: HashMap<(String, String), u32>,
    normalization: Normalization,
    boundary: BoundaryMarker,
    apply_marker: bool,
}

/// Combined single-file description.
#[derive(Deserialize)]
struct TokenizerFile {
    vocab: HashMap<String, u32>,
    #[serde(default)]
    merges: Vec<String>,
    #[serde(default)]
    normalization: Normalization,
    #[serde(default)]
    boundary_marker: Option<String>,
}

fn detect_marker(vocab: &HashMap<String, u32>) -> BoundaryMarker {
    for sentinel in ["\u{2581}", "\u{0120}"] {
        if vocab.keys().any(|k| k.starts_with(sentinel)) {
            return BoundaryMarker::Prefix(sentinel.to_string());
        }
    }
    BoundaryMarker::None
}

fn parse_merge_line(line: &str) -> Option<(String, String)> {
    let mut fields = line.split(' ');
    match (fields.next(), fields.next(), fields.next()) {
        (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
            Some((a.to_string(), b.to_string()))
        }
        _ => None,
    }
}

impl SubwordTokenizer {
    /// Merge ranks follow list order: earlier rules apply first.
    pub fn new(
        vocab: HashMap<String, u32>,
        merges: Vec<(String, String)>,
        normalization: Normalization,
        boundary: BoundaryMarker,
    ) -> SubwordTokenizer {
        let apply_marker = matches!(boundary, BoundaryMarker::Prefix(_));
        let merges =
            merges.into_iter().enumerate().map(|(rank, pair)| (pair, rank as u32)).collect();
        SubwordTokenizer { vocab, merges, normalization, boundary, apply_marker }
    }

    /// Overrides whether `encode_word` prepends the boundary marker.
    /// The default is to apply one whenever the vocabulary declares it.
    pub fn marker_applied(mut self, apply: bool) -> SubwordTokenizer {
        self.apply_marker = apply;
        self
    }

    /// Loads a vocabulary JSON object plus a ranked merges file
    /// (one "left right" rule per line, `#`-prefixed header allowed).
    pub fn from_files(vocab_path: &Path, merges_path: &Path) -> Result<SubwordTokenizer, SubwordError> {
        let raw = fs::read_to_string(vocab_path)?;
        let vocab: HashMap<String, u32> =
            serde_json::from_str(&raw).map_err(|e| SubwordError::Load {
                path: vocab_path.to_path_buf(),
                reason: format!("expected a JSON object of piece to id: {e}"),
            })?;
        let raw = fs::read_to_string(merges_path)?;
        let mut merges = Vec::new();
        for (lineno, line) in raw.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match parse_merge_line(line) {
                Some(rule) => merges.push(rule),
                None => {
                    return Err(SubwordError::Load {
                        path: merges_path.to_path_buf(),
                        reason: format!("line {}: expected two space-separated pieces", lineno + 1),
                    })
                }
            }
        }
        let boundary = detect_marker(&vocab);
        Ok(SubwordTokenizer::new(vocab, merges, Normalization::None, boundary))
    }

    pub fn from_json_file(path: &Path) -> Result<SubwordTokenizer, SubwordError> {
        let raw = fs::read_to_string(path)?;
        Self::from_json(&raw, path)
    }

    pub fn from_json_str(raw: &str) -> Result<SubwordTokenizer, SubwordError> {
        Self::from_json(raw, Path::new("<inline>"))
    }

    fn from_json(raw: &str, origin: &Path) -> Result<SubwordTokenizer, SubwordError> {
        let file: TokenizerFile = serde_json::from_str(raw).map_err(|e| SubwordError::Load {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut merges = Vec::with_capacity(file.merges.len());
        for (i, line) in file.merges.iter().enumerate() {
            match parse_merge_line(line) {
                Some(rule) => merges.push(rule),
                None => {
                    return Err(SubwordError::Load {
                        path: origin.to_path_buf(),
                        reason: format!("merge {i}: expected two space-separated pieces"),
                    })
                }
            }
        }
        let boundary = match file.boundary_marker {
            Some(m) if !m.is_empty() => BoundaryMarker::Prefix(m),
            Some(_) => BoundaryMarker::None,
            None => detect_marker(&file.vocab),
        };
        Ok(SubwordTokenizer::new(file.vocab, merges, file.normalization, boundary))
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    pub fn boundary(&self) -> &BoundaryMarker {
        &self.boundary
    }

    /// Segments one word in word-initial position under the tokenizer's
    /// default marker convention. Always yields at least one piece for a
    /// nonempty word.
    pub fn encode_word(&self, word: &str) -> Vec<Piece> {
        self.encode_word_with(word, self.apply_marker)
    }

    pub fn encode_word_with(&self, word: &str, apply_marker: bool) -> Vec<Piece> {
        debug_assert!(!word.is_empty(), "encode_word expects a nonempty word");
        let normalized = match self.normalization {
            Normalization::Lowercase => word.to_lowercase(),
            Normalization::None => word.to_string(),
        };
        let effective = match (&self.boundary, apply_marker) {
            (BoundaryMarker::Prefix(m), true) => format!("{m}{normalized}"),
            _ => normalized,
        };
        if effective.is_empty() {
            return Vec::new();
        }
        if self.merges.is_empty() {
            self.longest_prefix_pieces(&effective)
        } else {
            self.merge_pieces(&effective)
        }
    }

    /// Inverse of `encode_word` up to the declared normalization.
    pub fn decode(&self, pieces: &[Piece]) -> String {
        let joined: String = pieces.iter().map(|p| p.text.as_str()).collect();
        match &self.boundary {
            BoundaryMarker::Prefix(m) => joined.replace(m.as_str(), " ").trim_start().to_string(),
            BoundaryMarker::None => joined,
        }
    }

    /// Repeatedly merges the adjacent pair with the lowest rank, all
    /// occurrences at once, until no rule applies.
    fn merge_pieces(&self, effective: &str) -> Vec<Piece> {
        let mut parts: Vec<String> = effective.chars().map(|c| c.to_string()).collect();
        loop {
            let mut best: Option<(u32, (String, String))> = None;
            for window in parts.windows(2) {
                let key = (window[0].clone(), window[1].clone());
                if let Some(&rank) = self.merges.get(&key) {
                    if best.as_ref().is_none_or(|(r, _)| rank < *r) {
                        best = Some((rank, key));
                    }
                }
            }
            let Some((_, (left, right))) = best else { break };
            let mut merged = Vec::with_capacity(parts.len());
            let mut i = 0;
            while i < parts.len() {
                if i + 1 < parts.len() && parts[i] == left && parts[i + 1] == right {
                    merged.push(format!("{left}{right}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut parts[i]));
                    i += 1;
                }
            }
            parts = merged;
        }
        parts
            .into_iter()
            .map(|text| {
                let id = self.vocab.get(&text).copied();
                Piece { text, id }
            })
            .collect()
    }

    /// Greedy longest vocabulary prefix; uncoverable characters become
    /// single-character fallback pieces.
    fn longest_prefix_pieces(&self, effective: &str) -> Vec<Piece> {
        let mut out = Vec::new();
        let mut rest = effective;
        while !rest.is_empty() {
            let boundaries: Vec<usize> =
                rest.char_indices().map(|(i, c)| i + c.len_utf8()).collect();
            let hit = boundaries
                .iter()
                .rev()
                .find_map(|&end| self.vocab.get(&rest[..end]).map(|&id| (end, id)));
            match hit {
                Some((end, id)) => {
                    out.push(Piece { text: rest[..end].to_string(), id: Some(id) });
                    rest = &rest[end..];
                }
                None => {
                    let c = rest.chars().next().expect("rest is nonempty");
                    out.push(Piece { text: c.to_string(), id: None });
                    rest = &rest[c.len_utf8()..];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn vocab_of(pieces: &[&str]) -> HashMap<String, u32> {
        pieces.iter().enumerate().map(|(i, p)| (p.to_string(), i as u32)).collect()
    }

    fn char_vocab() -> HashMap<String, u32> {
        ('a'..='z').enumerate().map(|(i, c)| (c.to_string(), i as u32)).collect()
    }

    fn texts(tok: &SubwordTokenizer, word: &str) -> Vec<String> {
        tok.encode_word(word).into_iter().map(|p| p.text).collect()
    }

    #[test]
    fn whole_word_vocabulary_entry_is_one_token() {
        let tok = SubwordTokenizer::new(
            vocab_of(&["color"]),
            Vec::new(),
            Normalization::None,
            BoundaryMarker::None,
        );
        let pieces = tok.encode_word("color");
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0], Piece { text: "color".into(), id: Some(0) });
    }

    #[test]
    fn toy_merges_apply_in_rank_order() {
        // c+o then co+l fixes the segmentation of "colr" as [col, r]
        let tok = SubwordTokenizer::new(
            vocab_of(&["c", "o", "l", "r", "co", "col"]),
            vec![("c".into(), "o".into()), ("co".into(), "l".into())],
            Normalization::None,
            BoundaryMarker::None,
        );
        assert_eq!(texts(&tok, "colr"), ["col", "r"]);
    }

    #[test]
    fn chosen_merge_applies_to_all_occurrences() {
        let tok = SubwordTokenizer::new(
            vocab_of(&["a", "aa"]),
            vec![("a".into(), "a".into())],
            Normalization::None,
            BoundaryMarker::None,
        );
        assert_eq!(texts(&tok, "aaaa"), ["aa", "aa"]);
    }

    #[test]
    fn longest_prefix_fallback_splits_without_merges() {
        let tok = SubwordTokenizer::new(
            vocab_of(&["colo", "ur", "c", "o", "l", "u", "r"]),
            Vec::new(),
            Normalization::None,
            BoundaryMarker::None,
        );
        assert_eq!(texts(&tok, "colour"), ["colo", "ur"]);
    }

    #[test]
    fn uncoverable_characters_fall_back_to_unknown_pieces() {
        let tok = SubwordTokenizer::new(
            char_vocab(),
            Vec::new(),
            Normalization::Lowercase,
            BoundaryMarker::None,
        );
        let pieces = tok.encode_word("naïve");
        assert!(pieces.iter().any(|p| p.text == "ï" && p.id.is_none()));
        assert_eq!(tok.decode(&pieces), "naïve");
    }

    #[test]
    fn declared_marker_is_applied_word_initially_and_stripped_on_decode() {
        let tok = SubwordTokenizer::new(
            vocab_of(&["\u{0120}color", "color"]),
            Vec::new(),
            Normalization::None,
            BoundaryMarker::Prefix("\u{0120}".into()),
        );
        let pieces = tok.encode_word("color");
        assert_eq!(pieces[0].text, "\u{0120}color");
        assert_eq!(tok.decode(&pieces), "color");
        let bare = tok.encode_word_with("color", false);
        assert_eq!(bare[0].text, "color");
    }

    #[test]
    fn round_trip_over_random_lexicon_words() {
        let lex = crate::lexicon::Lexicon::seed();
        let words: Vec<&str> = lex.words().collect();
        let tok = SubwordTokenizer::new(
            char_vocab(),
            vec![("e".into(), "r".into()), ("o".into(), "u".into())],
            Normalization::Lowercase,
            BoundaryMarker::None,
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let w = words[rng.random_range(0..words.len())];
            let pieces = tok.encode_word(w);
            assert!(!pieces.is_empty());
            assert_eq!(tok.decode(&pieces), w);
        }
    }

    #[test]
    fn file_pair_loader_reads_vocab_and_ranked_merges() {
        let dir = tempfile::tempdir().unwrap();
        let vocab_path = dir.path().join("vocab.json");
        let merges_path = dir.path().join("merges.txt");
        std::fs::write(&vocab_path, r#"{"c":0,"o":1,"l":2,"r":3,"co":4,"col":5}"#).unwrap();
        std::fs::write(&merges_path, "#version: 0.2\nc o\nco l\n").unwrap();
        let tok = SubwordTokenizer::from_files(&vocab_path, &merges_path).unwrap();
        assert_eq!(tok.vocab_size(), 6);
        assert_eq!(tok.merge_count(), 2);
        assert_eq!(texts(&tok, "colr"), ["col", "r"]);
    }

    #[test]
    fn malformed_merge_line_is_a_load_error() {
        let dir = tempfile::tempdir().unwrap();
        let vocab_path = dir.path().join("vocab.json");
        let merges_path = dir.path().join("merges.txt");
        std::fs::write(&vocab_path, r#"{"a":0}"#).unwrap();
        std::fs::write(&merges_path, "a b c\n").unwrap();
        let err = SubwordTokenizer::from_files(&vocab_path, &merges_path).unwrap_err();
        assert!(matches!(err, SubwordError::Load { .. }));
    }

    #[test]
    fn combined_json_loader_honors_declared_fields() {
        let raw = r#"{
            "vocab": {"A": 0, "a": 1, "b": 2, "ab": 3},
            "merges": ["a b"],
            "normalization": "lowercase",
            "boundary_marker": ""
        }"#;
        let tok = SubwordTokenizer::from_json_str(raw).unwrap();
        assert_eq!(texts(&tok, "AB"), ["ab"]);
        assert_eq!(tok.boundary(), &BoundaryMarker::None);
    }

    #[test]
    fn marker_is_detected_from_vocabulary_keys() {
        let tok = SubwordTokenizer::from_json_str(
            r#"{"vocab": {"▁color": 0, "c": 1, "o": 2, "l": 3, "r": 4, "▁": 5}}"#,
        )
        .unwrap();
        assert_eq!(tok.boundary(), &BoundaryMarker::Prefix("\u{2581}".into()));
        let pieces = tok.encode_word("color");
        assert_eq!(pieces[0].text, "\u{2581}color");
    }

    #[test]
    fn nonempty_words_never_encode_to_zero_pieces() {
        let tok = SubwordTokenizer::new(
            HashMap::new(),
            Vec::new(),
            Normalization::None,
            BoundaryMarker::None,
        );
        // empty vocabulary still yields per-character fallback pieces
        let pieces = tok.encode_word("xyz");
        assert_eq!(pieces.len(), 3);
        assert!(pieces.iter().all(|p| p.id.is_none()));
        assert_eq!(tok.decode(&pieces), "xyz");
    }
}
