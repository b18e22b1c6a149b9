//! Fixed word tokenizer for scoring input. One golden tokenization keeps
//! every downstream number reproducible, so this stays deliberately dumb:
//! alphanumeric runs with internal apostrophes, lowercased, with enough
//! positional context preserved for the entity heuristic.

/// A word token plus the casing/position facts the entity heuristic
/// needs from the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased form; what scoring and lookups use.
    pub text: String,
    /// First character was uppercase in the source.
    pub titlecase: bool,
    /// Every cased character was uppercase and the token is longer than
    /// one character (acronym shape).
    pub all_caps: bool,
    /// First token of the text or of a new sentence.
    pub sentence_initial: bool,
}

/// Splits text into word tokens: maximal alphanumeric runs, keeping
/// apostrophes between alphanumerics ("don't", "i've"). Curly quotes
/// normalize to ASCII apostrophes. Sentence starts are tracked across
/// `.`, `!`, `?` and line breaks.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut sentence_initial = true;
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            if matches!(chars[i], '.' | '!' | '?' | '\n' | '\r') {
                sentence_initial = true;
            }
            i += 1;
            continue;
        }
        let start = i;
        let mut raw = String::new();
        while i < chars.len() {
            let c = normalize_apostrophe(chars[i]);
            if c.is_alphanumeric() {
                raw.push(c);
                i += 1;
            } else if c == '\''
                && i > start
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
            {
                raw.push('\'');
                i += 1;
            } else {
                break;
            }
        }
        let first_upper = raw.chars().next().is_some_and(char::is_uppercase);
        let cased: Vec<char> = raw.chars().filter(|c| c.is_alphabetic()).collect();
        let all_caps = raw.chars().count() > 1
            && !cased.is_empty()
            && cased.iter().all(|c| c.is_uppercase());
        tokens.push(Token {
            text: raw.to_lowercase(),
            titlecase: first_upper,
            all_caps,
            sentence_initial,
        });
        sentence_initial = false;
    }
    tokens
}

/// Just the lowercased token texts.
pub fn tokenize_words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

fn normalize_apostrophe(c: char) -> char {
    if c == '\u{2019}' {
        '\''
    } else {
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(text: &str) -> Vec<String> {
        tokenize_words(text)
    }

    #[test]
    fn lowercases_and_strips_punctuation() {
        assert_eq!(words("The team are winning."), ["the", "team", "are", "winning"]);
        assert_eq!(words("Hello, world!"), ["hello", "world"]);
    }

    #[test]
    fn empty_text_yields_no_tokens() {
        assert!(words("").is_empty());
        assert!(words("  ...  ").is_empty());
    }

    #[test]
    fn contractions_stay_whole() {
        assert_eq!(words("I've just eaten"), ["i've", "just", "eaten"]);
        assert_eq!(words("don\u{2019}t panic"), ["don't", "panic"]);
    }

    #[test]
    fn dangling_apostrophes_are_stripped() {
        assert_eq!(words("the dogs' dinner"), ["the", "dogs", "dinner"]);
        assert_eq!(words("'ello there"), ["ello", "there"]);
    }

    #[test]
    fn digits_are_token_material() {
        assert_eq!(words("est. 2022 onwards"), ["est", "2022", "onwards"]);
    }

    #[test]
    fn sentence_boundaries_are_tracked() {
        let toks = tokenize("Paris is big. London is bigger!\nOxford too");
        let initials: Vec<(&str, bool)> =
            toks.iter().map(|t| (t.text.as_str(), t.sentence_initial)).collect();
        assert_eq!(
            initials,
            [
                ("paris", true),
                ("is", false),
                ("big", false),
                ("london", true),
                ("is", false),
                ("bigger", false),
                ("oxford", true),
                ("too", false),
            ]
        );
    }

    #[test]
    fn casing_flags_survive_lowercasing() {
        let toks = tokenize("We met Obama at NASA today");
        let by_text = |s: &str| toks.iter().find(|t| t.text == s).unwrap();
        assert!(by_text("obama").titlecase && !by_text("obama").all_caps);
        assert!(by_text("nasa").all_caps);
        assert!(!by_text("today").titlecase);
        // "We" is titlecase only because it opens the sentence
        assert!(by_text("we").titlecase && by_text("we").sentence_initial);
    }

    #[test]
    fn tokenization_is_deterministic() {
        let text = "Mixed CASE, punctuation... and 'quotes'!";
        assert_eq!(tokenize(text), tokenize(text));
    }
}
