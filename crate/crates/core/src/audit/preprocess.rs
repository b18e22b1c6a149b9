//! Seven-step corpus cleaning pipeline. The step order is part of the
//! contract: downstream counts are only comparable when every corpus went
//! through the identical trace.

use once_cell::sync::Lazy;
use regex::Regex;

static HTML_TAG: Lazy<Regex> = Lazy::new(|| Regex::new(r"<[^>]*>").unwrap());
// Scheme-prefixed URLs plus bare www. hosts; conservative on purpose.
static URL: Lazy<Regex> = Lazy::new(|| Regex::new(r"[a-z][a-z0-9+.-]*://\S+|www\.\S+").unwrap());
static EMAIL: Lazy<Regex> = Lazy::new(|| Regex::new(r"[a-z0-9._%+-]+@[a-z0-9.-]+\.[a-z]+").unwrap());

/// Cleans raw document text in a fixed order: lowercase; drop HTML tags,
/// URLs, and emails; drop non-ASCII characters; split on hyphens and
/// slashes; blank every remaining non-alphabetic character; collapse
/// whitespace; trim. Idempotent.
pub fn preprocess(text: &str) -> String {
    // 1. case folding first so the strip patterns stay lowercase-only
    let text = text.to_lowercase();
    // 2. markup and addresses
    let text = HTML_TAG.replace_all(&text, " ");
    let text = URL.replace_all(&text, " ");
    let text = EMAIL.replace_all(&text, " ");
    // 3. non-ASCII is deleted outright, not blanked ("café" counts as "caf")
    let text: String = text.chars().filter(char::is_ascii).collect();
    // 4-5. hyphen/slash splits, then everything outside a-z becomes a space
    let text: String = text
        .chars()
        .map(|c| match c {
            '-' | '/' => ' ',
            'a'..='z' | ' ' => c,
            _ => ' ',
        })
        .collect();
    // 6-7. collapse runs of whitespace and trim the ends
    let mut out = String::with_capacity(text.len());
    for word in text.split_ascii_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_urls_and_punctuation() {
        assert_eq!(preprocess("Visit http://x.com NOW!"), "visit now");
    }

    #[test]
    fn splits_hyphens_and_slashes_and_drops_non_ascii() {
        assert_eq!(preprocess("well-being and/or caf\u{e9}"), "well being and or caf");
    }

    #[test]
    fn strips_html_tags_and_emails() {
        assert_eq!(
            preprocess("<p>Contact <b>us</b>: sales@example.co.uk today</p>"),
            "contact us today"
        );
    }

    #[test]
    fn strips_bare_www_hosts() {
        assert_eq!(preprocess("see www.example.org/page for more"), "see for more");
    }

    #[test]
    fn digits_become_spaces() {
        assert_eq!(preprocess("room 101 has 2kettles"), "room has kettles");
    }

    #[test]
    fn empty_and_whitespace_only_inputs() {
        assert_eq!(preprocess(""), "");
        assert_eq!(preprocess("   \t\n "), "");
    }

    #[test]
    fn idempotent_on_already_clean_text() {
        let once = preprocess("The COLOUR of money & the colour of law.");
        assert_eq!(preprocess(&once), once);
    }
}
