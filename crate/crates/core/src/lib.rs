//! Measures American-vs-British English skew across a text pipeline.
//!
//! The crate scores arbitrary text for dialectal alignment from n-gram
//! frequency divergence ([`alignment`]), audits corpora for variant
//! imbalance ([`audit`]), quantifies subword tokenizer segmentation
//! disparity between dialect forms ([`subword`]), and evaluates the
//! dialect preference of text generation endpoints ([`geneval`]).
//! Frequencies come from a Google-Books-Ngram-style HTTP endpoint with
//! a persistent disk cache ([`ngram`]); variant pairs live in a
//! classified lexicon ([`lexicon`]).

pub mod alignment;
pub mod audit;
pub mod data;
pub mod geneval;
pub mod lexicon;
pub mod ngram;
pub mod retry;
pub mod subword;
