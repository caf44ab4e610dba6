//! Pluggable sources of next-token logits.
//!
//! The decode engine only needs a [`TokenScorer`]: something that owns a
//! vocabulary and maps a token-id context to one logit per vocabulary entry.
//! Two implementations ship here: a trainable n-gram model
//! ([`ngram::NGramModel`]) that stands in for a large language model at desk
//! scale, and a client for a remote logit endpoint ([`remote::RemoteScorer`])
//! so real model backends can be plugged in without bundling one.

pub mod ngram;
pub mod remote;

use crate::error::{Error, Result};
use crate::logits::LogitVector;
use crate::corpus::Document;
use crate::vocab::{TokenId, Vocabulary};

/// Reserved token string for out-of-vocabulary words.
pub const UNK_TOKEN: &str = "<unk>";
/// Reserved token string marking end of sequence.
pub const EOS_TOKEN: &str = "</s>";

/// Behavioral contract for next-token scorers.
///
/// `next_logits` must be a pure function of the context: the same context
/// always yields the same vector, with exactly one entry per vocabulary id.
pub trait TokenScorer {
    fn vocabulary(&self) -> &Vocabulary;

    fn next_logits(&self, context: &[TokenId]) -> Result<LogitVector>;

    /// End-of-sequence id, when the scorer has one.
    fn eos_id(&self) -> Option<TokenId> {
        self.vocabulary().id_of(EOS_TOKEN)
    }

    /// Id unknown words map to during tokenization, when the scorer has one.
    fn unk_id(&self) -> Option<TokenId> {
        self.vocabulary().id_of(UNK_TOKEN)
    }

    /// Whether `next_logits` may be invoked from several threads at once.
    fn concurrent_safe(&self) -> bool;
}

/// Splits text into lowercase word and punctuation tokens.
///
/// Words are whitespace-separated; ASCII punctuation characters become
/// single-character tokens of their own, so `"Good movie!"` yields
/// `["good", "movie", "!"]`.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else if ch.is_ascii_punctuation() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            out.push(ch.to_string());
        } else {
            current.extend(ch.to_lowercase());
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn is_punctuation_token(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(|c| c.is_ascii_punctuation())
}

/// Maps text to vocabulary ids. Words missing from the vocabulary map to
/// `unk` when one is given and are dropped otherwise.
pub fn tokenize(vocab: &Vocabulary, unk: Option<TokenId>, text: &str) -> Vec<TokenId> {
    word_tokens(text)
        .into_iter()
        .filter_map(|tok| vocab.id_of(&tok).or(unk))
        .collect()
}

/// Joins tokens with single spaces, attaching punctuation tokens to the
/// preceding token without a space.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for tok in tokens {
        let tok = tok.as_ref();
        if !out.is_empty() && !is_punctuation_token(tok) {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Renders token ids back into text: tokens join with single spaces and
/// punctuation tokens attach to the preceding token without a space, so
/// `tokenize` followed by `detokenize` is the identity up to that spacing
/// rule.
pub fn detokenize(vocab: &Vocabulary, ids: &[TokenId]) -> String {
    let toks: Vec<&str> = ids.iter().filter_map(|&id| vocab.token(id)).collect();
    join_tokens(&toks)
}

/// Placeholder that [`generate_prompt`] substitutes with the document text.
pub const PROMPT_PLACEHOLDER: &str = "{doc}";

/// Instantiates a prompt template with a document.
///
/// The template must contain the `{doc}` placeholder exactly once.
pub fn generate_prompt(doc: &Document, template: &str) -> Result<String> {
    let count = template.matches(PROMPT_PLACEHOLDER).count();
    if count != 1 {
        return Err(Error::InvalidInput(format!(
            "template must contain {PROMPT_PLACEHOLDER} exactly once, found {count}"
        )));
    }
    Ok(template.replace(PROMPT_PLACEHOLDER, &doc.text))
}
