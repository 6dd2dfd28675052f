//! Token counting shared by grouping budgets, chunking and context budgets.

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenScheme {
    /// Maximal runs of non-whitespace characters.
    #[default]
    Whitespace,
    /// Unicode word-boundary segments holding at least one alphanumeric char.
    UnicodeWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    None,
    Lowercase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub scheme: TokenScheme,
    pub normalization: Normalization,
}

/// Byte range of one token inside its source text.
pub type ByteSpan = (usize, usize);

/// Byte offsets of every token in `text`, in order.
pub fn token_spans(text: &str, cfg: &TokenizerConfig) -> Vec<ByteSpan> {
    match cfg.scheme {
        TokenScheme::Whitespace => whitespace_spans(text),
        TokenScheme::UnicodeWord => text
            .split_word_bound_indices()
            .filter(|(_, w)| w.chars().any(char::is_alphanumeric))
            .map(|(start, w)| (start, start + w.len()))
            .collect(),
    }
}

fn whitespace_spans(text: &str) -> Vec<ByteSpan> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

pub fn count_tokens(text: &str, cfg: &TokenizerConfig) -> usize {
    match cfg.scheme {
        TokenScheme::Whitespace => text.split_whitespace().count(),
        TokenScheme::UnicodeWord => token_spans(text, cfg).len(),
    }
}

/// Token strings after the configured normalization.
pub fn tokens(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    token_spans(text, cfg)
        .into_iter()
        .map(|(s, e)| match cfg.normalization {
            Normalization::None => text[s..e].to_string(),
            Normalization::Lowercase => text[s..e].to_lowercase(),
        })
        .collect()
}
