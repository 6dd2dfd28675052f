use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::grouper::RetrievalUnit;
use crate::tokenize::{token_spans, TokenizerConfig};

/// Window length used to split units before embedding. `Whole` embeds each
/// member document in one piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkSize {
    Tokens(usize),
    Whole,
}

impl Default for ChunkSize {
    fn default() -> Self {
        ChunkSize::Tokens(512)
    }
}

impl fmt::Display for ChunkSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChunkSize::Tokens(n) => write!(f, "{n}"),
            ChunkSize::Whole => f.write_str("whole"),
        }
    }
}

impl FromStr for ChunkSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "whole" {
            return Ok(ChunkSize::Whole);
        }
        s.parse::<usize>()
            .map(ChunkSize::Tokens)
            .map_err(|_| Error::Config(format!("chunk size must be a token count or \"whole\", got {s:?}")))
    }
}

impl Serialize for ChunkSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ChunkSize::Tokens(n) => s.serialize_u64(*n as u64),
            ChunkSize::Whole => s.serialize_str("whole"),
        }
    }
}

impl<'de> Deserialize<'de> for ChunkSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Tokens(u64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Tokens(n) => Ok(ChunkSize::Tokens(n as usize)),
            Repr::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub unit_id: String,
    pub doc_id: String,
    pub text: String,
    /// `[start, end)` in source document tokens.
    pub token_span: (usize, usize),
}

/// Tiles each member document of each unit into non-overlapping windows.
/// The last window of a document may be shorter; empty documents give none.
pub fn chunk_units(
    units: &[RetrievalUnit],
    corpus: &Corpus,
    chunk_size: ChunkSize,
    tok: &TokenizerConfig,
) -> Result<Vec<Chunk>> {
    if chunk_size == ChunkSize::Tokens(0) {
        return Err(Error::Config("chunk_size must be positive".into()));
    }
    let mut chunks = Vec::new();
    for unit in units {
        let mut ordinal = 0;
        for doc_id in &unit.member_doc_ids {
            let doc = corpus
                .get(doc_id)
                .ok_or_else(|| Error::NotFound(format!("unit {} member {doc_id}", unit.unit_id)))?;
            let spans = token_spans(&doc.text, tok);
            let (lo, hi) = unit.span.unwrap_or((0, spans.len()));
            if lo > hi || hi > spans.len() {
                return Err(Error::Data(format!(
                    "unit {} span {lo}..{hi} exceeds document {doc_id} ({} tokens)",
                    unit.unit_id,
                    spans.len()
                )));
            }
            let width = match chunk_size {
                ChunkSize::Tokens(n) => n,
                ChunkSize::Whole => usize::MAX,
            };
            let mut start = lo;
            while start < hi {
                let end = start.saturating_add(width).min(hi);
                chunks.push(Chunk {
                    chunk_id: format!("{}#{ordinal}", unit.unit_id),
                    unit_id: unit.unit_id.clone(),
                    doc_id: doc_id.clone(),
                    text: doc.text[spans[start].0..spans[end - 1].1].to_string(),
                    token_span: (start, end),
                });
                ordinal += 1;
                start = end;
            }
        }
    }
    Ok(chunks)
}
