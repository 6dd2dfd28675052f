use serde::{Deserialize, Serialize};

use super::index::ScoredUnit;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::grouper::{RetrievalUnit, UnitSet};
use crate::tokenize::{token_spans, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDocument {
    pub doc_id: String,
    pub title: String,
    pub text: String,
}

/// Concatenation of the top-ranked units handed to the reader.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalContext {
    pub unit_ids: Vec<String>,
    pub documents: Vec<ContextDocument>,
    pub text: String,
    pub total_tokens: usize,
}

impl RetrievalContext {
    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// One document as a title field followed by a text field.
pub fn render_document(title: &str, text: &str) -> String {
    format!("\"Title\": {title} \"Text\": {text}")
}

/// Member documents of a unit, cut to the unit's token span if it has one.
pub fn unit_documents(
    unit: &RetrievalUnit,
    corpus: &Corpus,
    tok: &TokenizerConfig,
) -> Result<Vec<ContextDocument>> {
    unit.member_doc_ids
        .iter()
        .map(|id| {
            let doc = corpus
                .get(id)
                .ok_or_else(|| Error::NotFound(format!("unit {} member {id}", unit.unit_id)))?;
            let text = match unit.span {
                None => doc.text.clone(),
                Some((lo, hi)) if lo >= hi => String::new(),
                Some((lo, hi)) => {
                    let spans = token_spans(&doc.text, tok);
                    if hi > spans.len() {
                        return Err(Error::Data(format!(
                            "unit {} span exceeds document {id}",
                            unit.unit_id
                        )));
                    }
                    doc.text[spans[lo].0..spans[hi - 1].1].to_string()
                }
            };
            Ok(ContextDocument {
                doc_id: id.clone(),
                title: doc.title.clone(),
                text,
            })
        })
        .collect()
}

/// Renders `scored` units in order. With a budget, whole units are dropped
/// from the tail until the total fits, but the first unit is always kept.
pub fn aggregate_context(
    scored: &[ScoredUnit],
    units: &UnitSet,
    corpus: &Corpus,
    budget_tokens: Option<usize>,
    tok: &TokenizerConfig,
) -> Result<RetrievalContext> {
    let picked: Vec<&RetrievalUnit> = scored
        .iter()
        .map(|s| {
            units
                .get(&s.unit_id)
                .ok_or_else(|| Error::NotFound(format!("unit {}", s.unit_id)))
        })
        .collect::<Result<_>>()?;

    let mut keep = picked.len();
    let mut total: usize = picked.iter().map(|u| u.token_count).sum();
    if let Some(budget) = budget_tokens {
        while keep > 1 && total > budget {
            keep -= 1;
            total -= picked[keep].token_count;
        }
    }

    let mut documents = Vec::new();
    for unit in &picked[..keep] {
        documents.extend(unit_documents(unit, corpus, tok)?);
    }
    let text = documents
        .iter()
        .map(|d| render_document(&d.title, &d.text))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(RetrievalContext {
        unit_ids: picked[..keep].iter().map(|u| u.unit_id.clone()).collect(),
        documents,
        text,
        total_tokens: total,
    })
}
