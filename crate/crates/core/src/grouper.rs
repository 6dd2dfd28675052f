//! Packs documents into long retrieval units.
//!
//! The grouping pass walks documents from the least to the most linked one.
//! Each document opens a fresh group and then absorbs the existing groups
//! that hold any of its linked documents, smallest first, as long as the
//! combined token count stays within the budget. Documents are never split,
//! so a document that alone exceeds the budget becomes its own unit.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tokenize::{count_tokens, token_spans, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalUnit {
    pub unit_id: String,
    pub member_doc_ids: Vec<String>,
    pub token_count: usize,
    /// Token range `[start, end)` of the single member document, for
    /// passage units. Absent when the unit covers whole documents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupingMode {
    #[default]
    Group,
    WholeDocument,
    Passage,
}

impl std::str::FromStr for GroupingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "group" => Ok(GroupingMode::Group),
            "whole-document" => Ok(GroupingMode::WholeDocument),
            "passage" => Ok(GroupingMode::Passage),
            other => Err(Error::Config(format!("unknown grouping mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for GroupingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupingMode::Group => "group",
            GroupingMode::WholeDocument => "whole-document",
            GroupingMode::Passage => "passage",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupingConfig {
    pub mode: GroupingMode,
    /// Token budget per group in `group` mode.
    pub max_tokens: usize,
    /// Treat links as undirected when looking for related documents.
    pub symmetric: bool,
    /// Passage length in tokens for `passage` mode.
    pub passage_tokens: usize,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            mode: GroupingMode::Group,
            max_tokens: 4_000,
            symmetric: false,
            passage_tokens: 100,
        }
    }
}

fn unit_id(prefix: char, n: usize) -> String {
    format!("{prefix}{n:08}")
}

/// Resolvable related documents per corpus position.
fn related_positions(corpus: &Corpus, symmetric: bool) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = corpus
        .iter()
        .map(|d| {
            corpus
                .resolvable_links(d)
                .filter_map(|t| corpus.position(t))
                .collect()
        })
        .collect();
    if symmetric {
        let forward = adj.clone();
        for (src, targets) in forward.iter().enumerate() {
            for &t in targets {
                if !adj[t].contains(&src) {
                    adj[t].push(src);
                }
            }
        }
    }
    adj
}

/// Number of resolvable out links per document. Dangling links do not count.
pub fn compute_degrees(corpus: &Corpus) -> HashMap<String, usize> {
    degrees_with(corpus, false)
}

pub fn degrees_with(corpus: &Corpus, symmetric: bool) -> HashMap<String, usize> {
    related_positions(corpus, symmetric)
        .into_iter()
        .zip(corpus)
        .map(|(adj, d)| (d.doc_id.clone(), adj.len()))
        .collect()
}

struct Group {
    members: Vec<usize>,
    tokens: usize,
}

pub fn group_documents(
    corpus: &Corpus,
    cfg: &GroupingConfig,
    tok: &TokenizerConfig,
) -> Result<Vec<RetrievalUnit>> {
    if cfg.max_tokens == 0 {
        return Err(Error::Config("max_tokens must be positive".into()));
    }
    let docs = corpus.documents();
    let sizes: Vec<usize> = docs.iter().map(|d| count_tokens(&d.text, tok)).collect();
    let adj = related_positions(corpus, cfg.symmetric);

    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by(|&a, &b| {
        adj[a]
            .len()
            .cmp(&adj[b].len())
            .then_with(|| docs[a].doc_id.cmp(&docs[b].doc_id))
    });

    // Indexed by creation sequence; merged groups become None.
    let mut groups: Vec<Option<Group>> = Vec::with_capacity(docs.len());
    let mut owner: Vec<Option<usize>> = vec![None; docs.len()];

    for d in order {
        let mut related: Vec<usize> = adj[d].iter().filter_map(|&r| owner[r]).collect();
        related.sort_unstable();
        related.dedup();
        related.sort_by_key(|&seq| (groups[seq].as_ref().map_or(0, |g| g.tokens), seq));

        let mut fresh = Group {
            members: vec![d],
            tokens: sizes[d],
        };
        for seq in related {
            let fits = groups[seq]
                .as_ref()
                .is_some_and(|g| fresh.tokens + g.tokens <= cfg.max_tokens);
            if fits {
                let g = groups[seq].take().expect("checked above");
                fresh.members.extend(g.members);
                fresh.tokens += g.tokens;
            }
        }
        let seq = groups.len();
        for &m in &fresh.members {
            owner[m] = Some(seq);
        }
        groups.push(Some(fresh));
    }

    Ok(groups
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(n, g)| RetrievalUnit {
            unit_id: unit_id('g', n),
            member_doc_ids: g.members.iter().map(|&m| docs[m].doc_id.clone()).collect(),
            token_count: g.tokens,
            span: None,
        })
        .collect())
}

pub fn units_from_whole_documents(corpus: &Corpus, tok: &TokenizerConfig) -> Vec<RetrievalUnit> {
    corpus
        .iter()
        .enumerate()
        .map(|(n, d)| RetrievalUnit {
            unit_id: unit_id('d', n),
            member_doc_ids: vec![d.doc_id.clone()],
            token_count: count_tokens(&d.text, tok),
            span: None,
        })
        .collect()
}

/// Splits every document into consecutive passages of `passage_tokens`.
/// An empty document still yields one zero-token unit so that every
/// document belongs to some unit.
pub fn units_from_passages(
    corpus: &Corpus,
    passage_tokens: usize,
    tok: &TokenizerConfig,
) -> Result<Vec<RetrievalUnit>> {
    if passage_tokens == 0 {
        return Err(Error::Config("passage_tokens must be positive".into()));
    }
    let mut units = Vec::new();
    for d in corpus {
        let n = token_spans(&d.text, tok).len();
        let mut start = 0;
        loop {
            let end = (start + passage_tokens).min(n);
            units.push(RetrievalUnit {
                unit_id: unit_id('p', units.len()),
                member_doc_ids: vec![d.doc_id.clone()],
                token_count: end - start,
                span: Some((start, end)),
            });
            start = end;
            if start >= n {
                break;
            }
        }
    }
    Ok(units)
}

pub fn build_units(
    corpus: &Corpus,
    cfg: &GroupingConfig,
    tok: &TokenizerConfig,
) -> Result<Vec<RetrievalUnit>> {
    match cfg.mode {
        GroupingMode::Group => group_documents(corpus, cfg, tok),
        GroupingMode::WholeDocument => Ok(units_from_whole_documents(corpus, tok)),
        GroupingMode::Passage => units_from_passages(corpus, cfg.passage_tokens, tok),
    }
}

/// Id of the unit containing `doc_id`. In passage mode, where a document
/// spans several units, this is the first one.
pub fn unit_of<'a>(units: &'a [RetrievalUnit], doc_id: &str) -> Result<&'a str> {
    units
        .iter()
        .find(|u| u.member_doc_ids.iter().any(|m| m == doc_id))
        .map(|u| u.unit_id.as_str())
        .ok_or_else(|| Error::NotFound(format!("document {doc_id} is in no unit")))
}

/// Units with lookup by id.
#[derive(Debug, Clone, Default)]
pub struct UnitSet {
    units: Vec<RetrievalUnit>,
    by_id: HashMap<String, usize>,
}

impl UnitSet {
    pub fn new(units: Vec<RetrievalUnit>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(units.len());
        for (i, u) in units.iter().enumerate() {
            if by_id.insert(u.unit_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(u.unit_id.clone()));
            }
        }
        Ok(Self { units, by_id })
    }

    pub fn get(&self, unit_id: &str) -> Option<&RetrievalUnit> {
        self.by_id.get(unit_id).map(|&i| &self.units[i])
    }

    pub fn contains(&self, unit_id: &str) -> bool {
        self.by_id.contains_key(unit_id)
    }

    pub fn units(&self) -> &[RetrievalUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

pub fn write_units(units: &[RetrievalUnit]) -> String {
    let mut out = String::new();
    for u in units {
        out.push_str(&serde_json::to_string(u).expect("unit serializes"));
        out.push('\n');
    }
    out
}

pub fn read_units(path: impl AsRef<Path>) -> Result<Vec<RetrievalUnit>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut units = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let unit: RetrievalUnit = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        units.push(unit);
    }
    Ok(units)
}
