//! Document corpus with its hyperlink graph.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub text: String,
    pub out_links: Vec<String>,
}

/// One line of a corpus file. Unknown fields are ignored.
#[derive(Debug, Deserialize)]
struct DocumentRecord {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    links: Option<Vec<String>>,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        text: impl Into<String>,
        out_links: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        let doc_id = doc_id.into();
        let out_links = clean_links(&doc_id, out_links.into_iter().map(Into::into));
        Self {
            doc_id,
            title: title.into(),
            text: text.into(),
            out_links,
        }
    }
}

/// Drops self links and repeated targets, keeping first-occurrence order.
fn clean_links(own_id: &str, links: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    links
        .filter(|l| l != own_id && seen.insert(l.clone()))
        .collect()
}

/// Documents in file order with an id index. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut corpus = Corpus::default();
        for doc in docs {
            corpus.push(doc)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, doc: Document) -> Result<()> {
        if doc.doc_id.is_empty() {
            return Err(Error::Data("document id must be non-empty".into()));
        }
        if self.index.contains_key(&doc.doc_id) {
            return Err(Error::DuplicateId(doc.doc_id));
        }
        self.index.insert(doc.doc_id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.index.contains_key(doc_id)
    }

    /// Position of a document in file order.
    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    /// Out links of `doc` that resolve to members of this corpus.
    pub fn resolvable_links<'a>(&'a self, doc: &'a Document) -> impl Iterator<Item = &'a str> {
        doc.out_links
            .iter()
            .map(String::as_str)
            .filter(|t| self.contains(t))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

/// Parses a line-delimited JSON corpus.
pub fn parse_corpus(input: &str) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocumentRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.id.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "empty document id".into(),
            });
        }
        corpus.push(Document::new(
            rec.id,
            rec.title,
            rec.text,
            rec.links.unwrap_or_default(),
        ))?;
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&raw)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub resolvable: usize,
    pub dangling: usize,
    pub dangling_pairs: Vec<(String, String)>,
}

/// Counts links by whether their target exists. Nothing is removed.
pub fn validate_links(corpus: &Corpus) -> LinkReport {
    let mut report = LinkReport::default();
    for doc in corpus {
        for target in &doc.out_links {
            if corpus.contains(target) {
                report.resolvable += 1;
            } else {
                report.dangling += 1;
                report
                    .dangling_pairs
                    .push((doc.doc_id.clone(), target.clone()));
            }
        }
    }
    report
}
