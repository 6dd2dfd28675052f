#![allow(dead_code)]

pub mod http_stub;
pub mod oracle;

use std::path::PathBuf;

use longrag::corpus::{Corpus, Document};
use rand::Rng;

pub fn toy_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/toy"))
}

/// A random corpus: `(doc_id, token_count, out_links)` plus the matching
/// `Corpus`. Links may point at ids outside the corpus.
pub struct RandomCorpus {
    pub spec: Vec<(String, usize, Vec<String>)>,
    pub corpus: Corpus,
}

pub fn random_corpus(rng: &mut impl Rng, max_docs: usize, max_tokens: usize) -> RandomCorpus {
    let n = rng.random_range(1..=max_docs);
    // shuffled ids so file order differs from id order
    let mut ids: Vec<String> = (0..n).map(|i| format!("doc{i:03}")).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let density = rng.random_range(0.0..0.3);
    let mut spec = Vec::with_capacity(n);
    for id in &ids {
        let tokens = rng.random_range(1..=max_tokens);
        let mut links = Vec::new();
        for other in &ids {
            if other != id && rng.random_bool(density) {
                links.push(other.clone());
            }
        }
        if rng.random_bool(0.1) {
            links.push(format!("missing{}", rng.random_range(0..5)));
        }
        spec.push((id.clone(), tokens, links));
    }
    let corpus = Corpus::from_documents(spec.iter().map(|(id, t, links)| {
        Document::new(id.clone(), id.clone(), vec!["w"; *t].join(" "), links.clone())
    }))
    .unwrap();
    RandomCorpus { spec, corpus }
}
