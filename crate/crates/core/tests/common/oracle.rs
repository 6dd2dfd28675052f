//! Reference implementations written directly from the algorithm
//! descriptions, independent of the library code paths they check.

use std::collections::{BTreeMap, HashSet};

/// Literal transcription of the grouping algorithm: groups are a plain
/// list scanned linearly, sizes are recomputed from scratch each time.
/// Returns member lists of the surviving groups in creation order.
pub fn group_documents(docs: &[(String, usize, Vec<String>)], budget: usize) -> Vec<Vec<String>> {
    let present: HashSet<&str> = docs.iter().map(|d| d.0.as_str()).collect();
    let tokens = |id: &str| docs.iter().find(|d| d.0 == id).unwrap().1;
    let adj = |id: &str| -> Vec<String> {
        docs.iter()
            .find(|d| d.0 == id)
            .unwrap()
            .2
            .iter()
            .filter(|r| present.contains(r.as_str()))
            .cloned()
            .collect()
    };

    let mut order: Vec<String> = docs.iter().map(|d| d.0.clone()).collect();
    order.sort_by(|a, b| adj(a).len().cmp(&adj(b).len()).then(a.cmp(b)));

    // (creation sequence, members)
    let mut groups: Vec<(usize, Vec<String>)> = Vec::new();
    for (next_seq, d) in order.into_iter().enumerate() {
        let mut related: Vec<usize> = Vec::new();
        for r in adj(&d) {
            for (seq, g) in &groups {
                if g.contains(&r) && !related.contains(seq) {
                    related.push(*seq);
                }
            }
        }
        let size_of = |members: &[String]| members.iter().map(|m| tokens(m)).sum::<usize>();
        let mut fresh = vec![d.clone()];
        related.sort_by_key(|seq| {
            let g = &groups.iter().find(|(s, _)| s == seq).unwrap().1;
            (size_of(g), *seq)
        });
        for seq in related {
            let pos = groups.iter().position(|(s, _)| *s == seq).unwrap();
            if size_of(&fresh) + size_of(&groups[pos].1) <= budget {
                let (_, g) = groups.remove(pos);
                fresh.extend(g);
            }
        }
        groups.push((next_seq, fresh));
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Brute-force MaxP: score every chunk with a naive loop, take the max per
/// unit, sort by score descending then unit id.
pub fn maxp_top_k(
    rows: &[Vec<f32>],
    unit_of_row: &[String],
    query: &[f32],
    k: usize,
) -> Vec<(String, f64)> {
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for (row, unit) in rows.iter().zip(unit_of_row) {
        let mut s = 0f64;
        for j in 0..query.len() {
            s += row[j] as f64 * query[j] as f64;
        }
        let e = best.entry(unit.clone()).or_insert(f64::NEG_INFINITY);
        if s > *e {
            *e = s;
        }
    }
    let mut all: Vec<(String, f64)> = best.into_iter().collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Lowercase, drop ASCII punctuation, split on whitespace.
fn plain_tokens(s: &str) -> Vec<String> {
    s.to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Whether `needle`'s tokens occur contiguously inside `hay`'s tokens.
pub fn token_window_match(hay: &str, needle: &str) -> bool {
    let h = plain_tokens(hay);
    let n = plain_tokens(needle);
    !n.is_empty() && h.windows(n.len()).any(|w| w == n.as_slice())
}

/// Fixed-size whitespace windows of a text, joined back with single spaces.
pub fn windows(text: &str, size: usize) -> Vec<String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    words.chunks(size).map(|c| c.join(" ")).collect()
}
