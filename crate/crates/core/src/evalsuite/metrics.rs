use std::collections::HashMap;

use super::normalize::Normalizer;

/// Predictions shorter than this many normalized tokens qualify for the
/// substring relaxation of refined exact match.
pub const REFINED_MAX_TOKENS: usize = 5;

fn padded(tokens: &[String]) -> String {
    format!(" {} ", tokens.join(" "))
}

/// Whether any gold answer appears in `text` as a whole-token substring,
/// after lowercasing, dropping punctuation and collapsing whitespace.
pub fn answer_recall(text: &str, gold_answers: &[String]) -> bool {
    let hay = padded(&Normalizer::KEEP_ARTICLES.tokens(text));
    contains_any(&hay, gold_answers)
}

/// Same check against text already passed through [`recall_haystack`].
pub fn contains_any(haystack: &str, gold_answers: &[String]) -> bool {
    gold_answers.iter().any(|g| {
        let needle = Normalizer::KEEP_ARTICLES.tokens(g);
        !needle.is_empty() && haystack.contains(&padded(&needle))
    })
}

/// Normalized, space-padded form of a retrieved text for repeated
/// [`contains_any`] checks.
pub fn recall_haystack(text: &str) -> String {
    padded(&Normalizer::KEEP_ARTICLES.tokens(text))
}

/// Whether every gold document is a member of some retrieved unit.
/// `retrieved_members` lists the member doc ids of each retrieved unit.
pub fn doc_recall<S: AsRef<str>>(retrieved_members: &[&[S]], gold_doc_ids: &[String]) -> bool {
    !gold_doc_ids.is_empty()
        && gold_doc_ids.iter().all(|g| {
            retrieved_members
                .iter()
                .any(|unit| unit.iter().any(|m| m.as_ref() == g))
        })
}

pub fn exact_match(prediction: &str, gold_answers: &[String]) -> bool {
    exact_match_with(prediction, gold_answers, &Normalizer::SQUAD)
}

pub fn exact_match_with(prediction: &str, gold_answers: &[String], norm: &Normalizer) -> bool {
    let p = norm.normalize(prediction);
    gold_answers.iter().any(|g| norm.normalize(g) == p)
}

/// Exact match, or, for predictions under five tokens, gold and prediction
/// containing one another after normalization.
pub fn refined_exact_match(prediction: &str, gold_answers: &[String]) -> bool {
    refined_exact_match_with(prediction, gold_answers, &Normalizer::SQUAD)
}

pub fn refined_exact_match_with(prediction: &str, gold_answers: &[String], norm: &Normalizer) -> bool {
    if exact_match_with(prediction, gold_answers, norm) {
        return true;
    }
    let tokens = norm.tokens(prediction);
    if tokens.is_empty() || tokens.len() >= REFINED_MAX_TOKENS {
        return false;
    }
    let p = tokens.join(" ");
    gold_answers.iter().any(|g| {
        let g = norm.normalize(g);
        !g.is_empty() && (p.contains(&g) || g.contains(&p))
    })
}

/// Bag-of-tokens F1, best over the gold answers. Articles are kept by
/// default so that short answers made of single letters still count.
pub fn token_f1(prediction: &str, gold_answers: &[String]) -> f64 {
    token_f1_with(prediction, gold_answers, &Normalizer::KEEP_ARTICLES)
}

pub fn token_f1_with(prediction: &str, gold_answers: &[String], norm: &Normalizer) -> f64 {
    let pred = norm.tokens(prediction);
    gold_answers
        .iter()
        .map(|g| f1_tokens(&pred, &norm.tokens(g)))
        .fold(0.0, f64::max)
}

fn f1_tokens(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in pred {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn answer_recall_cases() {
        assert!(answer_recall("... in Paris, France ...", &g(&["Paris"])));
        assert!(!answer_recall("in Lyon, France", &g(&["Paris"])));
        assert!(answer_recall("troops from the US arrived", &g(&["U.S."])));
        // whole tokens only
        assert!(!answer_recall("because", &g(&["US"])));
        assert!(!answer_recall("anything", &g(&["..."])));
    }

    #[test]
    fn doc_recall_cases() {
        let u1: &[&str] = &["A", "B"];
        let u2: &[&str] = &["C"];
        assert!(doc_recall(&[u1], &g(&["A", "B"])));
        assert!(!doc_recall(&[u1], &g(&["A", "C"])));
        let mut units: Vec<&[&str]> = vec![&["x"]; 8];
        units[0] = u1;
        units[6] = u2;
        assert!(doc_recall(&units, &g(&["A", "C"])));
        assert!(!doc_recall(&[u1], &[]));
    }

    #[test]
    fn exact_match_cases() {
        assert!(exact_match("The Eiffel Tower", &g(&["Eiffel Tower"])));
        assert!(!exact_match("Paris, France", &g(&["Paris"])));
        assert!(!exact_match("", &g(&["Paris"])));
    }

    #[test]
    fn refined_cases() {
        assert!(refined_exact_match("Indianapolis", &g(&["Indianapolis , Indiana"])));
        assert!(refined_exact_match("September 29, 2018", &g(&["2018"])));
        assert!(!refined_exact_match(
            "the answer is clearly Indianapolis Indiana area",
            &g(&["Indianapolis"])
        ));
        assert!(!refined_exact_match("", &g(&["Paris"])));
    }

    #[test]
    fn f1_cases() {
        assert_eq!(token_f1("a b", &g(&["b c"])), 0.5);
        assert_eq!(token_f1("Eiffel Tower", &g(&["eiffel tower"])), 1.0);
        assert_eq!(token_f1("x y", &g(&["z"])), 0.0);
        assert_eq!(token_f1("", &g(&[""])), 1.0);
        assert_eq!(token_f1("", &g(&["z"])), 0.0);
        assert_eq!(token_f1("z", &g(&["q", "z"])), 1.0);
        // repeated tokens count as a multiset
        assert!((token_f1("a a b", &g(&["a b b"])) - 2.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn f1_symmetric_for_single_gold(a in "[a-d ]{0,12}", b in "[a-d ]{0,12}") {
            prop_assert_eq!(token_f1(&a, std::slice::from_ref(&b)), token_f1(&b, &[a]));
        }

        #[test]
        fn f1_in_unit_interval(a in "\\PC{0,20}", b in "\\PC{0,20}") {
            let f = token_f1(&a, &[b]);
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
