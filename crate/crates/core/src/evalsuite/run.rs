use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{
    contains_any, doc_recall, exact_match_with, recall_haystack, refined_exact_match_with,
    token_f1_with,
};
use super::normalize::Normalizer;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::grouper::UnitSet;
use crate::retriever::{render_document, unit_documents, ScoredUnit};
use crate::tokenize::TokenizerConfig;

/// Question types that have no span answer and are left out of answer
/// recall when a dataset is tagged.
pub const NON_SPAN_TYPES: &[&str] = &["yes-no", "yes/no", "yesno", "comparison"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    pub question: String,
    #[serde(rename = "answers")]
    pub gold_answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_doc_ids: Vec<String>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub question_type: Option<String>,
}

pub fn parse_cases(input: &str) -> Result<Vec<EvalCase>> {
    let mut cases = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let case: EvalCase = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if case.gold_answers.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("case {} has no gold answers", case.id),
            });
        }
        cases.push(case);
    }
    Ok(cases)
}

pub fn load_cases(path: impl AsRef<Path>) -> Result<Vec<EvalCase>> {
    let path = path.as_ref();
    parse_cases(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Ranked units retrieved for one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub id: String,
    pub question: String,
    pub units: Vec<ScoredUnit>,
}

/// Reader output for one case. `error` is set when the reader gave up; the
/// short answer is then empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub id: String,
    pub long_answer: String,
    pub short_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub denominator: usize,
}

impl Metric {
    fn mean(sum: f64, denominator: usize) -> Self {
        Self {
            value: if denominator == 0 { 0.0 } else { sum / denominator as f64 },
            denominator,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallAtK {
    pub k: usize,
    pub answer_recall: Metric,
    pub doc_recall: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub id: String,
    /// 1-based rank of the first unit holding a gold answer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer_rank: Option<usize>,
    /// 1-based depth at which every gold document has been retrieved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_docs_rank: Option<usize>,
    pub answer_recall_counted: bool,
    pub doc_recall_counted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_exact_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cases: usize,
    pub retrieval: Vec<RecallAtK>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<Metric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_exact_match: Option<Metric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<Metric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_case: Option<Vec<CaseMetrics>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Depths for the recall columns. Empty means 1 through the longest
    /// retrieved list.
    pub ks: Vec<usize>,
    pub em_normalizer: Normalizer,
    pub f1_normalizer: Normalizer,
    pub per_case: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ks: Vec::new(),
            em_normalizer: Normalizer::SQUAD,
            f1_normalizer: Normalizer::KEEP_ARTICLES,
            per_case: true,
        }
    }
}

/// Retrieval output plus what is needed to read the retrieved units.
pub struct RetrievalRun<'a> {
    pub records: &'a [RetrievalRecord],
    pub units: &'a UnitSet,
    pub corpus: &'a Corpus,
    pub tok: TokenizerConfig,
}

fn align<'a, T>(
    cases: &[EvalCase],
    records: &'a [T],
    id_of: impl Fn(&T) -> &str,
    what: &str,
) -> Result<Vec<&'a T>> {
    let mut by_id: HashMap<&str, &T> = HashMap::with_capacity(records.len());
    for r in records {
        if by_id.insert(id_of(r), r).is_some() {
            return Err(Error::Alignment(format!("duplicate {what} for case {}", id_of(r))));
        }
    }
    let aligned = cases
        .iter()
        .map(|c| {
            by_id
                .remove(c.id.as_str())
                .ok_or_else(|| Error::Alignment(format!("no {what} for case {}", c.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(extra) = by_id.keys().min() {
        return Err(Error::Alignment(format!("{what} for unknown case {extra}")));
    }
    Ok(aligned)
}

fn answer_recall_applies(case: &EvalCase, tagged: bool) -> bool {
    !tagged
        || case
            .question_type
            .as_deref()
            .is_none_or(|t| !NON_SPAN_TYPES.contains(&t.to_ascii_lowercase().as_str()))
}

pub fn evaluate_run(
    cases: &[EvalCase],
    retrieval: Option<&RetrievalRun<'_>>,
    answers: Option<&[AnswerRecord]>,
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    if cases.is_empty() {
        return Err(Error::Alignment("no cases to evaluate".into()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = cases.iter().find(|c| !seen.insert(c.id.as_str())) {
        return Err(Error::Alignment(format!("duplicate case id {}", dup.id)));
    }

    let mut per_case: Vec<CaseMetrics> = cases
        .iter()
        .map(|c| CaseMetrics {
            id: c.id.clone(),
            answer_rank: None,
            gold_docs_rank: None,
            answer_recall_counted: false,
            doc_recall_counted: false,
            exact_match: None,
            refined_exact_match: None,
            f1: None,
        })
        .collect();

    let mut recall_columns = Vec::new();
    if let Some(run) = retrieval {
        let aligned = align(cases, run.records, |r| &r.id, "retrieval result")?;
        let tagged = cases.iter().any(|c| c.question_type.is_some());
        let mut haystacks: HashMap<&str, String> = HashMap::new();
        let mut depth = 0;

        for ((case, rec), m) in cases.iter().zip(&aligned).zip(per_case.iter_mut()) {
            depth = depth.max(rec.units.len());
            m.answer_recall_counted = answer_recall_applies(case, tagged);
            m.doc_recall_counted = !case.gold_doc_ids.is_empty();

            let mut members: Vec<&[String]> = Vec::with_capacity(rec.units.len());
            for (rank, scored) in rec.units.iter().enumerate() {
                let unit = run
                    .units
                    .get(&scored.unit_id)
                    .ok_or_else(|| Error::NotFound(format!("retrieved unit {}", scored.unit_id)))?;
                members.push(&unit.member_doc_ids);

                if m.answer_recall_counted && m.answer_rank.is_none() {
                    if !haystacks.contains_key(unit.unit_id.as_str()) {
                        let text = unit_documents(unit, run.corpus, &run.tok)?
                            .iter()
                            .map(|d| render_document(&d.title, &d.text))
                            .collect::<Vec<_>>()
                            .join("\n");
                        haystacks.insert(&unit.unit_id, recall_haystack(&text));
                    }
                    if contains_any(&haystacks[unit.unit_id.as_str()], &case.gold_answers) {
                        m.answer_rank = Some(rank + 1);
                    }
                }
                if m.doc_recall_counted
                    && m.gold_docs_rank.is_none()
                    && doc_recall(&members, &case.gold_doc_ids)
                {
                    m.gold_docs_rank = Some(rank + 1);
                }
            }
        }

        let ks: Vec<usize> = if cfg.ks.is_empty() {
            (1..=depth).collect()
        } else {
            cfg.ks.clone()
        };
        for k in ks {
            let hit = |rank: Option<usize>| rank.is_some_and(|r| r <= k);
            let ar = per_case.iter().filter(|m| m.answer_recall_counted);
            let dr = per_case.iter().filter(|m| m.doc_recall_counted);
            recall_columns.push(RecallAtK {
                k,
                answer_recall: Metric::mean(
                    ar.clone().filter(|m| hit(m.answer_rank)).count() as f64,
                    ar.count(),
                ),
                doc_recall: Metric::mean(
                    dr.clone().filter(|m| hit(m.gold_docs_rank)).count() as f64,
                    dr.count(),
                ),
            });
        }
    }

    let (mut em, mut rem, mut f1) = (None, None, None);
    if let Some(answers) = answers {
        let aligned = align(cases, answers, |a| &a.id, "answer")?;
        let (mut em_sum, mut rem_sum, mut f1_sum) = (0.0, 0.0, 0.0);
        for ((case, ans), m) in cases.iter().zip(aligned).zip(per_case.iter_mut()) {
            let pred = ans.short_answer.as_str();
            let e = exact_match_with(pred, &case.gold_answers, &cfg.em_normalizer);
            let r = refined_exact_match_with(pred, &case.gold_answers, &cfg.em_normalizer);
            let f = token_f1_with(pred, &case.gold_answers, &cfg.f1_normalizer);
            em_sum += f64::from(u8::from(e));
            rem_sum += f64::from(u8::from(r));
            f1_sum += f;
            m.exact_match = Some(e);
            m.refined_exact_match = Some(r);
            m.f1 = Some(f);
        }
        em = Some(Metric::mean(em_sum, cases.len()));
        rem = Some(Metric::mean(rem_sum, cases.len()));
        f1 = Some(Metric::mean(f1_sum, cases.len()));
    }

    Ok(MetricsReport {
        cases: cases.len(),
        retrieval: recall_columns,
        exact_match: em,
        refined_exact_match: rem,
        f1,
        per_case: cfg.per_case.then_some(per_case),
    })
}

pub const TSV_HEADER: &str = "k\tanswer_recall\tanswer_recall_n\tdoc_recall\tdoc_recall_n\texact_match\trefined_exact_match\tf1\tcases";

fn fmt_opt(m: Option<Metric>) -> String {
    m.map_or_else(String::new, |m| format!("{:.6}", m.value))
}

/// One row per recall depth. End-to-end metrics repeat on every row; with
/// no recall columns a single row with an empty `k` is written.
pub fn report_tsv_rows(report: &MetricsReport) -> Vec<String> {
    let tail = format!(
        "{}\t{}\t{}\t{}",
        fmt_opt(report.exact_match),
        fmt_opt(report.refined_exact_match),
        fmt_opt(report.f1),
        report.cases
    );
    if report.retrieval.is_empty() {
        return vec![format!("\t\t\t\t\t{tail}")];
    }
    report
        .retrieval
        .iter()
        .map(|r| {
            format!(
                "{}\t{:.6}\t{}\t{:.6}\t{}\t{tail}",
                r.k,
                r.answer_recall.value,
                r.answer_recall.denominator,
                r.doc_recall.value,
                r.doc_recall.denominator
            )
        })
        .collect()
}

pub fn report_tsv(report: &MetricsReport) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for row in report_tsv_rows(report) {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::grouper::RetrievalUnit;

    fn case(id: &str, answers: &[&str], golds: &[&str], ty: Option<&str>) -> EvalCase {
        EvalCase {
            id: id.into(),
            question: format!("question {id}"),
            gold_answers: answers.iter().map(|s| s.to_string()).collect(),
            gold_doc_ids: golds.iter().map(|s| s.to_string()).collect(),
            question_type: ty.map(str::to_string),
        }
    }

    fn fixture() -> (Corpus, UnitSet) {
        let corpus = Corpus::from_documents([
            Document::new("A", "Paris", "Paris is in France", Vec::<String>::new()),
            Document::new("B", "Rome", "Rome is in Italy", Vec::<String>::new()),
            Document::new("C", "Oslo", "Oslo is in Norway", Vec::<String>::new()),
        ])
        .unwrap();
        let units = UnitSet::new(vec![
            RetrievalUnit {
                unit_id: "u0".into(),
                member_doc_ids: vec!["A".into(), "B".into()],
                token_count: 8,
                span: None,
            },
            RetrievalUnit {
                unit_id: "u1".into(),
                member_doc_ids: vec!["C".into()],
                token_count: 4,
                span: None,
            },
        ])
        .unwrap();
        (corpus, units)
    }

    fn rec(id: &str, units: &[&str]) -> RetrievalRecord {
        RetrievalRecord {
            id: id.into(),
            question: String::new(),
            units: units
                .iter()
                .enumerate()
                .map(|(i, u)| ScoredUnit {
                    unit_id: u.to_string(),
                    score: -(i as f64),
                    best_chunk_id: format!("{u}#0"),
                })
                .collect(),
        }
    }

    #[test]
    fn two_hits_give_full_recall() {
        let (corpus, units) = fixture();
        let cases = [case("1", &["France"], &[], None), case("2", &["Italy"], &[], None)];
        let recs = [rec("1", &["u0", "u1"]), rec("2", &["u0", "u1"])];
        let run = RetrievalRun {
            records: &recs,
            units: &units,
            corpus: &corpus,
            tok: TokenizerConfig::default(),
        };
        let r = evaluate_run(&cases, Some(&run), None, &EvalConfig::default()).unwrap();
        assert_eq!(r.retrieval[0].answer_recall, Metric { value: 1.0, denominator: 2 });
        assert_eq!(r.retrieval[0].doc_recall.denominator, 0);
        assert!(r.exact_match.is_none());
    }

    #[test]
    fn tagged_yes_no_left_out_of_answer_recall() {
        let (corpus, units) = fixture();
        let cases = [
            case("1", &["Norway"], &["A", "C"], Some("bridge")),
            case("2", &["yes"], &["A", "B"], Some("yes-no")),
        ];
        let recs = [rec("1", &["u0", "u1"]), rec("2", &["u1", "u0"])];
        let run = RetrievalRun {
            records: &recs,
            units: &units,
            corpus: &corpus,
            tok: TokenizerConfig::default(),
        };
        let r = evaluate_run(&cases, Some(&run), None, &EvalConfig::default()).unwrap();
        let at1 = &r.retrieval[0];
        let at2 = &r.retrieval[1];
        assert_eq!(at1.answer_recall, Metric { value: 0.0, denominator: 1 });
        assert_eq!(at2.answer_recall, Metric { value: 1.0, denominator: 1 });
        assert_eq!(at1.doc_recall, Metric { value: 0.0, denominator: 2 });
        assert_eq!(at2.doc_recall, Metric { value: 1.0, denominator: 2 });
    }

    #[test]
    fn end_to_end_metrics() {
        let cases = [case("1", &["Eiffel Tower"], &[], None), case("2", &["2018"], &[], None)];
        let answers = [
            AnswerRecord {
                id: "2".into(),
                long_answer: String::new(),
                short_answer: "September 29, 2018".into(),
                error: None,
            },
            AnswerRecord {
                id: "1".into(),
                long_answer: String::new(),
                short_answer: "the Eiffel Tower".into(),
                error: None,
            },
        ];
        let r = evaluate_run(&cases, None, Some(&answers), &EvalConfig::default()).unwrap();
        assert_eq!(r.exact_match.unwrap().value, 0.5);
        assert_eq!(r.refined_exact_match.unwrap().value, 1.0);
        let pc = r.per_case.unwrap();
        let mean = pc.iter().map(|c| c.f1.unwrap()).sum::<f64>() / 2.0;
        assert_eq!(r.f1.unwrap().value, mean);
    }

    #[test]
    fn alignment_errors() {
        let cfg = EvalConfig::default();
        assert!(matches!(evaluate_run(&[], None, None, &cfg), Err(Error::Alignment(_))));

        let cases = [case("1", &["x"], &[], None), case("1", &["y"], &[], None)];
        assert!(matches!(evaluate_run(&cases, None, None, &cfg), Err(Error::Alignment(_))));

        let cases = [case("1", &["x"], &[], None)];
        let missing: [AnswerRecord; 0] = [];
        assert!(evaluate_run(&cases, None, Some(&missing), &cfg).is_err());
        let extra = [
            AnswerRecord { id: "1".into(), long_answer: String::new(), short_answer: "x".into(), error: None },
            AnswerRecord { id: "9".into(), long_answer: String::new(), short_answer: "x".into(), error: None },
        ];
        assert!(evaluate_run(&cases, None, Some(&extra), &cfg).is_err());
    }

    #[test]
    fn parses_cases_file() {
        let raw = r#"{"id":"q1","question":"who?","answers":["A"],"gold_doc_ids":["d1","d2"],"type":"bridge"}
{"id":"q2","question":"what?","answers":["B","C"]}
"#;
        let cases = parse_cases(raw).unwrap();
        assert_eq!(cases[0].gold_doc_ids, ["d1", "d2"]);
        assert_eq!(cases[0].question_type.as_deref(), Some("bridge"));
        assert!(cases[1].gold_doc_ids.is_empty());
        assert!(parse_cases(r#"{"id":"q","question":"?","answers":[]}"#).is_err());
    }

    #[test]
    fn tsv_has_row_per_k() {
        let (corpus, units) = fixture();
        let cases = [case("1", &["Norway"], &[], None)];
        let recs = [rec("1", &["u0", "u1"])];
        let run = RetrievalRun {
            records: &recs,
            units: &units,
            corpus: &corpus,
            tok: TokenizerConfig::default(),
        };
        let r = evaluate_run(&cases, Some(&run), None, &EvalConfig::default()).unwrap();
        let tsv = report_tsv(&r);
        let lines: Vec<_> = tsv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("2\t1.000000\t1\t"));
    }
}
