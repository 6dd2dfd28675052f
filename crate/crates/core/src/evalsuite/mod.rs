//! Retrieval and end-to-end QA metrics.

mod metrics;
mod normalize;
mod run;

pub use metrics::{
    answer_recall, contains_any, doc_recall, exact_match, exact_match_with, recall_haystack,
    refined_exact_match, refined_exact_match_with, token_f1, token_f1_with, REFINED_MAX_TOKENS,
};
pub use normalize::Normalizer;
pub use run::{
    evaluate_run, load_cases, parse_cases, report_tsv, report_tsv_rows, AnswerRecord,
    CaseMetrics, EvalCase, EvalConfig, Metric, MetricsReport, RecallAtK, RetrievalRecord,
    RetrievalRun, NON_SPAN_TYPES, TSV_HEADER,
};
