//! Stage commands over on-disk artifacts.
//!
//! Every stage reads its inputs from files and writes its outputs
//! atomically into the output directory, so any suffix of the pipeline can
//! be re-run after deleting downstream artifacts. Nothing time-dependent is
//! written, so identical inputs give byte-identical artifacts.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use config::{
    EmbedderConfig, EmbedderKind, PipelineConfig, ReaderKind, ReaderSection, SweepConfig,
    DEFAULT_HASH_DIM,
};

use crate::corpus::{load_corpus, validate_links, Corpus, LinkReport};
use crate::error::{Error, ErrorKind, Result};
use crate::evalsuite::{
    evaluate_run, load_cases, report_tsv, report_tsv_rows, AnswerRecord, EvalCase, EvalConfig,
    MetricsReport, RetrievalRecord, RetrievalRun, TSV_HEADER,
};
use crate::grouper::{build_units, read_units, write_units, GroupingMode, RetrievalUnit, UnitSet};
use crate::reader::{read, ChatClient, PromptTemplate, ReaderConfig, Transcript};
use crate::retriever::{
    aggregate_context, build_index, chunk_units, embed_texts, ChunkIndex, ChunkSize, Embedder,
    Provenance,
};
use crate::tokenize::{count_tokens, TokenizerConfig};

pub const CORPUS_STATS: &str = "corpus_stats.json";
pub const UNITS: &str = "units.jsonl";
pub const INDEX: &str = "index.lrix";
pub const RETRIEVAL: &str = "retrieval.jsonl";
pub const ANSWERS: &str = "answers.jsonl";
pub const TRANSCRIPTS: &str = "transcripts.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TSV: &str = "report.tsv";
pub const SWEEP_DIR: &str = "sweep";
pub const SWEEP_TSV: &str = "sweep.tsv";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("row serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn require(path: PathBuf, stage: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::NotFound(format!(
            "{} is missing; run `{stage}` first",
            path.display()
        )))
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub total_tokens: usize,
    pub links: LinkReport,
}

pub fn corpus_stats(corpus: &Corpus, tok: &TokenizerConfig) -> CorpusStats {
    CorpusStats {
        documents: corpus.len(),
        total_tokens: corpus.iter().map(|d| count_tokens(&d.text, tok)).sum(),
        links: validate_links(corpus),
    }
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<CorpusStats> {
    let corpus = load_corpus(cfg.corpus_path())?;
    let stats = corpus_stats(&corpus, &cfg.tokenizer);
    write_json(&cfg.artifact(CORPUS_STATS), &stats)?;
    Ok(stats)
}

pub fn cmd_group(cfg: &PipelineConfig) -> Result<Vec<RetrievalUnit>> {
    let corpus = load_corpus(cfg.corpus_path())?;
    let units = build_units(&corpus, &cfg.grouping, &cfg.tokenizer)?;
    write_atomic(&cfg.artifact(UNITS), write_units(&units).as_bytes())?;
    Ok(units)
}

/// Chunks `units` and embeds the chunks, or lines up precomputed vectors.
pub fn index_units(
    cfg: &PipelineConfig,
    corpus: &Corpus,
    units: &[RetrievalUnit],
    embedder: &dyn Embedder,
) -> Result<ChunkIndex> {
    let chunks = chunk_units(units, corpus, cfg.chunk_size, &cfg.tokenizer)?;
    if let Some(pre) = &cfg.embedder.precomputed {
        return ChunkIndex::load(cfg.resolve(pre))?.aligned_to(&chunks);
    }
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let vectors = embed_texts(&texts, embedder, &cfg.embedder.retry)?;
    build_index(
        &chunks,
        &vectors,
        Provenance {
            embedder: embedder.id(),
            chunk_size: cfg.chunk_size,
        },
    )
}

pub fn cmd_index(cfg: &PipelineConfig) -> Result<ChunkIndex> {
    let corpus = load_corpus(cfg.corpus_path())?;
    let units = read_units(require(cfg.artifact(UNITS), "group")?)?;
    let embedder = cfg.build_embedder()?;
    let index = index_units(cfg, &corpus, &units, embedder.as_ref())?;
    index.save(cfg.artifact(INDEX))?;
    Ok(index)
}

pub fn retrieve_cases(
    index: &ChunkIndex,
    cases: &[EvalCase],
    embedder: &dyn Embedder,
    cfg: &PipelineConfig,
    k: usize,
) -> Result<Vec<RetrievalRecord>> {
    let questions: Vec<String> = cases.iter().map(|c| c.question.clone()).collect();
    let vectors = embed_texts(&questions, embedder, &cfg.embedder.retry)?;
    pool(cfg.workers)?.install(|| {
        cases
            .par_iter()
            .zip(vectors.par_iter())
            .map(|(case, q)| {
                Ok(RetrievalRecord {
                    id: case.id.clone(),
                    question: case.question.clone(),
                    units: index.retrieve_units(q, k)?,
                })
            })
            .collect()
    })
}

pub fn cmd_retrieve(cfg: &PipelineConfig) -> Result<Vec<RetrievalRecord>> {
    let index = ChunkIndex::load(require(cfg.artifact(INDEX), "index")?)?;
    let cases = load_cases(cfg.cases_path()?)?;
    let embedder = cfg.build_embedder()?;
    let records = retrieve_cases(&index, &cases, embedder.as_ref(), cfg, cfg.k)?;
    write_jsonl(&cfg.artifact(RETRIEVAL), &records)?;
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub id: String,
    pub transcripts: Vec<Transcript>,
}

pub struct ReaderSetup<'a> {
    pub client: &'a dyn ChatClient,
    pub template: &'a PromptTemplate,
    pub config: &'a ReaderConfig,
}

/// Reads every retrieval record's top `k` units. Service failures abort the
/// run; per-question problems (blank completions, empty contexts) are
/// recorded on the answer and the run continues.
#[allow(clippy::too_many_arguments)]
pub fn answer_records(
    records: &[RetrievalRecord],
    units: &UnitSet,
    corpus: &Corpus,
    tok: &TokenizerConfig,
    k: usize,
    budget: Option<usize>,
    reader: &ReaderSetup<'_>,
    workers: usize,
) -> Result<(Vec<AnswerRecord>, Vec<TranscriptRecord>)> {
    let outcomes: Vec<Result<(AnswerRecord, TranscriptRecord)>> = pool(workers)?.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let top = &rec.units[..rec.units.len().min(k)];
                let context = aggregate_context(top, units, corpus, budget, tok)?;
                let outcome = read(&rec.question, &context, reader.client, reader.template, reader.config);
                let (answer, transcripts) = match outcome {
                    Ok(r) => (
                        AnswerRecord {
                            id: rec.id.clone(),
                            long_answer: r.long_answer,
                            short_answer: r.short_answer,
                            error: None,
                        },
                        r.transcripts,
                    ),
                    Err(e) if e.kind() == ErrorKind::Upstream && !matches!(e, Error::EmptyCompletion { .. }) => {
                        return Err(e)
                    }
                    Err(e) => {
                        let long = match &e {
                            Error::EmptyCompletion { long_answer, .. } => long_answer.clone().unwrap_or_default(),
                            _ => String::new(),
                        };
                        (
                            AnswerRecord {
                                id: rec.id.clone(),
                                long_answer: long,
                                short_answer: String::new(),
                                error: Some(e.to_string()),
                            },
                            Vec::new(),
                        )
                    }
                };
                Ok((
                    answer,
                    TranscriptRecord {
                        id: rec.id.clone(),
                        transcripts,
                    },
                ))
            })
            .collect()
    });
    let mut answers = Vec::with_capacity(outcomes.len());
    let mut transcripts = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let (a, t) = o?;
        answers.push(a);
        transcripts.push(t);
    }
    Ok((answers, transcripts))
}

pub fn cmd_answer(cfg: &PipelineConfig) -> Result<Vec<AnswerRecord>> {
    let records: Vec<RetrievalRecord> = read_jsonl(&require(cfg.artifact(RETRIEVAL), "retrieve")?)?;
    let corpus = load_corpus(cfg.corpus_path())?;
    let units = UnitSet::new(read_units(require(cfg.artifact(UNITS), "group")?)?)?;
    let (client, template, config) = cfg.build_reader()?;
    let setup = ReaderSetup {
        client: client.as_ref(),
        template: &template,
        config: &config,
    };
    let (answers, transcripts) = answer_records(
        &records,
        &units,
        &corpus,
        &cfg.tokenizer,
        cfg.k,
        cfg.budget_tokens,
        &setup,
        cfg.workers,
    )?;
    write_jsonl(&cfg.artifact(ANSWERS), &answers)?;
    write_jsonl(&cfg.artifact(TRANSCRIPTS), &transcripts)?;
    Ok(answers)
}

pub fn cmd_eval(cfg: &PipelineConfig) -> Result<MetricsReport> {
    let cases = load_cases(cfg.cases_path()?)?;
    let retrieval_path = cfg.artifact(RETRIEVAL);
    let answers_path = cfg.artifact(ANSWERS);
    if !retrieval_path.exists() && !answers_path.exists() {
        return Err(Error::NotFound(format!(
            "neither {} nor {} exists; run `retrieve` or `answer` first",
            retrieval_path.display(),
            answers_path.display()
        )));
    }
    let answers: Option<Vec<AnswerRecord>> = if answers_path.exists() {
        Some(read_jsonl(&answers_path)?)
    } else {
        None
    };
    let report = if retrieval_path.exists() {
        let records: Vec<RetrievalRecord> = read_jsonl(&retrieval_path)?;
        let corpus = load_corpus(cfg.corpus_path())?;
        let units = UnitSet::new(read_units(require(cfg.artifact(UNITS), "group")?)?)?;
        let run = RetrievalRun {
            records: &records,
            units: &units,
            corpus: &corpus,
            tok: cfg.tokenizer,
        };
        evaluate_run(&cases, Some(&run), answers.as_deref(), &cfg.eval)?
    } else {
        evaluate_run(&cases, None, answers.as_deref(), &cfg.eval)?
    };
    write_json(&cfg.artifact(REPORT_JSON), &report)?;
    write_atomic(&cfg.artifact(REPORT_TSV), report_tsv(&report).as_bytes())?;
    Ok(report)
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mode: GroupingMode,
    pub chunk_size: ChunkSize,
    pub k: usize,
    pub budget: Option<usize>,
}

impl SweepPoint {
    pub fn label(&self) -> String {
        format!(
            "{}-c{}-k{}-b{}",
            self.mode,
            self.chunk_size,
            self.k,
            self.budget.map_or_else(|| "none".into(), |b| b.to_string())
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub report: MetricsReport,
}

fn or_default<T: Clone>(values: &[T], fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

/// Runs group/index/retrieve once per (mode, chunk size), then answer and
/// eval for every (k, budget). Writes one report per point under
/// `sweep/<label>/` and a combined `sweep/sweep.tsv`.
pub fn cmd_sweep(cfg: &PipelineConfig) -> Result<Vec<SweepRow>> {
    let corpus = load_corpus(cfg.corpus_path())?;
    let cases = load_cases(cfg.cases_path()?)?;
    let embedder = cfg.build_embedder()?;
    let reader = cfg.reader.as_ref().map(|_| cfg.build_reader()).transpose()?;

    let modes = or_default(&cfg.sweep.modes, cfg.grouping.mode);
    let chunk_sizes = or_default(&cfg.sweep.chunk_sizes, cfg.chunk_size);
    let ks = or_default(&cfg.sweep.ks, cfg.k);
    let budgets: Vec<Option<usize>> = or_default(&cfg.sweep.budgets, cfg.budget_tokens.unwrap_or(0))
        .into_iter()
        .map(|b| (b > 0).then_some(b))
        .collect();
    let depth = *ks.iter().max().expect("non-empty");
    let sweep_dir = cfg.artifact(SWEEP_DIR);

    let mut rows = Vec::new();
    for &mode in &modes {
        let mut grouping = cfg.grouping.clone();
        grouping.mode = mode;
        let units = build_units(&corpus, &grouping, &cfg.tokenizer)?;
        for &chunk_size in &chunk_sizes {
            let mut sub = cfg.clone();
            sub.grouping = grouping.clone();
            sub.chunk_size = chunk_size;
            sub.output_dir = sweep_dir.join(format!("{mode}-c{chunk_size}"));
            write_atomic(&sub.artifact(UNITS), write_units(&units).as_bytes())?;
            let index = index_units(&sub, &corpus, &units, embedder.as_ref())?;
            index.save(sub.artifact(INDEX))?;
            let records = retrieve_cases(&index, &cases, embedder.as_ref(), &sub, depth)?;
            write_jsonl(&sub.artifact(RETRIEVAL), &records)?;
            let unit_set = UnitSet::new(units.clone())?;

            for &k in &ks {
                let top: Vec<RetrievalRecord> = records
                    .iter()
                    .map(|r| RetrievalRecord {
                        units: r.units.iter().take(k).cloned().collect(),
                        ..r.clone()
                    })
                    .collect();
                for &budget in &budgets {
                    let point = SweepPoint {
                        mode,
                        chunk_size,
                        k,
                        budget,
                    };
                    let dir = sweep_dir.join(point.label());
                    let answers = match &reader {
                        Some((client, template, config)) => {
                            let setup = ReaderSetup {
                                client: client.as_ref(),
                                template,
                                config,
                            };
                            let (answers, transcripts) = answer_records(
                                &top, &unit_set, &corpus, &cfg.tokenizer, k, budget, &setup, cfg.workers,
                            )?;
                            write_jsonl(&dir.join(ANSWERS), &answers)?;
                            write_jsonl(&dir.join(TRANSCRIPTS), &transcripts)?;
                            Some(answers)
                        }
                        None => None,
                    };
                    let run = RetrievalRun {
                        records: &top,
                        units: &unit_set,
                        corpus: &corpus,
                        tok: cfg.tokenizer,
                    };
                    let eval_cfg = EvalConfig {
                        ks: vec![k],
                        ..cfg.eval.clone()
                    };
                    let report = evaluate_run(&cases, Some(&run), answers.as_deref(), &eval_cfg)?;
                    write_json(&dir.join(REPORT_JSON), &report)?;
                    write_atomic(&dir.join(REPORT_TSV), report_tsv(&report).as_bytes())?;
                    rows.push(SweepRow { point, report });
                }
            }
        }
    }

    let mut tsv = format!("mode\tchunk_size\tbudget\t{TSV_HEADER}\n");
    for row in &rows {
        let p = &row.point;
        let budget = p.budget.map_or_else(String::new, |b| b.to_string());
        for line in report_tsv_rows(&row.report) {
            tsv.push_str(&format!("{}\t{}\t{budget}\t{line}\n", p.mode, p.chunk_size));
        }
    }
    write_atomic(&sweep_dir.join(SWEEP_TSV), tsv.as_bytes())?;
    Ok(rows)
}
