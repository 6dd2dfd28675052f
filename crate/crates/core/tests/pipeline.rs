mod common;

use std::fs;
use std::path::Path;

use longrag::grouper::{read_units, GroupingMode};
use longrag::pipeline::{self, PipelineConfig};
use longrag::{Error, ErrorKind};

use common::toy_dir;

fn config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(toy_dir().join("longrag.toml")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn run_all(cfg: &PipelineConfig) {
    pipeline::cmd_ingest(cfg).unwrap();
    pipeline::cmd_group(cfg).unwrap();
    pipeline::cmd_index(cfg).unwrap();
    pipeline::cmd_retrieve(cfg).unwrap();
    pipeline::cmd_answer(cfg).unwrap();
    pipeline::cmd_eval(cfg).unwrap();
}

const ARTIFACTS: [&str; 8] = [
    pipeline::CORPUS_STATS,
    pipeline::UNITS,
    pipeline::INDEX,
    pipeline::RETRIEVAL,
    pipeline::ANSWERS,
    pipeline::TRANSCRIPTS,
    pipeline::REPORT_JSON,
    pipeline::REPORT_TSV,
];

#[test]
fn repeated_runs_give_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_all(&config(a.path()));
    run_all(&config(b.path()));
    run_all(&config(b.path()));
    for name in ARTIFACTS {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut one = config(a.path());
    one.workers = 1;
    let mut many = config(b.path());
    many.workers = 8;
    run_all(&one);
    run_all(&many);
    for name in [pipeline::RETRIEVAL, pipeline::ANSWERS, pipeline::REPORT_JSON] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn stage_without_inputs_is_not_found() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let err = pipeline::cmd_index(&cfg).unwrap_err();
    assert!(matches!(err, Error::NotFound(_)), "{err:?}");
    assert_eq!(err.kind(), ErrorKind::Data);
    assert!(pipeline::cmd_eval(&cfg).is_err());
}

#[test]
fn whole_document_mode_gives_one_unit_per_document() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path());
    cfg.grouping.mode = GroupingMode::WholeDocument;
    let units = pipeline::cmd_group(&cfg).unwrap();
    let stats = pipeline::cmd_ingest(&cfg).unwrap();
    assert_eq!(units.len(), stats.documents);
    assert!(units.iter().all(|u| u.member_doc_ids.len() == 1));
    assert_eq!(read_units(tmp.path().join(pipeline::UNITS)).unwrap(), units);
}

#[test]
fn precomputed_vectors_reproduce_the_index() {
    let a = tempfile::tempdir().unwrap();
    let cfg = config(a.path());
    pipeline::cmd_group(&cfg).unwrap();
    let built = pipeline::cmd_index(&cfg).unwrap();

    let b = tempfile::tempdir().unwrap();
    let mut pre = config(b.path());
    pre.embedder.precomputed = Some(a.path().join(pipeline::INDEX));
    pipeline::cmd_group(&pre).unwrap();
    let loaded = pipeline::cmd_index(&pre).unwrap();
    assert_eq!(loaded.to_bytes(), built.to_bytes());
}

#[test]
fn sweep_writes_one_report_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let rows = pipeline::cmd_sweep(&cfg).unwrap();
    let points = cfg.sweep.modes.len() * cfg.sweep.chunk_sizes.len() * cfg.sweep.ks.len() * cfg.sweep.budgets.len();
    assert_eq!(rows.len(), points);
    for row in &rows {
        let dir = tmp.path().join(pipeline::SWEEP_DIR).join(row.point.label());
        assert!(dir.join(pipeline::REPORT_JSON).exists(), "{}", dir.display());
    }
    let tsv = fs::read_to_string(tmp.path().join(pipeline::SWEEP_DIR).join(pipeline::SWEEP_TSV)).unwrap();
    assert_eq!(tsv.lines().count(), points + 1);
}
