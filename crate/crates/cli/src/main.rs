use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use longrag::grouper::GroupingMode;
use longrag::pipeline::{self, PipelineConfig};
use longrag::retriever::ChunkSize;
use longrag::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "longrag", version, about = "Long-unit retrieval and long-context reading pipeline")]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true, default_value = "longrag.toml")]
    config: PathBuf,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the hash embedder.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    mode: Option<GroupingMode>,

    /// Token budget per group.
    #[arg(long, global = true)]
    max_tokens: Option<usize>,

    /// Chunk length in tokens, or "whole".
    #[arg(long, global = true)]
    chunk_size: Option<ChunkSize>,

    /// Number of units to retrieve and read.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Context budget in tokens; 0 disables it.
    #[arg(long, global = true)]
    budget: Option<usize>,

    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the corpus; write corpus statistics.
    Ingest,
    /// Build retrieval units.
    Group,
    /// Chunk, embed and index the units.
    Index,
    /// Retrieve top-k units for every question.
    Retrieve,
    /// Run the reader over retrieved contexts.
    Answer,
    /// Score retrieval and answers.
    Eval,
    /// Run a grid of settings and collect one report per point.
    Sweep,
}

fn load_config(cli: &Cli) -> longrag::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = std::env::current_dir()
            .map(|cwd| cwd.join(out))
            .unwrap_or_else(|_| out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.embedder.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.grouping.mode = mode;
    }
    if let Some(s) = cli.max_tokens {
        cfg.grouping.max_tokens = s;
    }
    if let Some(c) = cli.chunk_size {
        cfg.chunk_size = c;
    }
    if let Some(k) = cli.k {
        cfg.k = k;
    }
    if let Some(b) = cli.budget {
        cfg.budget_tokens = (b > 0).then_some(b);
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> longrag::Result<serde_json::Value> {
    let cfg = load_config(cli)?;
    let summary = match cli.command {
        Command::Ingest => serde_json::to_value(pipeline::cmd_ingest(&cfg)?),
        Command::Group => {
            let units = pipeline::cmd_group(&cfg)?;
            Ok(serde_json::json!({ "units": units.len() }))
        }
        Command::Index => {
            let index = pipeline::cmd_index(&cfg)?;
            Ok(serde_json::json!({ "chunks": index.len(), "dim": index.dim() }))
        }
        Command::Retrieve => {
            let records = pipeline::cmd_retrieve(&cfg)?;
            Ok(serde_json::json!({ "questions": records.len() }))
        }
        Command::Answer => {
            let answers = pipeline::cmd_answer(&cfg)?;
            let failed = answers.iter().filter(|a| a.error.is_some()).count();
            Ok(serde_json::json!({ "answers": answers.len(), "failed": failed }))
        }
        Command::Eval => {
            let mut report = pipeline::cmd_eval(&cfg)?;
            report.per_case = None;
            serde_json::to_value(report)
        }
        Command::Sweep => {
            let rows = pipeline::cmd_sweep(&cfg)?;
            Ok(serde_json::json!({ "points": rows.len() }))
        }
    };
    Ok(summary.expect("summary serializes"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind: ErrorKind = e.kind();
            let body = serde_json::json!({
                "error": kind.as_str(),
                "code": kind.exit_code(),
                "message": e.to_string(),
            });
            eprintln!("{body}");
            if let Error::EmptyCompletion { long_answer: Some(l), .. } = &e {
                eprintln!("{}", serde_json::json!({ "salvaged_long_answer": l }));
            }
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}
