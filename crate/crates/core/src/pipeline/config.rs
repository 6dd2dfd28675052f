use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalsuite::EvalConfig;
use crate::grouper::{GroupingConfig, GroupingMode};
use crate::reader::{
    load_exemplars, ChatClient, HttpChatClient, PromptTemplate, ReaderConfig, ResponseShape,
    ScriptedChatClient, DEFAULT_TURN1, DEFAULT_TURN2,
};
use crate::retriever::{ChunkSize, Embedder, HashEmbedder, HttpEmbedder};
use crate::retry::RetryPolicy;
use crate::tokenize::TokenizerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    #[default]
    Hash,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    /// Vector length of the hash embedder; checked against the service
    /// otherwise, when set.
    pub dim: Option<usize>,
    pub seed: u64,
    pub url: Option<String>,
    pub batch_size: usize,
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    /// Index file holding chunk vectors computed offline.
    pub precomputed: Option<PathBuf>,
    pub retry: RetryPolicy,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Hash,
            dim: None,
            seed: 0,
            url: None,
            batch_size: 64,
            api_key_env: Some("LONGRAG_EMBEDDER_API_KEY".into()),
            timeout_secs: 120,
            precomputed: None,
            retry: RetryPolicy::default(),
        }
    }
}

pub const DEFAULT_HASH_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReaderKind {
    Scripted,
    #[default]
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReaderSection {
    pub kind: ReaderKind,
    pub url: Option<String>,
    pub model: String,
    pub temperature: f32,
    pub response_shape: ResponseShape,
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    /// Scripted replies for the `scripted` kind.
    pub script: Option<PathBuf>,
    pub exemplars: Option<PathBuf>,
    pub exemplar_count: Option<usize>,
    pub turn1_template: Option<String>,
    pub turn2_template: Option<String>,
    pub short_context_tokens: usize,
    pub retry: RetryPolicy,
}

impl Default for ReaderSection {
    fn default() -> Self {
        Self {
            kind: ReaderKind::Http,
            url: None,
            model: String::new(),
            temperature: 0.0,
            response_shape: ResponseShape::Content,
            api_key_env: Some("LONGRAG_READER_API_KEY".into()),
            timeout_secs: 600,
            script: None,
            exemplars: None,
            exemplar_count: None,
            turn1_template: None,
            turn2_template: None,
            short_context_tokens: ReaderConfig::default().short_context_tokens,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub modes: Vec<GroupingMode>,
    pub chunk_sizes: Vec<ChunkSize>,
    pub ks: Vec<usize>,
    /// Context budgets; `0` stands for no budget.
    pub budgets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub cases: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub tokenizer: TokenizerConfig,
    pub grouping: GroupingConfig,
    pub chunk_size: ChunkSize,
    pub embedder: EmbedderConfig,
    pub k: usize,
    pub budget_tokens: Option<usize>,
    pub workers: usize,
    pub reader: Option<ReaderSection>,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus.jsonl"),
            cases: None,
            output_dir: PathBuf::from("out"),
            tokenizer: TokenizerConfig::default(),
            grouping: GroupingConfig::default(),
            chunk_size: ChunkSize::Tokens(512),
            embedder: EmbedderConfig::default(),
            k: 8,
            budget_tokens: Some(30_000),
            workers: 4,
            reader: None,
            eval: EvalConfig::default(),
            sweep: SweepConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.budget_tokens == Some(0) {
            return bad("budget_tokens must be positive when set");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.chunk_size == ChunkSize::Tokens(0) {
            return bad("chunk_size must be positive");
        }
        if self.grouping.mode == GroupingMode::Group && self.grouping.max_tokens == 0 {
            return bad("grouping.max_tokens must be positive");
        }
        if self.embedder.kind == EmbedderKind::Http && self.embedder.url.is_none() {
            return bad("embedder.url is required for the http embedder");
        }
        if self.embedder.dim == Some(0) {
            return bad("embedder.dim must be positive");
        }
        if let Some(r) = &self.reader {
            match r.kind {
                ReaderKind::Http if r.url.is_none() => return bad("reader.url is required"),
                ReaderKind::Scripted if r.script.is_none() => {
                    return bad("reader.script is required for the scripted reader")
                }
                _ => {}
            }
        }
        if self.sweep.ks.contains(&0) {
            return bad("sweep.ks entries must be at least 1");
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.resolve(&self.corpus)
    }

    pub fn cases_path(&self) -> Result<PathBuf> {
        self.cases
            .as_deref()
            .map(|p| self.resolve(p))
            .ok_or_else(|| Error::Config("no cases file configured".into()))
    }

    pub fn build_embedder(&self) -> Result<Box<dyn Embedder>> {
        let e = &self.embedder;
        Ok(match e.kind {
            EmbedderKind::Hash => Box::new(HashEmbedder::new(e.dim.unwrap_or(DEFAULT_HASH_DIM), e.seed)),
            EmbedderKind::Http => Box::new(HttpEmbedder::new(
                e.url.clone().unwrap_or_default(),
                e.batch_size,
                e.dim,
                e.api_key_env.as_deref(),
                e.timeout_secs,
            )?),
        })
    }

    pub fn reader_section(&self) -> Result<&ReaderSection> {
        self.reader
            .as_ref()
            .ok_or_else(|| Error::Config("no [reader] section configured".into()))
    }

    pub fn build_reader(&self) -> Result<(Box<dyn ChatClient>, PromptTemplate, ReaderConfig)> {
        let r = self.reader_section()?;
        let client: Box<dyn ChatClient> = match r.kind {
            ReaderKind::Scripted => {
                let script = self.resolve(r.script.as_deref().unwrap_or(Path::new("")));
                Box::new(ScriptedChatClient::from_file(script)?)
            }
            ReaderKind::Http => Box::new(HttpChatClient::new(
                r.url.clone().unwrap_or_default(),
                r.model.clone(),
                r.temperature,
                r.response_shape,
                r.api_key_env.as_deref(),
                r.timeout_secs,
            )?),
        };
        let mut tpl = PromptTemplate {
            turn1: r.turn1_template.clone().unwrap_or_else(|| DEFAULT_TURN1.into()),
            turn2: r.turn2_template.clone().unwrap_or_else(|| DEFAULT_TURN2.into()),
            ..Default::default()
        };
        if let Some(p) = &r.exemplars {
            tpl.exemplars = load_exemplars(self.resolve(p))?;
        }
        if let Some(n) = r.exemplar_count {
            tpl = tpl.with_exemplar_count(n);
        }
        tpl.validate()?;
        let cfg = ReaderConfig {
            short_context_tokens: r.short_context_tokens,
            retry: r.retry,
        };
        Ok((client, tpl, cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_best_settings() {
        let cfg = PipelineConfig::from_toml("", ".").unwrap();
        assert_eq!(cfg.grouping.mode, GroupingMode::Group);
        assert_eq!(cfg.grouping.max_tokens, 4_000);
        assert_eq!(cfg.chunk_size, ChunkSize::Tokens(512));
        assert_eq!(cfg.k, 8);
        assert_eq!(cfg.budget_tokens, Some(30_000));
    }

    #[test]
    fn parses_sections() {
        let cfg = PipelineConfig::from_toml(
            r#"
corpus = "c.jsonl"
chunk_size = "whole"
k = 4
[grouping]
mode = "whole-document"
[embedder]
dim = 32
seed = 9
[reader]
kind = "scripted"
script = "s.jsonl"
[sweep]
modes = ["group", "passage"]
chunk_sizes = [128, "whole"]
ks = [1, 2]
"#,
            "/base",
        )
        .unwrap();
        assert_eq!(cfg.chunk_size, ChunkSize::Whole);
        assert_eq!(cfg.corpus_path(), PathBuf::from("/base/c.jsonl"));
        assert_eq!(cfg.sweep.chunk_sizes, [ChunkSize::Tokens(128), ChunkSize::Whole]);
        assert_eq!(cfg.reader.unwrap().kind, ReaderKind::Scripted);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "k = 0",
            "budget_tokens = 0",
            "chunk_size = 0",
            "[grouping]\nmax_tokens = 0",
            "[grouping]\nmax_tokens = -5",
            "[embedder]\nkind = \"http\"",
            "[reader]\nkind = \"scripted\"",
            "unknown_mode = 1\n[grouping]\nmode = \"blob\"",
        ] {
            let err = PipelineConfig::from_toml(bad, ".").unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{bad}: {err:?}");
        }
    }
}
