use rayon::prelude::*;
use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http;
use crate::retry::RetryPolicy;

/// A dense vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite embedding entry at {i}")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn scaled(&self, c: f32) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }
}

/// Anything that turns a batch of texts into vectors.
pub trait Embedder: Send + Sync {
    /// Identifier recorded in index provenance.
    fn id(&self) -> String;

    /// Largest batch a single call accepts.
    fn max_batch(&self) -> usize;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>>;
}

/// Embeds `texts` in batches, retrying transport failures. Batches may run
/// concurrently; output order matches input order.
pub fn embed_texts(
    texts: &[String],
    embedder: &dyn Embedder,
    retry: &RetryPolicy,
) -> Result<Vec<EmbeddingVector>> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let batch = embedder.max_batch().max(1);
    let batches: Vec<Vec<Vec<f32>>> = texts
        .par_chunks(batch)
        .map(|b| {
            let out = retry.run(|| embedder.embed_batch(b))?;
            if out.len() != b.len() {
                return Err(Error::Data(format!(
                    "embedder returned {} vectors for {} texts",
                    out.len(),
                    b.len()
                )));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let dim = batches[0][0].len();
    batches
        .into_iter()
        .flatten()
        .map(|v| {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            EmbeddingVector::new(v)
        })
        .collect()
}

/// Deterministic bag-of-words embedder: each lowercased alphanumeric token is
/// hashed to a signed coordinate and the sum is scaled to unit length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, seed }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0f32; self.dim];
        for word in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
        {
            let h = fnv1a(self.seed, &word.to_lowercase());
            let slot = (h % self.dim as u64) as usize;
            v[slot] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

fn fnv1a(seed: u64, word: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(word.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // final avalanche so low bits and the sign bit both mix
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^ (h >> 33)
}

impl Embedder for HashEmbedder {
    fn id(&self) -> String {
        format!("hash-bow/dim={}/seed={}", self.dim, self.seed)
    }

    fn max_batch(&self) -> usize {
        256
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
    dim: usize,
}

/// Client for a remote embedding service speaking
/// `{"texts": [..]}` -> `{"vectors": [[..]], "dim": N}`.
pub struct HttpEmbedder {
    url: String,
    batch_size: usize,
    expected_dim: Option<usize>,
    api_key: Option<String>,
    client: Client,
}

impl HttpEmbedder {
    pub fn new(
        url: impl Into<String>,
        batch_size: usize,
        expected_dim: Option<usize>,
        api_key_env: Option<&str>,
        timeout_secs: u64,
    ) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("embedder batch_size must be positive".into()));
        }
        Ok(Self {
            url: url.into(),
            batch_size,
            expected_dim,
            api_key: http::credential(api_key_env),
            client: http::client(timeout_secs)?,
        })
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        format!("http:{}", self.url)
    }

    fn max_batch(&self) -> usize {
        self.batch_size
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        let resp: EmbedResponse = http::post_json(
            &self.client,
            &self.url,
            &EmbedRequest { texts },
            self.api_key.as_deref(),
        )?;
        if let Some(expected) = self.expected_dim {
            if resp.dim != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    actual: resp.dim,
                });
            }
        }
        if let Some(bad) = resp.vectors.iter().find(|v| v.len() != resp.dim) {
            return Err(Error::DimensionMismatch {
                expected: resp.dim,
                actual: bad.len(),
            });
        }
        Ok(resp.vectors)
    }
}
