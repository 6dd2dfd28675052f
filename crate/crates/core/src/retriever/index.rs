//! Flat exact inner-product index over chunk embeddings.
//!
//! On-disk layout, all integers little-endian:
//!
//! ```text
//! "LRIX" | u32 version (1) | u32 dim | u64 rows
//! rows * dim f32, row-major
//! JSON trailer {"entries": [{"chunk_id", "unit_id"}], "provenance": {..}}
//! u64 trailer length
//! ```

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chunk::{Chunk, ChunkSize};
use super::embed::EmbeddingVector;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LRIX";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;
const PARALLEL_ROWS: usize = 8_192;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub chunk_id: String,
    pub unit_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub embedder: String,
    pub chunk_size: ChunkSize,
}

#[derive(Serialize, Deserialize)]
struct Trailer {
    entries: Vec<IndexEntry>,
    provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredUnit {
    pub unit_id: String,
    pub score: f64,
    pub best_chunk_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkIndex {
    dim: usize,
    rows: Vec<f32>,
    entries: Vec<IndexEntry>,
    provenance: Provenance,
}

pub fn build_index(
    chunks: &[Chunk],
    vectors: &[EmbeddingVector],
    provenance: Provenance,
) -> Result<ChunkIndex> {
    if chunks.len() != vectors.len() {
        return Err(Error::LengthMismatch {
            left: chunks.len(),
            right: vectors.len(),
        });
    }
    let dim = vectors.first().map_or(0, EmbeddingVector::dim);
    let mut rows = Vec::with_capacity(dim * vectors.len());
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.dim(),
            });
        }
        rows.extend_from_slice(v.as_slice());
    }
    let entries = chunks
        .iter()
        .map(|c| IndexEntry {
            chunk_id: c.chunk_id.clone(),
            unit_id: c.unit_id.clone(),
        })
        .collect();
    Ok(ChunkIndex {
        dim,
        rows,
        entries,
        provenance,
    })
}

impl ChunkIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Re-orders a precomputed index so its rows line up with `chunks`,
    /// matching by chunk id.
    pub fn aligned_to(&self, chunks: &[Chunk]) -> Result<ChunkIndex> {
        let by_id: HashMap<&str, usize> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.chunk_id.as_str(), i))
            .collect();
        let mut rows = Vec::with_capacity(chunks.len() * self.dim);
        let mut entries = Vec::with_capacity(chunks.len());
        for c in chunks {
            let i = *by_id
                .get(c.chunk_id.as_str())
                .ok_or_else(|| Error::NotFound(format!("no precomputed vector for {}", c.chunk_id)))?;
            rows.extend_from_slice(self.row(i));
            entries.push(IndexEntry {
                chunk_id: c.chunk_id.clone(),
                unit_id: c.unit_id.clone(),
            });
        }
        Ok(ChunkIndex {
            dim: self.dim,
            rows,
            entries,
            provenance: self.provenance.clone(),
        })
    }

    fn check_query(&self, q: &EmbeddingVector) -> Result<()> {
        if !self.is_empty() && q.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: q.dim(),
            });
        }
        Ok(())
    }

    /// Raw inner product of `q` with every row, in row order.
    pub fn score_query(&self, q: &EmbeddingVector) -> Result<Vec<f64>> {
        self.check_query(q)?;
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let q = q.as_slice();
        let dot = |row: &[f32]| -> f64 {
            row.iter()
                .zip(q)
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum()
        };
        Ok(if self.len() >= PARALLEL_ROWS {
            self.rows.par_chunks(self.dim).map(dot).collect()
        } else {
            self.rows.chunks(self.dim).map(dot).collect()
        })
    }

    /// Top `k` units by their best chunk score, descending, ties broken by
    /// unit id.
    pub fn retrieve_units(&self, q: &EmbeddingVector, k: usize) -> Result<Vec<ScoredUnit>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let scores = self.score_query(q)?;
        let mut best: HashMap<&str, (f64, &str)> = HashMap::new();
        for (entry, &s) in self.entries.iter().zip(&scores) {
            best.entry(entry.unit_id.as_str())
                .and_modify(|(top, chunk)| {
                    if s > *top || (s == *top && entry.chunk_id.as_str() < *chunk) {
                        *top = s;
                        *chunk = &entry.chunk_id;
                    }
                })
                .or_insert((s, &entry.chunk_id));
        }
        let mut ranked: Vec<ScoredUnit> = best
            .into_iter()
            .map(|(unit, (score, chunk))| ScoredUnit {
                unit_id: unit.to_string(),
                score,
                best_chunk_id: chunk.to_string(),
            })
            .collect();
        ranked.sort_by(rank_order);
        ranked.truncate(k);
        Ok(ranked)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let trailer = serde_json::to_vec(&Trailer {
            entries: self.entries.clone(),
            provenance: self.provenance.clone(),
        })
        .expect("trailer serializes");
        let mut out = Vec::with_capacity(HEADER_LEN + self.rows.len() * 4 + trailer.len() + 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for v in &self.rows {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&trailer);
        out.extend_from_slice(&(trailer.len() as u64).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |what: &str| Error::Data(format!("corrupt index: {what}"));
        if bytes.len() < HEADER_LEN + 8 {
            return Err(corrupt("file too short"));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic bytes"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let dim = u32_at(8) as usize;
        let rows = usize::try_from(u64_at(12)).map_err(|_| corrupt("row count"))?;
        let floats = rows
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| corrupt("row block size overflows"))?;
        let trailer_len =
            usize::try_from(u64_at(bytes.len() - 8)).map_err(|_| corrupt("trailer length"))?;
        let expected = HEADER_LEN
            .checked_add(floats)
            .and_then(|n| n.checked_add(trailer_len))
            .and_then(|n| n.checked_add(8));
        if expected != Some(bytes.len()) {
            return Err(corrupt("section lengths do not add up"));
        }
        let block = &bytes[HEADER_LEN..HEADER_LEN + floats];
        let values: Vec<f32> = block
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(corrupt("non-finite vector entry"));
        }
        let trailer: Trailer =
            serde_json::from_slice(&bytes[HEADER_LEN + floats..bytes.len() - 8])
                .map_err(|e| corrupt(&format!("trailer: {e}")))?;
        if trailer.entries.len() != rows {
            return Err(corrupt("id table length differs from row count"));
        }
        Ok(ChunkIndex {
            dim,
            rows: values,
            entries: trailer.entries,
            provenance: trailer.provenance,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))?;
        tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Score descending, then unit id ascending.
pub fn rank_order(a: &ScoredUnit, b: &ScoredUnit) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.unit_id.cmp(&b.unit_id))
}
