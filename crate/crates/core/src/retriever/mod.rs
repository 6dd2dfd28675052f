//! Chunk-level dense search with MaxP aggregation to retrieval units.

mod chunk;
mod context;
mod embed;
mod index;

pub use chunk::{chunk_units, Chunk, ChunkSize};
pub use context::{
    aggregate_context, render_document, unit_documents, ContextDocument, RetrievalContext,
};
pub use embed::{embed_texts, Embedder, EmbeddingVector, HashEmbedder, HttpEmbedder};
pub use index::{build_index, rank_order, ChunkIndex, IndexEntry, Provenance, ScoredUnit, MAGIC};
