//! Long-unit retrieval-augmented question answering.
//!
//! Short documents are packed into long retrieval units along their
//! hyperlink graph, units are scored by their best fixed-size chunk against
//! the query, the top units are concatenated into one long context, and a
//! chat model reads that context in two turns. The `evalsuite` module
//! scores both retrieval and final answers.
//!
//! ```text
//! corpus -> grouper -> retriever (chunk, embed, index, search) -> reader
//!                                                 \-> evalsuite <-/
//! ```
//!
//! `pipeline` wires the stages together over on-disk artifacts.

pub mod corpus;
pub mod error;
pub mod evalsuite;
pub mod grouper;
mod http;
pub mod pipeline;
pub mod reader;
pub mod retriever;
pub mod retry;
pub mod tokenize;

pub use corpus::{load_corpus, validate_links, Corpus, Document, LinkReport};
pub use error::{Error, ErrorKind, Result};
pub use grouper::{GroupingConfig, GroupingMode, RetrievalUnit, UnitSet};
pub use tokenize::{count_tokens, TokenizerConfig};
