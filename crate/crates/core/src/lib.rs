//! Hybrid lexical + dense question-answer retrieval.
//!
//! This crate is `no_std` (it needs `alloc`) and contains only the algorithmic
//! pieces: text normalization and tokenization, a BM25 inverted index, flat
//! cosine search with a deterministic mock embedder, score/rank fusion, binary
//! relevance IR metrics and paired significance tests. File formats, the CLI
//! and the HTTP service live in the `hyret` crate.

#![no_std]

extern crate alloc;

pub mod corpus;
pub mod dense;
mod error;
pub mod eval;
pub mod hybrid;
pub mod lexical;
mod math;
pub mod stats;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
