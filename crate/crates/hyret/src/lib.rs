//! Standard-library side of hyret: file formats, embedding providers, the
//! experiment pipeline, the CLI and the HTTP search service.

pub mod cli;
pub mod engine;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod provider;
pub mod service;

pub use error::{Error, Result};
