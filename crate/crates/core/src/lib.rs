//! Relevance of access paths for answering positive queries over sources
//! with access limitations.

pub mod certificate;
pub mod error;
pub mod format;
pub mod generators;
pub mod model;
pub mod oracle;
pub mod query;
pub mod reductions;
pub mod relevance;
pub mod witness;

pub use error::{Error, Result};
