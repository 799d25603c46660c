//! Temporal transaction-graph analytics for Ethereum-style transaction dumps.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod preset;
pub mod report;
pub mod synth;
pub mod tempgraph;

pub use error::{Error, Result};
pub use model::{normalize_address, shorten_address, Address, Tag, TagKind, Transaction, TxHash};
