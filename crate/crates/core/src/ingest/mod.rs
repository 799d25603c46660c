//! Reading transaction dumps and Flashbots manifests, fetching them over
//! HTTP, and assembling a [`Dataset`].

pub mod config;
pub mod dataset;
pub mod fetch;
pub mod flashbots;
pub mod parse;

pub use config::EndpointConfig;
pub use dataset::{load_dataset, load_files, Dataset, LoadFilter, LoadReport, SourceBatch, View};
pub use fetch::{
    fetch_flashbots_manifest, fetch_transactions, BlockRange, Checkpoint, FetchStream,
};
pub use flashbots::{parse_flashbots_block_record, FlashbotsManifest};
pub use parse::{parse_tx_record, read_tx_file, BadRecordPolicy, ParseStats, TxFormat};
