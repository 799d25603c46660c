use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::flashbots::FlashbotsManifest;
use crate::ingest::parse::{read_tx_file, BadRecordPolicy, ParseStats};
use crate::model::{Address, Transaction};

/// Which subset of a dataset an analysis runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum View {
    /// Every external transaction (C1).
    #[default]
    Full,
    /// Only transactions found in the Flashbots manifest (C2).
    Flashbots,
}

impl View {
    pub fn as_str(&self) -> &'static str {
        match self {
            View::Full => "full",
            View::Flashbots => "flashbots",
        }
    }

    pub fn set_label(&self) -> &'static str {
        match self {
            View::Full => "C1",
            View::Flashbots => "C2",
        }
    }
}

/// Transactions from one input, in file order.
#[derive(Debug, Clone)]
pub struct SourceBatch {
    pub descriptor: String,
    pub transactions: Vec<Transaction>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadFilter {
    pub min_block: Option<u64>,
    pub max_block: Option<u64>,
    pub require_success: bool,
}

impl LoadFilter {
    fn admits_block(&self, block: u64) -> bool {
        self.min_block.is_none_or(|m| block >= m) && self.max_block.is_none_or(|m| block <= m)
    }
}

/// Counters produced while assembling a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub input_records: usize,
    pub skipped_lines: usize,
    pub duplicates: usize,
    pub out_of_range: usize,
    pub failed_dropped: usize,
    /// Transactions kept although `require_success` was on, because they
    /// carry no status field.
    pub status_unavailable: usize,
    pub manifest_entries: usize,
    pub manifest_duplicates: usize,
    pub flashbots_members: usize,
    pub unmatched_manifest_entries: usize,
    pub transactions: usize,
    pub sample_errors: Vec<String>,
}

impl LoadReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.skipped_lines > 0 {
            w.push(format!("{} malformed records skipped", self.skipped_lines));
        }
        if self.duplicates > 0 {
            w.push(format!(
                "{} duplicate transaction hashes dropped (first occurrence kept)",
                self.duplicates
            ));
        }
        if self.status_unavailable > 0 {
            w.push(format!(
                "success filtering unavailable for {} transactions without a status field; kept",
                self.status_unavailable
            ));
        }
        if self.unmatched_manifest_entries > 0 {
            w.push(format!(
                "{} unmatched manifest entries (not present in the transaction set)",
                self.unmatched_manifest_entries
            ));
        }
        w
    }
}

/// Deduplicated transactions ordered by block, with Flashbots membership
/// flags stored alongside. The Flashbots view is a filter over this one
/// collection, so it is always a subset of the full view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    transactions: Vec<Transaction>,
    flashbots_member: Vec<bool>,
    source_descriptor: String,
}

impl Dataset {
    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn flashbots_member(&self) -> &[bool] {
        &self.flashbots_member
    }

    pub fn source_descriptor(&self) -> &str {
        &self.source_descriptor
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn block_range(&self) -> Option<(u64, u64)> {
        Some((
            self.transactions.first()?.block_number,
            self.transactions.last()?.block_number,
        ))
    }

    pub fn timestamp_range(&self) -> Option<(i64, i64)> {
        let min = self.transactions.iter().map(|t| t.timestamp).min()?;
        let max = self.transactions.iter().map(|t| t.timestamp).max()?;
        Some((min, max))
    }

    pub fn in_view(&self, idx: usize, view: View) -> bool {
        match view {
            View::Full => true,
            View::Flashbots => self.flashbots_member[idx],
        }
    }

    /// `(index, transaction)` pairs belonging to `view`.
    pub fn view(&self, view: View) -> impl Iterator<Item = (usize, &Transaction)> + '_ {
        self.transactions
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.in_view(*i, view))
    }

    pub fn view_len(&self, view: View) -> usize {
        match view {
            View::Full => self.len(),
            View::Flashbots => self.flashbots_member.iter().filter(|f| **f).count(),
        }
    }

    /// Every address appearing as sender or recipient.
    pub fn addresses(&self) -> HashSet<Address> {
        self.transactions
            .iter()
            .flat_map(Transaction::participants)
            .collect()
    }
}

/// Merges batches into a dataset.
///
/// Batches are processed in descriptor order so the result does not depend on
/// the order they were supplied in. Duplicates are resolved first occurrence
/// wins, then the block filter and success filter apply, then a stable sort by
/// block number.
pub fn load_dataset(
    mut batches: Vec<SourceBatch>,
    manifest: Option<&FlashbotsManifest>,
    filter: LoadFilter,
) -> (Dataset, LoadReport) {
    batches.sort_by(|a, b| a.descriptor.cmp(&b.descriptor));
    let mut report = LoadReport::default();
    let descriptor = batches
        .iter()
        .map(|b| b.descriptor.as_str())
        .collect::<Vec<_>>()
        .join(",");

    let total: usize = batches.iter().map(|b| b.transactions.len()).sum();
    let mut seen = HashSet::with_capacity(total);
    let mut txs = Vec::with_capacity(total);
    for tx in batches.into_iter().flat_map(|b| b.transactions) {
        report.input_records += 1;
        if !seen.insert(tx.hash) {
            report.duplicates += 1;
            continue;
        }
        if !filter.admits_block(tx.block_number) {
            report.out_of_range += 1;
            continue;
        }
        if filter.require_success {
            match tx.success {
                Some(false) => {
                    report.failed_dropped += 1;
                    continue;
                }
                None => report.status_unavailable += 1,
                Some(true) => {}
            }
        }
        txs.push(tx);
    }
    drop(seen);
    txs.sort_by_key(|t| t.block_number);
    if report.status_unavailable > 0 {
        log::warn!(
            "success filtering unavailable for {} transactions without a status field",
            report.status_unavailable
        );
    }

    let flashbots_member: Vec<bool> = match manifest {
        Some(m) => txs.iter().map(|t| m.contains(&t.hash)).collect(),
        None => vec![false; txs.len()],
    };
    if let Some(m) = manifest {
        report.manifest_entries = m.len();
        report.manifest_duplicates = m.duplicates();
        report.flashbots_members = flashbots_member.iter().filter(|f| **f).count();
        report.unmatched_manifest_entries = m.len() - report.flashbots_members;
    }
    report.transactions = txs.len();

    (
        Dataset {
            transactions: txs,
            flashbots_member,
            source_descriptor: descriptor,
        },
        report,
    )
}

/// Parses `paths` concurrently and assembles a dataset.
pub fn load_files(
    paths: &[PathBuf],
    manifest: Option<&FlashbotsManifest>,
    filter: LoadFilter,
    policy: BadRecordPolicy,
) -> Result<(Dataset, LoadReport)> {
    let parsed: Vec<(SourceBatch, ParseStats)> = paths
        .par_iter()
        .map(|p| {
            read_tx_file(p, policy).map(|(txs, stats)| {
                (
                    SourceBatch {
                        descriptor: display_path(p),
                        transactions: txs,
                    },
                    stats,
                )
            })
        })
        .collect::<Result<_>>()?;
    let mut stats = ParseStats::default();
    let mut batches = Vec::with_capacity(parsed.len());
    for (batch, s) in parsed {
        stats.merge(s);
        batches.push(batch);
    }
    let (ds, mut report) = load_dataset(batches, manifest, filter);
    report.skipped_lines = stats.skipped;
    report.input_records += stats.skipped;
    report.sample_errors = stats.sample_errors;
    Ok((ds, report))
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}
