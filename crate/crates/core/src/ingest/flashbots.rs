//! Flashbots block manifests: which transactions went through the auction.
//!
//! Interchange format is one JSON object per line:
//! `{"block_number": 14174990, "transactions": [{"transaction_hash": "0x.."}, ..]}`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, RecordError, Result};
use crate::ingest::parse::{BadRecordPolicy, ParseStats};
use crate::model::TxHash;

fn block_number_of(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Unpacks one block record into `(block_number, tx_hash)` pairs, one per
/// bundled transaction.
pub fn parse_flashbots_block_record(
    line: &str,
    line_no: usize,
) -> Result<Vec<(u64, TxHash)>, RecordError> {
    let err = |reason: String| RecordError::new(line_no, reason);
    let value: Value = serde_json::from_str(line).map_err(|e| err(format!("invalid JSON: {e}")))?;
    parse_block_value(&value).map_err(err)
}

pub(crate) fn parse_block_value(value: &Value) -> Result<Vec<(u64, TxHash)>, String> {
    let block = value
        .get("block_number")
        .and_then(block_number_of)
        .ok_or("missing or non-integer block_number")?;
    let txs = value
        .get("transactions")
        .and_then(Value::as_array)
        .ok_or("missing transactions list")?;
    txs.iter()
        .map(|t| {
            let raw = t
                .get("transaction_hash")
                .and_then(Value::as_str)
                .ok_or("transaction entry lacks transaction_hash")?;
            TxHash::parse(raw)
                .map(|h| (block, h))
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// Set of Flashbots transactions keyed by hash.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlashbotsManifest {
    entries: BTreeMap<TxHash, u64>,
    duplicates: usize,
}

impl FlashbotsManifest {
    /// Builds a manifest from raw pairs. The first block seen for a hash is
    /// kept; later repeats are only counted.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, TxHash)>) -> Self {
        let mut m = Self::default();
        m.extend(pairs);
        m
    }

    pub fn extend(&mut self, pairs: impl IntoIterator<Item = (u64, TxHash)>) {
        for (block, hash) in pairs {
            match self.entries.entry(hash) {
                Entry::Occupied(_) => self.duplicates += 1,
                Entry::Vacant(v) => {
                    v.insert(block);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn contains(&self, hash: &TxHash) -> bool {
        self.entries.contains_key(hash)
    }

    pub fn block_of(&self, hash: &TxHash) -> Option<u64> {
        self.entries.get(hash).copied()
    }

    /// Entries ordered by hash.
    pub fn iter(&self) -> impl Iterator<Item = (u64, TxHash)> + '_ {
        self.entries.iter().map(|(h, b)| (*b, *h))
    }

    pub fn read(path: &Path, policy: BadRecordPolicy) -> Result<(Self, ParseStats)> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Self::default();
        let mut stats = ParseStats::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            stats.records += 1;
            match parse_flashbots_block_record(&line, i + 1) {
                Ok(pairs) => manifest.extend(pairs),
                Err(e) => match policy {
                    BadRecordPolicy::Abort => {
                        return Err(Error::Record {
                            path: path.display().to_string(),
                            source: e,
                        })
                    }
                    BadRecordPolicy::Skip => {
                        stats.skipped += 1;
                        if stats.sample_errors.len() < 10 {
                            stats.sample_errors.push(format!("{}: {e}", path.display()));
                        }
                    }
                },
            }
        }
        Ok((manifest, stats))
    }

    /// Writes the manifest in interchange format, one line per block in
    /// ascending block order, hashes sorted within a block.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut by_block: BTreeMap<u64, Vec<TxHash>> = BTreeMap::new();
        for (block, hash) in self.iter() {
            by_block.entry(block).or_default().push(hash);
        }
        for (block, hashes) in by_block {
            let txs: Vec<Value> = hashes
                .iter()
                .map(|h| serde_json::json!({ "transaction_hash": h.to_hex() }))
                .collect();
            let line = serde_json::json!({ "block_number": block, "transactions": txs });
            writeln!(out, "{line}")?;
        }
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(n: u8) -> String {
        format!("0x{}", hex::encode([n; 32]))
    }

    #[test]
    fn unpacks_two_hashes() {
        let line = format!(
            r#"{{"block_number":14174990,"transactions":[{{"transaction_hash":"{}"}},{{"transaction_hash":"{}","bundle_index":1}}]}}"#,
            h(1),
            h(2)
        );
        let pairs = parse_flashbots_block_record(&line, 1).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(pairs.iter().all(|(b, _)| *b == 14174990));
        assert_eq!(pairs[1].1.to_hex(), h(2));
    }

    #[test]
    fn empty_block() {
        let pairs =
            parse_flashbots_block_record(r#"{"block_number":"7","transactions":[]}"#, 1).unwrap();
        assert!(pairs.is_empty());
    }

    #[test]
    fn malformed_block_has_line_number() {
        let e = parse_flashbots_block_record(r#"{"transactions":[]}"#, 9).unwrap_err();
        assert_eq!(e.line, 9);
        let e =
            parse_flashbots_block_record(r#"{"block_number":1,"transactions":[{"hash":"0x"}]}"#, 3)
                .unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn duplicate_hash_across_blocks_kept_once() {
        let a = parse_flashbots_block_record(
            &format!(r#"{{"block_number":10,"transactions":[{{"transaction_hash":"{}"}},{{"transaction_hash":"{}"}}]}}"#, h(1), h(2)),
            1,
        )
        .unwrap();
        let b = parse_flashbots_block_record(
            &format!(
                r#"{{"block_number":11,"transactions":[{{"transaction_hash":"{}"}}]}}"#,
                h(2)
            ),
            2,
        )
        .unwrap();
        // Both records emit the shared hash.
        assert_eq!(a.len() + b.len(), 3);
        let m = FlashbotsManifest::from_pairs(a.into_iter().chain(b));
        // Set-cardinality oracle over the distinct hashes.
        let distinct: std::collections::HashSet<String> = [h(1), h(2), h(2)].into_iter().collect();
        assert_eq!(m.len(), distinct.len());
        assert_eq!(m.duplicates(), 1);
        assert_eq!(m.block_of(&TxHash::parse(&h(2)).unwrap()), Some(10));
    }

    #[test]
    fn write_then_read() {
        let m = FlashbotsManifest::from_pairs([
            (5, TxHash::parse(&h(3)).unwrap()),
            (4, TxHash::parse(&h(9)).unwrap()),
        ]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fb.ndjson");
        m.write(File::create(&p).unwrap()).unwrap();
        let (back, stats) = FlashbotsManifest::read(&p, BadRecordPolicy::Abort).unwrap();
        assert_eq!(back, m);
        assert_eq!(stats.records, 2);
    }
}
