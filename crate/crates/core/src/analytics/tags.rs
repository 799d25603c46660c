//! Public address labels, read from a `address,label,kind` CSV file.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Address, Tag, TagKind};

pub const NO_PUBLIC_TAG: &str = "No public tag";

const BUNDLED: &str = include_str!("../../data/known_tags.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagRef<'a> {
    pub label: &'a str,
    pub kind: TagKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagMap {
    entries: HashMap<Address, Tag>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TagLoadStats {
    pub rows: usize,
    pub skipped: usize,
    /// Rows that replaced an earlier row for the same address.
    pub overrides: usize,
    pub errors: Vec<String>,
}

impl TagMap {
    /// Labels for well-known mainnet addresses (exchanges, routers, tokens,
    /// MEV bots) shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED.as_bytes())
            .expect("bundled tag file parses")
            .0
    }

    /// Inserts `tag`, returning true when it replaced an existing entry.
    pub fn insert(&mut self, tag: Tag) -> bool {
        self.entries.insert(tag.address, tag).is_some()
    }

    pub fn get(&self, address: &Address) -> Option<&Tag> {
        self.entries.get(address)
    }

    /// Label for `address`, or the "No public tag" sentinel.
    pub fn lookup(&self, address: &Address) -> TagRef<'_> {
        match self.entries.get(address) {
            Some(t) => TagRef {
                label: &t.label,
                kind: t.kind,
            },
            None => TagRef {
                label: NO_PUBLIC_TAG,
                kind: TagKind::Unknown,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tag> {
        self.entries.values()
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<(Self, TagLoadStats)> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let header: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_ascii_lowercase())
            .collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (Some(ai), Some(li)) = (col("address"), col("label")) else {
            return Err(Error::Config(format!(
                "tag file header must be address,label,kind; got {}",
                header.join(",")
            )));
        };
        let ki = col("kind");

        let mut map = TagMap::default();
        let mut stats = TagLoadStats::default();
        for (i, row) in rdr.records().enumerate() {
            // Header is line 1.
            let line = i + 2;
            stats.rows += 1;
            let parsed = row.map_err(|e| e.to_string()).and_then(|r| {
                let address = Address::parse(r.get(ai).unwrap_or("")).map_err(|e| e.to_string())?;
                let kind = ki
                    .and_then(|k| r.get(k))
                    .unwrap_or("")
                    .parse::<TagKind>()
                    .map_err(|e| e.to_string())?;
                Tag::new(address, r.get(li).unwrap_or("").trim(), kind).map_err(|e| e.to_string())
            });
            match parsed {
                Ok(tag) => {
                    if map.insert(tag) {
                        stats.overrides += 1;
                    }
                }
                Err(e) => {
                    stats.skipped += 1;
                    stats.errors.push(format!("line {line}: {e}"));
                }
            }
        }
        if stats.overrides > 0 {
            log::warn!(
                "{} tag rows overrode earlier rows for the same address",
                stats.overrides
            );
        }
        Ok((map, stats))
    }
}

/// Loads a tag file. Malformed rows are skipped and counted; a later row for
/// the same address replaces an earlier one.
pub fn load_tag_map(path: &Path) -> Result<(TagMap, TagLoadStats)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    TagMap::from_reader(file)
}
