//! Seeded synthetic corpora shaped like a few weeks of mainnet traffic:
//! heavy-tailed account activity, a small Flashbots share, contract
//! creations, self-transfers and optional duplicate records.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::parse::write_ndjson;
use crate::ingest::FlashbotsManifest;
use crate::model::{Address, Transaction, TxHash};

/// Seconds between synthetic blocks.
const BLOCK_TIME: i64 = 13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub transactions: usize,
    pub days: u32,
    pub accounts: usize,
    pub start: NaiveDate,
    pub start_block: u64,
    /// Zipf exponent for sender and recipient popularity.
    pub skew: f64,
    pub flashbots_share: f64,
    pub creation_share: f64,
    pub self_share: f64,
    pub duplicate_share: f64,
    pub failed_share: f64,
    /// Include `isError` on every record.
    pub with_status: bool,
    /// Manifest entries whose hash matches no transaction.
    pub unmatched_manifest: usize,
    /// Share of accounts placed in the pre-period seed set.
    pub seed_share: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            transactions: 10_000,
            days: 28,
            accounts: 2_000,
            start: NaiveDate::from_ymd_opt(2022, 2, 10).expect("valid date"),
            start_block: 14_174_989,
            skew: 1.1,
            flashbots_share: 0.05,
            creation_share: 0.01,
            self_share: 0.01,
            duplicate_share: 0.0,
            failed_share: 0.0,
            with_status: false,
            unmatched_manifest: 3,
            seed_share: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// In timestamp order; duplicates (if any) are appended at the end.
    pub transactions: Vec<Transaction>,
    pub manifest: FlashbotsManifest,
    pub seed_accounts: Vec<Address>,
}

fn random_bytes<const N: usize>(rng: &mut ChaCha8Rng) -> [u8; N] {
    let mut b = [0u8; N];
    rng.fill(&mut b[..]);
    b
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let accounts: Vec<Address> = (0..cfg.accounts.max(1))
        .map(|_| Address::from_bytes(random_bytes(&mut rng)))
        .collect();
    let n = accounts.len();
    let zipf = Zipf::new(n as f64, cfg.skew).expect("valid zipf parameters");
    let start = cfg.start.and_time(NaiveTime::MIN).and_utc().timestamp();
    let span = i64::from(cfg.days.max(1)) * 86_400;

    let mut stamps: Vec<i64> = (0..cfg.transactions)
        .map(|_| start + rng.random_range(0..span))
        .collect();
    stamps.sort_unstable();

    let mut txs = Vec::with_capacity(cfg.transactions);
    let mut pairs = Vec::new();
    for ts in stamps {
        let sender = zipf.sample(&mut rng) as usize - 1;
        // Recipients follow a different popularity order than senders.
        let recipient = (zipf.sample(&mut rng) as usize - 1).wrapping_mul(7919) % n;
        let roll: f64 = rng.random();
        let to = if roll < cfg.creation_share {
            None
        } else if roll < cfg.creation_share + cfg.self_share {
            Some(accounts[sender])
        } else {
            Some(accounts[recipient])
        };
        let success = if cfg.with_status {
            Some(rng.random::<f64>() >= cfg.failed_share)
        } else {
            None
        };
        let block = cfg.start_block + ((ts - start) / BLOCK_TIME) as u64;
        let tx = Transaction::new(
            TxHash::from_bytes(random_bytes(&mut rng)),
            block,
            ts,
            accounts[sender],
            to,
            success,
        )
        .expect("positive block and timestamp");
        if rng.random::<f64>() < cfg.flashbots_share {
            pairs.push((block, tx.hash));
        }
        txs.push(tx);
    }
    for _ in 0..cfg.unmatched_manifest {
        pairs.push((cfg.start_block, TxHash::from_bytes(random_bytes(&mut rng))));
    }
    let dups = (cfg.transactions as f64 * cfg.duplicate_share).round() as usize;
    for _ in 0..dups {
        if txs.is_empty() {
            break;
        }
        let i = rng.random_range(0..txs.len());
        txs.push(txs[i].clone());
    }
    let seed_accounts = accounts
        .iter()
        .filter(|_| rng.random::<f64>() < cfg.seed_share)
        .copied()
        .collect();
    SynthCorpus {
        transactions: txs,
        manifest: FlashbotsManifest::from_pairs(pairs),
        seed_accounts,
    }
}

/// Writes `transactions.ndjson`, `flashbots.ndjson` and `seed_accounts.txt`
/// into `dir`.
pub fn write_corpus(dir: &Path, corpus: &SynthCorpus) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let open = |name: &str| {
        let p = dir.join(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| Error::io(p, e))
    };
    write_ndjson(open("transactions.ndjson")?, &corpus.transactions)
        .map_err(|e| Error::io(dir.join("transactions.ndjson"), e))?;
    corpus
        .manifest
        .write(open("flashbots.ndjson")?)
        .map_err(|e| Error::io(dir.join("flashbots.ndjson"), e))?;
    let mut seeds = open("seed_accounts.txt")?;
    for a in &corpus.seed_accounts {
        writeln!(seeds, "{a}").map_err(|e| Error::io(dir.join("seed_accounts.txt"), e))?;
    }
    seeds
        .flush()
        .map_err(|e| Error::io(dir.join("seed_accounts.txt"), e))?;
    Ok(())
}
