//! Shared helpers for integration tests: brute-force oracles that recompute
//! every analytics product from the raw transaction list by a different
//! route than the library, a corpus randomizer, and a mock HTTP endpoint.
#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use txgraph::synth::SynthConfig;
use txgraph::tempgraph::{Direction, Metric};
use txgraph::{Address, Transaction, TxHash};

// ---------------------------------------------------------------------------
// Corpora
// ---------------------------------------------------------------------------

/// A randomized generator configuration drawn from `seed`.
pub fn random_config(seed: u64, max_transactions: usize) -> SynthConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fc0_4905);
    let with_status = rng.random_bool(0.5);
    SynthConfig {
        seed,
        transactions: rng.random_range(50..=max_transactions),
        days: rng.random_range(1..=28),
        accounts: rng.random_range(10..=3000),
        skew: rng.random_range(0.8..1.6),
        flashbots_share: rng.random_range(0.0..0.2),
        creation_share: rng.random_range(0.0..0.05),
        self_share: rng.random_range(0.0..0.05),
        duplicate_share: rng.random_range(0.0..0.02),
        failed_share: if with_status {
            rng.random_range(0.0..0.1)
        } else {
            0.0
        },
        with_status,
        unmatched_manifest: rng.random_range(0..5),
        seed_share: rng.random_range(0.0..0.5),
        ..SynthConfig::default()
    }
}

/// First occurrence of each hash, in input order.
pub fn oracle_dedup(txs: &[Transaction]) -> Vec<Transaction> {
    let mut order: Vec<usize> = (0..txs.len()).collect();
    order.sort_by(|&a, &b| txs[a].hash.cmp(&txs[b].hash).then(a.cmp(&b)));
    let mut keep = vec![false; txs.len()];
    for (j, &i) in order.iter().enumerate() {
        if j == 0 || txs[order[j - 1]].hash != txs[i].hash {
            keep[i] = true;
        }
    }
    txs.iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(t, _)| t.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

pub fn utc_date(ts: i64) -> NaiveDate {
    chrono::DateTime::from_timestamp(ts, 0)
        .unwrap()
        .date_naive()
}

/// Members of consecutive windows of `days_per` calendar days from `anchor`,
/// found by calendar-date arithmetic.
pub fn oracle_windows<'a>(
    txs: impl IntoIterator<Item = &'a Transaction>,
    anchor: NaiveDate,
    days_per: i64,
    count: usize,
) -> Vec<Vec<&'a Transaction>> {
    let mut out: Vec<Vec<&Transaction>> = vec![Vec::new(); count];
    for tx in txs {
        let diff = (utc_date(tx.timestamp) - anchor).num_days();
        if diff < 0 {
            continue;
        }
        let w = (diff / days_per) as usize;
        if w < count {
            out[w].push(tx);
        }
    }
    out
}

/// Number of windows an open-ended spec produces: enough to reach the last
/// transaction.
pub fn open_window_count(txs: &[Transaction], anchor: NaiveDate, days_per: i64) -> usize {
    txs.iter()
        .map(|t| (utc_date(t.timestamp) - anchor).num_days())
        .max()
        .map_or(0, |d| (d / days_per + 1) as usize)
}

// ---------------------------------------------------------------------------
// Degrees, growth, ranking, CCDF
// ---------------------------------------------------------------------------

/// (indegree, outdegree, total) per vertex, from a sorted edge list.
pub fn oracle_degrees(txs: &[&Transaction], metric: Metric) -> BTreeMap<Address, (u64, u64, u64)> {
    let mut out: BTreeMap<Address, (u64, u64, u64)> = BTreeMap::new();
    for tx in txs {
        out.entry(tx.from).or_default();
        if let Some(to) = tx.to {
            out.entry(to).or_default();
        }
    }
    let mut edges: Vec<(Address, Address)> = txs
        .iter()
        .filter_map(|t| t.to.map(|to| (t.from, to)))
        .collect();
    edges.sort();
    if metric == Metric::Distinct {
        edges.dedup();
    }
    for (from, to) in edges {
        out.get_mut(&from).unwrap().1 += 1;
        out.get_mut(&to).unwrap().0 += 1;
    }
    for v in out.values_mut() {
        v.2 = v.0 + v.1;
    }
    out
}

pub fn pick(d: (u64, u64, u64), direction: Direction) -> u64 {
    match direction {
        Direction::In => d.0,
        Direction::Out => d.1,
        Direction::Total => d.2,
    }
}

/// (prev, next, delta) for every account of either window.
pub fn oracle_growth(
    prev: &BTreeMap<Address, (u64, u64, u64)>,
    next: &BTreeMap<Address, (u64, u64, u64)>,
    direction: Direction,
) -> BTreeMap<Address, (u64, u64, i64)> {
    let accounts: BTreeSet<Address> = prev.keys().chain(next.keys()).copied().collect();
    accounts
        .into_iter()
        .map(|a| {
            let p = prev.get(&a).map_or(0, |d| pick(*d, direction));
            let n = next.get(&a).map_or(0, |d| pick(*d, direction));
            (a, (p, n, n as i64 - p as i64))
        })
        .collect()
}

/// Top (or bottom) `k` by repeated selection of the best remaining entry.
pub fn oracle_rank(
    growth: &BTreeMap<Address, (u64, u64, i64)>,
    k: usize,
    bottom: bool,
) -> Vec<Address> {
    let beats = |a: (&Address, &(u64, u64, i64)), b: (&Address, &(u64, u64, i64))| -> bool {
        let (da, db) = if bottom {
            (-a.1 .2, -b.1 .2)
        } else {
            (a.1 .2, b.1 .2)
        };
        if da != db {
            return da > db;
        }
        if a.1 .1 != b.1 .1 {
            return a.1 .1 > b.1 .1;
        }
        a.0.as_bytes() < b.0.as_bytes()
    };
    let mut taken: HashSet<Address> = HashSet::new();
    let mut out = Vec::new();
    while out.len() < k.min(growth.len()) {
        let mut best: Option<(&Address, &(u64, u64, i64))> = None;
        for e in growth.iter() {
            if taken.contains(e.0) {
                continue;
            }
            if best.is_none_or(|b| beats(e, b)) {
                best = Some(e);
            }
        }
        let (a, _) = best.unwrap();
        taken.insert(*a);
        out.push(*a);
    }
    out
}

/// Exact CCDF by counting, for each observed degree d >= 1, the accounts
/// with degree >= d.
pub fn oracle_ccdf(degrees: &[u64]) -> Vec<(u64, f64)> {
    let positive: Vec<u64> = degrees.iter().copied().filter(|d| *d >= 1).collect();
    let values: BTreeSet<u64> = positive.iter().copied().collect();
    values
        .into_iter()
        .map(|d| {
            let n = positive.iter().filter(|x| **x >= d).count();
            (d, n as f64 / positive.len() as f64)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Daily series
// ---------------------------------------------------------------------------

pub fn oracle_volume(days: &[Vec<&Transaction>]) -> Vec<u64> {
    days.iter().map(|d| d.len() as u64).collect()
}

fn participants(tx: &Transaction) -> Vec<Address> {
    let mut v = vec![tx.from];
    if let Some(to) = tx.to {
        v.push(to);
    }
    v
}

/// (cumulative, new, active) per day, recomputing the cumulative set from
/// scratch each day.
pub fn oracle_activity(
    days: &[Vec<&Transaction>],
    seed: &HashSet<Address>,
    exclude_seed: bool,
) -> Vec<(u64, u64, u64)> {
    let mut out: Vec<(u64, u64, u64)> = Vec::new();
    for t in 0..days.len() {
        let mut cum: BTreeSet<Address> = seed.iter().copied().collect();
        for day in &days[..=t] {
            for tx in day {
                cum.extend(participants(tx));
            }
        }
        let active: BTreeSet<Address> = days[t].iter().flat_map(|tx| participants(tx)).collect();
        let n = cum.len() as u64;
        let new = if t == 0 {
            if exclude_seed {
                n - seed.len() as u64
            } else {
                n
            }
        } else {
            n - out[t - 1].0
        };
        out.push((n, new, active.len() as u64));
    }
    out
}

// ---------------------------------------------------------------------------
// Mock HTTP endpoint
// ---------------------------------------------------------------------------

/// Scripted misbehavior of the mock endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Answer the first `n` requests normally, then HTTP 500 forever.
    DieAfter(usize),
    /// HTTP 500 for requests `from..from + len`, normal service otherwise.
    Outage {
        from: usize,
        len: usize,
    },
    /// HTTP 429 for the first `n` requests.
    TooManyRequests(usize),
    /// Every third request fails with HTTP 503.
    Flaky,
    /// HTTP 401 on every request.
    Unauthorized,
    /// Etherscan-style `NOTOK` body complaining about the API key.
    InvalidKey,
}

pub struct MockChain {
    pub txs: Vec<Transaction>,
    pub flashbots: BTreeMap<u64, Vec<TxHash>>,
}

pub struct MockServer {
    pub addr: String,
    pub requests: Arc<AtomicUsize>,
    pub queries: Arc<std::sync::Mutex<Vec<String>>>,
}

impl MockServer {
    pub fn start(chain: Arc<MockChain>, fault: Fault) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let requests = Arc::new(AtomicUsize::new(0));
        let queries = Arc::new(std::sync::Mutex::new(Vec::new()));
        let (r, q) = (requests.clone(), queries.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let n = r.fetch_add(1, Ordering::SeqCst);
                let _ = handle(stream, &chain, fault, n, &q);
            }
        });
        Self {
            addr,
            requests,
            queries,
        }
    }

    pub fn txlist_url(&self) -> String {
        format!("http://{}/api", self.addr)
    }

    pub fn flashbots_url(&self) -> String {
        format!("http://{}/flashbots/v1/blocks", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn query_params(target: &str) -> (String, BTreeMap<String, String>) {
    let (path, query) = target.split_once('?').unwrap_or((target, ""));
    let params = query
        .split('&')
        .filter(|s| !s.is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap_or((kv, ""));
            (k.to_string(), v.to_string())
        })
        .collect();
    (path.to_string(), params)
}

fn respond(mut stream: TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        401 => "Unauthorized",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        _ => "Service Unavailable",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

fn etherscan_row(tx: &Transaction) -> Value {
    let mut row = json!({
        "hash": tx.hash.to_hex(),
        "blockNumber": tx.block_number.to_string(),
        "timeStamp": tx.timestamp.to_string(),
        "from": tx.from.to_hex(),
        "to": tx.to.map(|a| a.to_hex()).unwrap_or_default(),
        "value": "0",
    });
    if let Some(ok) = tx.success {
        row["isError"] = json!(if ok { "0" } else { "1" });
    }
    row
}

fn handle(
    stream: TcpStream,
    chain: &MockChain,
    fault: Fault,
    n: usize,
    log: &std::sync::Mutex<Vec<String>>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
    }
    let target = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_string();
    log.lock().unwrap().push(target.clone());
    match fault {
        Fault::DieAfter(k) if n >= k => return respond(stream, 500, "{}"),
        Fault::Outage { from, len } if (from..from + len).contains(&n) => {
            return respond(stream, 500, "{}")
        }
        Fault::TooManyRequests(k) if n < k => return respond(stream, 429, "{}"),
        Fault::Flaky if n % 3 == 2 => return respond(stream, 503, "{}"),
        Fault::Unauthorized => return respond(stream, 401, r#"{"error":"unauthorized"}"#),
        Fault::InvalidKey => {
            return respond(
                stream,
                200,
                r#"{"status":"0","message":"NOTOK","result":"Invalid API Key"}"#,
            )
        }
        _ => {}
    }
    let (path, params) = query_params(&target);
    let num = |k: &str| params.get(k).and_then(|v| v.parse::<u64>().ok());
    if path.starts_with("/flashbots") {
        let before = num("before").unwrap_or(u64::MAX);
        let limit = num("limit").unwrap_or(100) as usize;
        let blocks: Vec<Value> = chain
            .flashbots
            .range(..before)
            .rev()
            .take(limit)
            .map(|(b, hashes)| {
                json!({
                    "block_number": b,
                    "transactions": hashes.iter().map(|h| json!({"transaction_hash": h.to_hex()})).collect::<Vec<_>>(),
                })
            })
            .collect();
        return respond(stream, 200, &json!({ "blocks": blocks }).to_string());
    }
    let (start, end) = (
        num("startblock").unwrap_or(0),
        num("endblock").unwrap_or(u64::MAX),
    );
    let page = num("page").unwrap_or(1).max(1) as usize;
    let offset = num("offset").unwrap_or(10_000) as usize;
    let mut rows: Vec<&Transaction> = chain
        .txs
        .iter()
        .filter(|t| start <= t.block_number && t.block_number <= end)
        .collect();
    rows.sort_by(|a, b| {
        a.block_number
            .cmp(&b.block_number)
            .then(a.hash.cmp(&b.hash))
    });
    let slice: Vec<Value> = rows
        .iter()
        .skip((page - 1) * offset)
        .take(offset)
        .map(|t| etherscan_row(t))
        .collect();
    let body = if slice.is_empty() {
        json!({"status": "0", "message": "No transactions found", "result": []})
    } else {
        json!({"status": "1", "message": "OK", "result": slice})
    };
    respond(stream, 200, &body.to_string())
}

/// Endpoint settings for the mock: fast retries, no rate limit to speak of.
pub fn mock_config(server: &MockServer) -> txgraph::ingest::EndpointConfig {
    let mut cfg = txgraph::ingest::EndpointConfig::for_url(server.txlist_url());
    cfg.flashbots_url = Some(server.flashbots_url());
    cfg.requests_per_second = 1000.0;
    cfg.page_size = 50;
    cfg.blocks_per_request = 400;
    cfg.max_retries = 3;
    cfg.initial_backoff = std::time::Duration::from_millis(1);
    cfg.max_backoff = std::time::Duration::from_millis(5);
    cfg.timeout = std::time::Duration::from_secs(5);
    cfg
}

pub fn mock_config_text(server: &MockServer) -> String {
    format!(
        "base_url = {}\nflashbots_url = {}\nrequests_per_second = 1000\npage_size = 50\nblocks_per_request = 400\nmax_retries = 3\ninitial_backoff_ms = 1\nmax_backoff_ms = 5\ntimeout_secs = 5\n",
        server.txlist_url(),
        server.flashbots_url()
    )
}

/// A one-day chain of 1,500 transactions with status flags and a Flashbots
/// manifest, plus its full block range.
pub fn mock_chain() -> (Arc<MockChain>, txgraph::ingest::BlockRange) {
    let corpus = txgraph::synth::generate(&SynthConfig {
        seed: 7,
        transactions: 1_500,
        days: 1,
        accounts: 300,
        with_status: true,
        failed_share: 0.05,
        ..SynthConfig::default()
    });
    let lo = corpus
        .transactions
        .iter()
        .map(|t| t.block_number)
        .min()
        .unwrap();
    let hi = corpus
        .transactions
        .iter()
        .map(|t| t.block_number)
        .max()
        .unwrap();
    let mut flashbots: BTreeMap<u64, Vec<TxHash>> = BTreeMap::new();
    for (b, h) in corpus.manifest.iter() {
        flashbots.entry(b).or_default().push(h);
    }
    (
        Arc::new(MockChain {
            txs: corpus.transactions,
            flashbots,
        }),
        txgraph::ingest::BlockRange::new(lo, hi),
    )
}

// ---------------------------------------------------------------------------
// Golden fixture
// ---------------------------------------------------------------------------

pub const GOLDEN_DIR: &str = "tests/fixtures/golden";

/// Runs the CLI on the committed seed-42 fixture with the study preset.
/// Input paths are relative to the crate directory so the recorded command
/// is the same on every machine.
pub fn run_golden(view: &str, out: &std::path::Path) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_txgraph"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args([
            "analyze",
            "--txs",
            &format!("{GOLDEN_DIR}/transactions.ndjson"),
            "--flashbots-manifest",
            &format!("{GOLDEN_DIR}/flashbots.ndjson"),
            "--seed-accounts",
            &format!("{GOLDEN_DIR}/seed_accounts.txt"),
            "--preset",
            "paper-study",
            "--view",
            view,
            "--out",
        ])
        .arg(out)
        .output()
        .unwrap()
}

/// `(sha256, file name)` pairs committed next to the fixture.
pub fn golden_digests(view: &str) -> Vec<(String, String)> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join(format!("{GOLDEN_DIR}/expected_{view}.sha256"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once("  "))
        .map(|(h, n)| (h.to_string(), n.to_string()))
        .collect()
}

/// Digest of every file in `dir`, sorted by name.
pub fn dir_digests(dir: &std::path::Path) -> Vec<(String, String)> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| (txgraph::report::file_sha256(&dir.join(&n)).unwrap(), n))
        .collect()
}
