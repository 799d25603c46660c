//! HTTP collection from Etherscan-compatible transaction endpoints and
//! Flashbots-blocks-compatible endpoints.
//!
//! Transactions are requested in block-aligned pages of
//! `blocks_per_request` blocks; each page is itself paginated by
//! `page`/`offset` until a short page comes back. A checkpoint is persisted
//! once every transaction of a block page has been handed to the consumer, so
//! a resumed run restarts on the next block page with no gap and no overlap.

use std::collections::{HashSet, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::FetchError;
use crate::ingest::config::EndpointConfig;
use crate::ingest::flashbots::{parse_block_value, FlashbotsManifest};
use crate::ingest::parse::parse_tx_value;
use crate::model::Transaction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub last_completed_block: u64,
    pub records_written: u64,
    pub source_descriptor: String,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Option<Self>, FetchError> {
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| FetchError::Checkpoint(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(FetchError::Checkpoint(format!("{}: {e}", path.display()))),
        }
    }

    /// Writes via a temporary file and rename so a crash never leaves a torn
    /// checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<(), FetchError> {
        let tmp = path.with_extension("json.tmp");
        let body = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        fs::write(&tmp, body + "\n")
            .and_then(|_| fs::rename(&tmp, path))
            .map_err(|e| FetchError::Checkpoint(format!("{}: {e}", path.display())))
    }
}

/// Closed block interval. `start > end` denotes the empty range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRange {
    pub start: u64,
    pub end: u64,
}

impl BlockRange {
    pub fn new(start: u64, end: u64) -> Self {
        Self { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }

    pub fn contains(&self, block: u64) -> bool {
        self.start <= block && block <= self.end
    }
}

/// Spaces requests at least `1 / requests_per_second` apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Option<Instant>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> Self {
        Self {
            interval: Duration::from_secs_f64(1.0 / requests_per_second.max(1e-6)),
            next: None,
        }
    }

    pub fn wait(&mut self) {
        let now = Instant::now();
        if let Some(next) = self.next {
            if next > now {
                thread::sleep(next - now);
            }
        }
        self.next = Some(Instant::now() + self.interval);
    }
}

enum Outcome<T> {
    Done(T),
    Retry(String),
    Fatal(FetchError),
}

struct Client {
    agent: ureq::Agent,
    cfg: EndpointConfig,
    limiter: RateLimiter,
}

impl Client {
    fn new(cfg: &EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(cfg.timeout))
            .build()
            .into();
        Self {
            agent,
            limiter: RateLimiter::new(cfg.requests_per_second),
            cfg: cfg.clone(),
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.min(16));
        self.cfg
            .initial_backoff
            .saturating_mul(factor)
            .min(self.cfg.max_backoff)
    }

    /// GETs `url` with `params`, retrying transport failures, 429 and 5xx
    /// responses with exponential backoff. 401/403 fail immediately.
    fn get_json<T>(
        &mut self,
        url: &str,
        params: &[(&str, String)],
        interpret: impl Fn(Value) -> Outcome<T>,
    ) -> Result<T, FetchError> {
        let mut last = String::new();
        let attempts = self.cfg.max_retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.backoff(attempt - 1);
                log::debug!("retry {attempt} for {url} in {delay:?}: {last}");
                thread::sleep(delay);
            }
            self.limiter.wait();
            let mut req = self.agent.get(url);
            for (k, v) in params {
                req = req.query(*k, v);
            }
            let mut resp = match req.call() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let body = match resp.body_mut().read_to_string() {
                Ok(b) => b,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            match status {
                200 => {}
                401 | 403 => {
                    return Err(FetchError::Auth {
                        endpoint: url.to_string(),
                        message: format!("HTTP {status}: {}", body.trim()),
                    })
                }
                429 | 500..=599 => {
                    last = format!("HTTP {status}");
                    continue;
                }
                _ => {
                    return Err(FetchError::Protocol {
                        endpoint: url.to_string(),
                        message: format!("HTTP {status}: {}", body.trim()),
                    })
                }
            }
            let value: Value = match serde_json::from_str(&body) {
                Ok(v) => v,
                Err(e) => {
                    last = format!("malformed JSON body: {e}");
                    continue;
                }
            };
            match interpret(value) {
                Outcome::Done(t) => return Ok(t),
                Outcome::Retry(msg) => last = msg,
                Outcome::Fatal(e) => return Err(e),
            }
        }
        Err(FetchError::Resumable {
            attempts,
            message: last,
            checkpoint: None,
        })
    }
}

fn interpret_txlist(endpoint: &str, value: Value) -> Outcome<Vec<Transaction>> {
    let status = value.get("status").and_then(Value::as_str).unwrap_or("");
    let message = value.get("message").and_then(Value::as_str).unwrap_or("");
    let result = value.get("result");
    if status == "1" {
        let Some(rows) = result.and_then(Value::as_array) else {
            return Outcome::Fatal(FetchError::Protocol {
                endpoint: endpoint.into(),
                message: "status 1 without a result array".into(),
            });
        };
        let mut txs = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            match parse_tx_value(row) {
                Ok(tx) => txs.push(tx),
                Err(e) => {
                    return Outcome::Fatal(FetchError::Protocol {
                        endpoint: endpoint.into(),
                        message: format!("result row {i}: {e}"),
                    })
                }
            }
        }
        return Outcome::Done(txs);
    }
    let detail = result.and_then(Value::as_str).unwrap_or(message);
    let lower = format!("{message} {detail}").to_ascii_lowercase();
    if lower.contains("no transactions found")
        || (result
            .and_then(Value::as_array)
            .is_some_and(|a| a.is_empty()))
    {
        Outcome::Done(Vec::new())
    } else if lower.contains("api key") || lower.contains("apikey") {
        Outcome::Fatal(FetchError::Auth {
            endpoint: endpoint.into(),
            message: detail.to_string(),
        })
    } else if lower.contains("rate limit") {
        Outcome::Retry(detail.to_string())
    } else {
        Outcome::Fatal(FetchError::Protocol {
            endpoint: endpoint.into(),
            message: format!("{message}: {detail}"),
        })
    }
}

/// Iterator over fetched transactions in block order.
///
/// Dropping the iterator early is an interruption: the checkpoint on disk
/// still names the last block page that was fully consumed.
pub struct FetchStream {
    client: Option<Client>,
    range: BlockRange,
    next_block: u64,
    buffer: VecDeque<Transaction>,
    pending_block: Option<u64>,
    records: u64,
    checkpoint: Option<Checkpoint>,
    checkpoint_path: Option<PathBuf>,
    finished: bool,
}

impl FetchStream {
    /// The most recently persisted checkpoint (or the one resumed from).
    pub fn checkpoint(&self) -> Option<&Checkpoint> {
        self.checkpoint.as_ref()
    }

    pub fn records_yielded(&self) -> u64 {
        self.records
    }

    fn persist(&mut self, block: u64) -> Result<(), FetchError> {
        let client = self.client.as_ref().expect("client present while fetching");
        let cp = Checkpoint {
            last_completed_block: block,
            records_written: self.records,
            source_descriptor: client.cfg.descriptor(),
        };
        if let Some(path) = &self.checkpoint_path {
            cp.save(path)?;
        }
        self.checkpoint = Some(cp);
        Ok(())
    }

    fn fetch_page(&mut self, start: u64, end: u64) -> Result<VecDeque<Transaction>, FetchError> {
        let client = self.client.as_mut().expect("client present while fetching");
        let url = client.cfg.base_url.clone();
        let page_size = client.cfg.page_size;
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for page in 1.. {
            let mut params = vec![
                ("module", "account".to_string()),
                ("action", "txlist".to_string()),
                ("startblock", start.to_string()),
                ("endblock", end.to_string()),
                ("page", page.to_string()),
                ("offset", page_size.to_string()),
                ("sort", "asc".to_string()),
            ];
            if let Some(a) = &client.cfg.address {
                params.push(("address", a.clone()));
            }
            if let Some(k) = &client.cfg.api_key {
                params.push(("apikey", k.clone()));
            }
            let rows = client.get_json(&url, &params, |v| interpret_txlist(&url, v))?;
            let n = rows.len();
            out.extend(rows.into_iter().filter(|t| {
                start <= t.block_number && t.block_number <= end && seen.insert(t.hash)
            }));
            if n < page_size {
                break;
            }
        }
        out.sort_by_key(|t| t.block_number);
        Ok(out.into())
    }
}

impl Iterator for FetchStream {
    type Item = Result<Transaction, FetchError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(tx) = self.buffer.pop_front() {
                self.records += 1;
                return Some(Ok(tx));
            }
            if let Some(block) = self.pending_block.take() {
                if let Err(e) = self.persist(block) {
                    self.finished = true;
                    return Some(Err(e));
                }
            }
            if self.finished || self.next_block > self.range.end {
                self.finished = true;
                return None;
            }
            let per = self.client.as_ref()?.cfg.blocks_per_request.max(1);
            let page_end = self.next_block.saturating_add(per - 1).min(self.range.end);
            match self.fetch_page(self.next_block, page_end) {
                Ok(txs) => {
                    self.buffer = txs;
                    self.pending_block = Some(page_end);
                    self.next_block = page_end + 1;
                }
                Err(e) => {
                    self.finished = true;
                    let e = match e {
                        FetchError::Resumable {
                            attempts, message, ..
                        } => FetchError::Resumable {
                            attempts,
                            message,
                            checkpoint: self.checkpoint.clone(),
                        },
                        other => other,
                    };
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Starts (or resumes) a fetch of every transaction in `range`.
///
/// With a checkpoint, fetching restarts after `last_completed_block` and the
/// record counter continues from `records_written`. When `checkpoint_path`
/// is given the checkpoint is rewritten after every completed block page.
pub fn fetch_transactions(
    cfg: &EndpointConfig,
    range: BlockRange,
    checkpoint: Option<Checkpoint>,
    checkpoint_path: Option<&Path>,
) -> Result<FetchStream, FetchError> {
    let mut stream = FetchStream {
        client: None,
        range,
        next_block: range.start,
        buffer: VecDeque::new(),
        pending_block: None,
        records: 0,
        checkpoint: None,
        checkpoint_path: checkpoint_path.map(Path::to_path_buf),
        finished: range.is_empty(),
    };
    if range.is_empty() {
        return Ok(stream);
    }
    if let Some(cp) = checkpoint {
        if cp.source_descriptor != cfg.descriptor() {
            return Err(FetchError::Checkpoint(format!(
                "checkpoint belongs to {:?}, not {:?}",
                cp.source_descriptor,
                cfg.descriptor()
            )));
        }
        if cp.last_completed_block + 1 < range.start || cp.last_completed_block > range.end {
            return Err(FetchError::Checkpoint(format!(
                "last_completed_block {} outside requested range {}..={}",
                cp.last_completed_block, range.start, range.end
            )));
        }
        stream.next_block = cp.last_completed_block + 1;
        stream.records = cp.records_written;
        stream.checkpoint = Some(cp);
    }
    stream.client = Some(Client::new(cfg));
    Ok(stream)
}

/// Fetches the Flashbots manifest for `range` by walking the blocks endpoint
/// backwards with `before`/`limit` paging.
pub fn fetch_flashbots_manifest(
    cfg: &EndpointConfig,
    range: BlockRange,
    limit: usize,
) -> Result<FlashbotsManifest, FetchError> {
    let mut manifest = FlashbotsManifest::default();
    if range.is_empty() {
        return Ok(manifest);
    }
    let url = cfg
        .flashbots_url
        .clone()
        .ok_or_else(|| FetchError::Protocol {
            endpoint: cfg.base_url.clone(),
            message: "no flashbots_url configured".into(),
        })?;
    let mut client = Client::new(cfg);
    let mut before = range.end.saturating_add(1);
    loop {
        let params = [("before", before.to_string()), ("limit", limit.to_string())];
        let blocks = client.get_json(&url, &params, |v| {
            match v.get("blocks").and_then(Value::as_array) {
                Some(list) => Outcome::Done(list.clone()),
                None => Outcome::Fatal(FetchError::Protocol {
                    endpoint: url.clone(),
                    message: "response lacks a blocks array".into(),
                }),
            }
        })?;
        if blocks.is_empty() {
            break;
        }
        let mut lowest = before;
        for block in &blocks {
            let pairs = parse_block_value(block).map_err(|message| FetchError::Protocol {
                endpoint: url.clone(),
                message,
            })?;
            if let Some(n) = block
                .get("block_number")
                .and_then(|b| b.as_u64().or_else(|| b.as_str()?.parse().ok()))
            {
                lowest = lowest.min(n);
            }
            manifest.extend(pairs.into_iter().filter(|(b, _)| range.contains(*b)));
        }
        if lowest <= range.start || lowest >= before {
            break;
        }
        before = lowest;
    }
    Ok(manifest)
}

/// Cuts an NDJSON output file back to its first `keep` records, discarding
/// anything written after the last checkpoint.
pub fn truncate_ndjson(path: &Path, keep: u64) -> std::io::Result<()> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && keep == 0 => return Ok(()),
        Err(e) => return Err(e),
    };
    let tmp = path.with_extension("ndjson.tmp");
    let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
    let mut kept = 0;
    for line in BufReader::new(file).lines() {
        if kept == keep {
            break;
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(out, "{line}")?;
        kept += 1;
    }
    out.flush()?;
    drop(out);
    if kept < keep {
        return Err(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            format!(
                "{} holds {kept} records but the checkpoint expects {keep}",
                path.display()
            ),
        ));
    }
    fs::rename(tmp, path)
}
