//! Endpoint configuration: a plain `key=value` file with `#` comments, plus
//! environment overrides for API keys.

use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "TXGRAPH_API_KEY";
pub const FLASHBOTS_URL_ENV: &str = "TXGRAPH_FLASHBOTS_URL";

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Base URL of an Etherscan-compatible `account/txlist` endpoint.
    pub base_url: String,
    pub api_key: Option<String>,
    /// Optional account filter passed through as `address=`.
    pub address: Option<String>,
    /// Flashbots blocks endpoint (`/v1/blocks`-style), if manifests should be fetched.
    pub flashbots_url: Option<String>,
    pub requests_per_second: f64,
    pub page_size: usize,
    /// Number of blocks requested per page. Checkpoints land on these boundaries.
    pub blocks_per_request: u64,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.etherscan.io/api".into(),
            api_key: None,
            address: None,
            flashbots_url: None,
            requests_per_second: 5.0,
            page_size: 1000,
            blocks_per_request: 100,
            max_retries: 5,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(30),
            timeout: Duration::from_secs(30),
        }
    }
}

impl EndpointConfig {
    pub fn for_url(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            ..Self::default()
        }
    }

    /// Text identifying the endpoint in checkpoints. Never includes the key.
    pub fn descriptor(&self) -> String {
        match &self.address {
            Some(a) => format!("{}?address={}", self.base_url, a.to_lowercase()),
            None => self.base_url.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got {line:?}", i + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::Config(format!(
                    "line {}: {key} must be {what}, got {value:?}",
                    i + 1
                ))
            };
            match key {
                "base_url" | "url" => cfg.base_url = value.to_string(),
                "api_key" => cfg.api_key = Some(value.to_string()).filter(|v| !v.is_empty()),
                "address" => cfg.address = Some(value.to_string()).filter(|v| !v.is_empty()),
                "flashbots_url" => {
                    cfg.flashbots_url = Some(value.to_string()).filter(|v| !v.is_empty())
                }
                "requests_per_second" | "rate_limit" => {
                    cfg.requests_per_second = value
                        .parse::<f64>()
                        .ok()
                        .filter(|v| *v > 0.0 && v.is_finite())
                        .ok_or_else(|| bad("a positive number"))?
                }
                "page_size" => {
                    cfg.page_size = value
                        .parse()
                        .ok()
                        .filter(|v| *v > 0)
                        .ok_or_else(|| bad("a positive integer"))?
                }
                "blocks_per_request" => {
                    cfg.blocks_per_request = value
                        .parse()
                        .ok()
                        .filter(|v| *v > 0)
                        .ok_or_else(|| bad("a positive integer"))?
                }
                "max_retries" => cfg.max_retries = value.parse().map_err(|_| bad("an integer"))?,
                "initial_backoff_ms" => {
                    cfg.initial_backoff =
                        Duration::from_millis(value.parse().map_err(|_| bad("an integer"))?)
                }
                "max_backoff_ms" => {
                    cfg.max_backoff =
                        Duration::from_millis(value.parse().map_err(|_| bad("an integer"))?)
                }
                "timeout_secs" => {
                    cfg.timeout = Duration::from_secs(value.parse().map_err(|_| bad("an integer"))?)
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {other:?}",
                        i + 1
                    )))
                }
            }
        }
        Ok(cfg)
    }

    /// Reads a config file and applies environment overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        cfg.apply_env(|k| std::env::var(k).ok());
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(key) = get(API_KEY_ENV).filter(|k| !k.is_empty()) {
            self.api_key = Some(key);
        }
        if let Some(url) = get(FLASHBOTS_URL_ENV).filter(|k| !k.is_empty()) {
            self.flashbots_url = Some(url);
        }
    }
}
