//! Line-level parsers for transaction dumps (NDJSON and CSV) and their
//! writers.
//!
//! Field names follow the collected schema: `hash`, `blockNumber`,
//! `timestamp`, `from`, `to`, plus an optional `isError`. Numeric fields are
//! accepted either as JSON integers or as decimal strings.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, RecordError, Result};
use crate::model::{Address, Transaction, TxHash};

pub const CSV_HEADER: [&str; 6] = ["hash", "blockNumber", "timestamp", "from", "to", "isError"];

/// Column positions for CSV input, resolved from a header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLayout {
    hash: usize,
    block_number: usize,
    timestamp: usize,
    from: usize,
    to: Option<usize>,
    is_error: Option<usize>,
}

impl Default for CsvLayout {
    fn default() -> Self {
        Self {
            hash: 0,
            block_number: 1,
            timestamp: 2,
            from: 3,
            to: Some(4),
            is_error: Some(5),
        }
    }
}

impl CsvLayout {
    pub fn from_header<'a>(columns: impl IntoIterator<Item = &'a str>) -> Result<Self, String> {
        let cols: Vec<&str> = columns.into_iter().map(str::trim).collect();
        let find = |names: &[&str]| cols.iter().position(|c| names.contains(c));
        let required = |names: &[&str]| {
            find(names).ok_or_else(|| format!("CSV header lacks column {:?}", names[0]))
        };
        Ok(Self {
            hash: required(&["hash"])?,
            block_number: required(&["blockNumber"])?,
            timestamp: required(&["timestamp", "timeStamp"])?,
            from: required(&["from"])?,
            to: find(&["to"]),
            is_error: find(&["isError"]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxFormat {
    Ndjson,
    Csv(CsvLayout),
}

impl TxFormat {
    pub fn csv() -> Self {
        TxFormat::Csv(CsvLayout::default())
    }

    /// `.csv` files are CSV, everything else is NDJSON.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TxFormat::csv(),
            _ => TxFormat::Ndjson,
        }
    }
}

/// What to do with a record that fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BadRecordPolicy {
    #[default]
    Skip,
    Abort,
}

#[derive(Deserialize)]
struct RawNdjsonTx {
    hash: Option<Value>,
    #[serde(rename = "blockNumber")]
    block_number: Option<Value>,
    #[serde(alias = "timeStamp")]
    timestamp: Option<Value>,
    from: Option<Value>,
    to: Option<Value>,
    #[serde(rename = "isError")]
    is_error: Option<Value>,
}

fn value_text<'a>(v: &'a Option<Value>) -> Option<std::borrow::Cow<'a, str>> {
    match v {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.as_str().into()),
        Some(Value::Number(n)) => Some(n.to_string().into()),
        Some(Value::Bool(b)) => Some(if *b { "1" } else { "0" }.into()),
        Some(other) => Some(other.to_string().into()),
    }
}

struct Fields<'a> {
    hash: Option<&'a str>,
    block_number: Option<&'a str>,
    timestamp: Option<&'a str>,
    from: Option<&'a str>,
    to: Option<&'a str>,
    is_error: Option<&'a str>,
}

fn parse_integer(name: &str, raw: &str) -> Result<u64, String> {
    let raw = raw.trim();
    let parsed = match raw.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => raw.parse::<u64>(),
    };
    parsed.map_err(|_| format!("{name} is not a non-negative integer: {raw:?}"))
}

fn build(fields: Fields<'_>) -> Result<Transaction, String> {
    let require = |name: &str, v: Option<&str>| -> Result<String, String> {
        match v.map(str::trim) {
            Some(s) if !s.is_empty() => Ok(s.to_string()),
            _ => Err(format!("missing required field {name:?}")),
        }
    };
    let hash = TxHash::parse(&require("hash", fields.hash)?).map_err(|e| e.to_string())?;
    let block_number = parse_integer("blockNumber", &require("blockNumber", fields.block_number)?)?;
    let timestamp = parse_integer("timestamp", &require("timestamp", fields.timestamp)?)?;
    let timestamp = i64::try_from(timestamp).map_err(|_| "timestamp out of range".to_string())?;
    let from = Address::parse(&require("from", fields.from)?).map_err(|e| e.to_string())?;
    let to = match fields.to.map(str::trim) {
        None | Some("") | Some("null") => None,
        Some(s) => Some(Address::parse(s).map_err(|e| e.to_string())?),
    };
    let success = match fields.is_error.map(str::trim) {
        None | Some("") => None,
        Some("0") => Some(true),
        Some("1") => Some(false),
        Some(other) => return Err(format!("isError must be \"0\" or \"1\", got {other:?}")),
    };
    Transaction::new(hash, block_number, timestamp, from, to, success)
}

/// Parses one record. `line_no` is 1-based and is carried into errors.
pub fn parse_tx_record(
    line: &str,
    format: &TxFormat,
    line_no: usize,
) -> Result<Transaction, RecordError> {
    let err = |reason: String| RecordError::new(line_no, reason);
    match format {
        TxFormat::Ndjson => {
            let raw: RawNdjsonTx =
                serde_json::from_str(line).map_err(|e| err(format!("invalid JSON: {e}")))?;
            from_raw(raw).map_err(err)
        }
        TxFormat::Csv(layout) => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .from_reader(line.as_bytes());
            let record = match reader.records().next() {
                Some(Ok(r)) => r,
                Some(Err(e)) => return Err(err(format!("invalid CSV: {e}"))),
                None => return Err(err("empty CSV record".into())),
            };
            parse_csv_record(&record, layout).map_err(err)
        }
    }
}

/// Parses an already-decoded JSON object, e.g. one row of an API response.
pub(crate) fn parse_tx_value(value: &Value) -> Result<Transaction, String> {
    let raw = RawNdjsonTx::deserialize(value).map_err(|e| format!("invalid record: {e}"))?;
    from_raw(raw)
}

fn from_raw(raw: RawNdjsonTx) -> Result<Transaction, String> {
    let hash = value_text(&raw.hash);
    let block_number = value_text(&raw.block_number);
    let timestamp = value_text(&raw.timestamp);
    let from = value_text(&raw.from);
    let to = value_text(&raw.to);
    let is_error = value_text(&raw.is_error);
    build(Fields {
        hash: hash.as_deref(),
        block_number: block_number.as_deref(),
        timestamp: timestamp.as_deref(),
        from: from.as_deref(),
        to: to.as_deref(),
        is_error: is_error.as_deref(),
    })
}

fn parse_csv_record(record: &csv::StringRecord, layout: &CsvLayout) -> Result<Transaction, String> {
    build(Fields {
        hash: record.get(layout.hash),
        block_number: record.get(layout.block_number),
        timestamp: record.get(layout.timestamp),
        from: record.get(layout.from),
        to: layout.to.and_then(|i| record.get(i)),
        is_error: layout.is_error.and_then(|i| record.get(i)),
    })
}

/// Serializes a transaction as one NDJSON line (without the trailing newline).
pub fn to_ndjson_line(tx: &Transaction) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("hash".into(), Value::String(tx.hash.to_hex()));
    obj.insert("blockNumber".into(), Value::from(tx.block_number));
    obj.insert("timestamp".into(), Value::from(tx.timestamp));
    obj.insert("from".into(), Value::String(tx.from.to_hex()));
    obj.insert(
        "to".into(),
        tx.to.map_or(Value::Null, |a| Value::String(a.to_hex())),
    );
    if let Some(ok) = tx.success {
        obj.insert(
            "isError".into(),
            Value::String(if ok { "0" } else { "1" }.into()),
        );
    }
    Value::Object(obj).to_string()
}

pub fn to_csv_fields(tx: &Transaction) -> [String; 6] {
    [
        tx.hash.to_hex(),
        tx.block_number.to_string(),
        tx.timestamp.to_string(),
        tx.from.to_hex(),
        tx.to.map(|a| a.to_hex()).unwrap_or_default(),
        tx.success
            .map(|ok| if ok { "0" } else { "1" }.to_string())
            .unwrap_or_default(),
    ]
}

pub fn write_ndjson<'a, W: Write>(
    mut out: W,
    txs: impl IntoIterator<Item = &'a Transaction>,
) -> std::io::Result<()> {
    for tx in txs {
        out.write_all(to_ndjson_line(tx).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_csv<'a, W: Write>(
    out: W,
    txs: impl IntoIterator<Item = &'a Transaction>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for tx in txs {
        w.write_record(to_csv_fields(tx))?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub records: usize,
    pub skipped: usize,
    /// The first few record errors, for the ingestion summary.
    pub sample_errors: Vec<String>,
}

impl ParseStats {
    const MAX_SAMPLES: usize = 10;

    fn note(&mut self, path: &Path, e: &RecordError) {
        self.skipped += 1;
        if self.sample_errors.len() < Self::MAX_SAMPLES {
            self.sample_errors.push(format!("{}: {e}", path.display()));
        }
    }

    pub fn merge(&mut self, other: ParseStats) {
        self.records += other.records;
        self.skipped += other.skipped;
        for e in other.sample_errors {
            if self.sample_errors.len() < Self::MAX_SAMPLES {
                self.sample_errors.push(e);
            }
        }
    }
}

/// Reads a whole transaction file. Blank lines are ignored.
pub fn read_tx_file(
    path: &Path,
    policy: BadRecordPolicy,
) -> Result<(Vec<Transaction>, ParseStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut stats = ParseStats::default();
    let mut out = Vec::new();
    let on_err = |e: RecordError, stats: &mut ParseStats| -> Result<()> {
        match policy {
            BadRecordPolicy::Abort => Err(Error::Record {
                path: path.display().to_string(),
                source: e,
            }),
            BadRecordPolicy::Skip => {
                stats.note(path, &e);
                Ok(())
            }
        }
    };

    match TxFormat::for_path(path) {
        TxFormat::Ndjson => {
            let mut line = String::new();
            let mut line_no = 0;
            loop {
                line.clear();
                let n = reader
                    .read_line(&mut line)
                    .map_err(|e| Error::io(path, e))?;
                if n == 0 {
                    break;
                }
                line_no += 1;
                if line.trim().is_empty() {
                    continue;
                }
                stats.records += 1;
                match parse_tx_record(&line, &TxFormat::Ndjson, line_no) {
                    Ok(tx) => out.push(tx),
                    Err(e) => on_err(e, &mut stats)?,
                }
            }
        }
        TxFormat::Csv(_) => {
            let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
            let header = rdr.headers()?.clone();
            let layout = CsvLayout::from_header(header.iter()).map_err(|reason| Error::Record {
                path: path.display().to_string(),
                source: RecordError::new(1, reason),
            })?;
            let mut record = csv::StringRecord::new();
            loop {
                let line_no = rdr.position().line() as usize;
                match rdr.read_record(&mut record) {
                    Ok(false) => break,
                    Ok(true) => {
                        if record.iter().all(|f| f.trim().is_empty()) {
                            continue;
                        }
                        stats.records += 1;
                        match parse_csv_record(&record, &layout) {
                            Ok(tx) => out.push(tx),
                            Err(reason) => on_err(RecordError::new(line_no, reason), &mut stats)?,
                        }
                    }
                    Err(e) => {
                        stats.records += 1;
                        on_err(
                            RecordError::new(line_no, format!("invalid CSV: {e}")),
                            &mut stats,
                        )?;
                    }
                }
            }
        }
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HASH: &str = "0xabababababababababababababababababababababababababababababababab";
    const FROM: &str = "0xa090e606e30bd747d4e6245a1517ebe430f0057e";
    const TO: &str = "0x1a2b3c4d5e6f708192a3b4c5d6e7f8091a2b3c4d";

    #[test]
    fn parses_ndjson_with_string_numbers() {
        let line = format!(
            r#"{{"hash":"{HASH}","blockNumber":"14174989","timestamp":"1644451200","from":"{FROM}","to":"{TO}"}}"#
        );
        let tx = parse_tx_record(&line, &TxFormat::Ndjson, 1).unwrap();
        assert_eq!(tx.hash.to_hex(), HASH);
        assert_eq!(tx.block_number, 14174989);
        assert_eq!(tx.timestamp, 1644451200);
        assert_eq!(tx.from.to_hex(), FROM);
        assert_eq!(tx.to.unwrap().to_hex(), TO);
        assert_eq!(tx.success, None);
    }

    #[test]
    fn integer_numbers_and_status() {
        let line = format!(
            r#"{{"hash":"{HASH}","blockNumber":14174989,"timeStamp":1644451200,"from":"{FROM}","to":null,"isError":"1"}}"#
        );
        let tx = parse_tx_record(&line, &TxFormat::Ndjson, 1).unwrap();
        assert_eq!(tx.to, None);
        assert_eq!(tx.success, Some(false));
        let ok = line.replace(r#""isError":"1""#, r#""isError":"0""#);
        assert_eq!(
            parse_tx_record(&ok, &TxFormat::Ndjson, 1).unwrap().success,
            Some(true)
        );
    }

    #[test]
    fn empty_to_is_contract_creation() {
        let line = format!(
            r#"{{"hash":"{HASH}","blockNumber":"5","timestamp":"1644451200","from":"{FROM}","to":""}}"#
        );
        assert_eq!(
            parse_tx_record(&line, &TxFormat::Ndjson, 1).unwrap().to,
            None
        );
    }

    #[test]
    fn missing_from_reports_line() {
        let line = format!(
            r#"{{"hash":"{HASH}","blockNumber":"5","timestamp":"1644451200","to":"{TO}"}}"#
        );
        let e = parse_tx_record(&line, &TxFormat::Ndjson, 17).unwrap_err();
        assert_eq!(e.line, 17);
        assert!(e.reason.contains("from"), "{e}");
    }

    #[test]
    fn malformed_values_rejected() {
        let bad_block = format!(
            r#"{{"hash":"{HASH}","blockNumber":"abc","timestamp":"1644451200","from":"{FROM}"}}"#
        );
        assert!(parse_tx_record(&bad_block, &TxFormat::Ndjson, 1).is_err());
        let bad_hex = format!(
            r#"{{"hash":"0x12","blockNumber":"1","timestamp":"1644451200","from":"{FROM}"}}"#
        );
        assert!(parse_tx_record(&bad_hex, &TxFormat::Ndjson, 1).is_err());
        assert!(parse_tx_record("{not json", &TxFormat::Ndjson, 1).is_err());
        let zero_ts =
            format!(r#"{{"hash":"{HASH}","blockNumber":"1","timestamp":"0","from":"{FROM}"}}"#);
        assert!(parse_tx_record(&zero_ts, &TxFormat::Ndjson, 1).is_err());
    }

    #[test]
    fn csv_line_default_layout() {
        let line = format!("{HASH},14174989,1644451200,{FROM},,1");
        let tx = parse_tx_record(&line, &TxFormat::csv(), 2).unwrap();
        assert_eq!(tx.to, None);
        assert_eq!(tx.success, Some(false));
    }

    #[test]
    fn csv_header_reordering() {
        let layout =
            CsvLayout::from_header(["from", "to", "hash", "timestamp", "blockNumber"]).unwrap();
        let line = format!("{FROM},{TO},{HASH},1644451200,7");
        let tx = parse_tx_record(&line, &TxFormat::Csv(layout), 2).unwrap();
        assert_eq!(tx.block_number, 7);
        assert_eq!(tx.success, None);
        assert!(CsvLayout::from_header(["hash", "to"]).is_err());
    }

    #[test]
    fn read_file_skips_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("txs.ndjson");
        let good = format!(
            r#"{{"hash":"{HASH}","blockNumber":"5","timestamp":"1644451200","from":"{FROM}","to":"{TO}"}}"#
        );
        std::fs::write(&path, format!("{good}\n\n{{\"hash\":1}}\n")).unwrap();
        let (txs, stats) = read_tx_file(&path, BadRecordPolicy::Skip).unwrap();
        assert_eq!(txs.len(), 1);
        assert_eq!((stats.records, stats.skipped), (2, 1));
        assert!(stats.sample_errors[0].contains("line 3"));
        let err = read_tx_file(&path, BadRecordPolicy::Abort).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    fn arb_tx() -> impl Strategy<Value = Transaction> {
        (
            proptest::array::uniform32(any::<u8>()),
            1u64..30_000_000,
            1i64..4_000_000_000,
            proptest::array::uniform20(any::<u8>()),
            proptest::option::of(proptest::array::uniform20(any::<u8>())),
            proptest::option::of(any::<bool>()),
        )
            .prop_map(|(h, b, t, f, to, s)| {
                Transaction::new(
                    TxHash::from_bytes(h),
                    b,
                    t,
                    Address::from_bytes(f),
                    to.map(Address::from_bytes),
                    s,
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn ndjson_round_trip(tx in arb_tx()) {
            let line = to_ndjson_line(&tx);
            prop_assert_eq!(parse_tx_record(&line, &TxFormat::Ndjson, 1).unwrap(), tx);
        }

        #[test]
        fn csv_round_trip(tx in arb_tx()) {
            let mut buf = Vec::new();
            write_csv(&mut buf, [&tx]).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let row = text.lines().nth(1).unwrap();
            prop_assert_eq!(parse_tx_record(row, &TxFormat::csv(), 2).unwrap(), tx);
        }
    }
}
