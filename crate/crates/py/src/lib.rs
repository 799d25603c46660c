//! Python bindings: parsing, dataset loading, windowing, degree tables,
//! daily series, growth ranking, CCDFs and synthetic corpora.

use std::collections::HashSet;
use std::path::PathBuf;

use chrono::NaiveDate;
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use txgraph::analytics::{self, load_tag_map, RankOrder, TagMap};
use txgraph::ingest::{
    self, BadRecordPolicy, Dataset, FlashbotsManifest, LoadFilter, LoadReport, SourceBatch,
    TxFormat,
};
use txgraph::synth::{self, SynthConfig};
use txgraph::tempgraph::{self, DegreeTable, FirstDayConvention, Metric, WindowSpec};
use txgraph::{Address, Error, Transaction, TxHash};

create_exception!(txgraph_py, TxgraphError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => TxgraphError::new_err(e.to_string()),
    }
}

fn invalid(e: impl std::fmt::Display) -> PyErr {
    TxgraphError::new_err(e.to_string())
}

/// Parses a lowercase option name through the enum's serde names.
fn choice<T: DeserializeOwned>(what: &str, value: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| TxgraphError::new_err(format!("unknown {what} {value:?}")))
}

fn address(raw: &str) -> PyResult<Address> {
    Address::parse(raw).map_err(invalid)
}

fn date(raw: Option<&str>) -> PyResult<Option<NaiveDate>> {
    raw.map(|s| {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| invalid(format!("date {s:?}: {e}")))
    })
    .transpose()
}

fn window_spec(
    mode: &str,
    anchor: Option<&str>,
    count: Option<u32>,
    blocks: Option<Vec<(u64, u64)>>,
) -> PyResult<WindowSpec> {
    let spec = match mode {
        "day" => WindowSpec::days(date(anchor)?, count),
        "week" => WindowSpec::weeks(date(anchor)?, count),
        "blocks" => WindowSpec::blocks(
            blocks.ok_or_else(|| invalid("mode \"blocks\" needs blocks=[(start, end), ...]"))?,
        ),
        other => return Err(invalid(format!("unknown window mode {other:?}"))),
    };
    spec.validate().map_err(to_py)?;
    Ok(spec)
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(invalid)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyfunction]
fn normalize_address(raw: &str) -> PyResult<String> {
    Ok(address(raw)?.to_string())
}

#[pyfunction]
fn shorten_address(raw: &str) -> PyResult<String> {
    Ok(txgraph::shorten_address(&address(raw)?))
}

/// One external transaction.
#[pyclass(name = "Transaction", frozen, from_py_object)]
#[derive(Clone)]
struct PyTransaction(Transaction);

#[pymethods]
impl PyTransaction {
    #[new]
    #[pyo3(signature = (hash, block_number, timestamp, sender, to=None, success=None))]
    fn new(
        hash: &str,
        block_number: u64,
        timestamp: i64,
        sender: &str,
        to: Option<&str>,
        success: Option<bool>,
    ) -> PyResult<Self> {
        let to = to.map(address).transpose()?;
        let hash = TxHash::parse(hash).map_err(invalid)?;
        Transaction::new(hash, block_number, timestamp, address(sender)?, to, success)
            .map(Self)
            .map_err(invalid)
    }

    /// Parses one NDJSON line or Etherscan-style JSON object.
    #[staticmethod]
    fn from_json(line: &str) -> PyResult<Self> {
        ingest::parse_tx_record(line, &TxFormat::Ndjson, 1)
            .map(Self)
            .map_err(invalid)
    }

    #[getter]
    fn hash(&self) -> String {
        self.0.hash.to_string()
    }

    #[getter]
    fn block_number(&self) -> u64 {
        self.0.block_number
    }

    #[getter]
    fn timestamp(&self) -> i64 {
        self.0.timestamp
    }

    #[getter]
    fn sender(&self) -> String {
        self.0.from.to_string()
    }

    #[getter]
    fn to(&self) -> Option<String> {
        self.0.to.map(|a| a.to_string())
    }

    #[getter]
    fn success(&self) -> Option<bool> {
        self.0.success
    }

    fn __repr__(&self) -> String {
        let to = self.0.to.map_or_else(|| "None".to_string(), |a| a.short());
        format!(
            "Transaction({} block={} {}->{})",
            self.0.hash,
            self.0.block_number,
            self.0.from.short(),
            to
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

#[pyfunction]
#[pyo3(signature = (path, strict=false))]
fn read_transactions(path: PathBuf, strict: bool) -> PyResult<Vec<PyTransaction>> {
    let policy = if strict {
        BadRecordPolicy::Abort
    } else {
        BadRecordPolicy::Skip
    };
    let (txs, _) = ingest::read_tx_file(&path, policy).map_err(to_py)?;
    Ok(txs.into_iter().map(PyTransaction).collect())
}

/// Deduplicated, filtered transactions with Flashbots membership.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    ds: Dataset,
    report: LoadReport,
}

fn filter(min_block: Option<u64>, max_block: Option<u64>, require_success: bool) -> LoadFilter {
    LoadFilter {
        min_block,
        max_block,
        require_success,
    }
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    #[pyo3(signature = (paths, flashbots_manifest=None, min_block=None, max_block=None, require_success=false, strict=false))]
    fn from_files(
        paths: Vec<PathBuf>,
        flashbots_manifest: Option<PathBuf>,
        min_block: Option<u64>,
        max_block: Option<u64>,
        require_success: bool,
        strict: bool,
    ) -> PyResult<Self> {
        let policy = if strict {
            BadRecordPolicy::Abort
        } else {
            BadRecordPolicy::Skip
        };
        let manifest = flashbots_manifest
            .map(|p| FlashbotsManifest::read(&p, policy).map(|(m, _)| m))
            .transpose()
            .map_err(to_py)?;
        let (ds, report) = ingest::load_files(
            &paths,
            manifest.as_ref(),
            filter(min_block, max_block, require_success),
            policy,
        )
        .map_err(to_py)?;
        Ok(Self { ds, report })
    }

    /// `flashbots` holds `(block_number, transaction_hash)` pairs.
    #[staticmethod]
    #[pyo3(signature = (transactions, flashbots=None, min_block=None, max_block=None, require_success=false))]
    fn from_transactions(
        transactions: Vec<PyTransaction>,
        flashbots: Option<Vec<(u64, String)>>,
        min_block: Option<u64>,
        max_block: Option<u64>,
        require_success: bool,
    ) -> PyResult<Self> {
        let manifest = flashbots
            .map(|pairs| {
                pairs
                    .into_iter()
                    .map(|(b, h)| TxHash::parse(&h).map(|h| (b, h)))
                    .collect::<Result<Vec<_>, _>>()
                    .map(FlashbotsManifest::from_pairs)
            })
            .transpose()
            .map_err(invalid)?;
        let batch = SourceBatch {
            descriptor: "python".into(),
            transactions: transactions.into_iter().map(|t| t.0).collect(),
        };
        let (ds, report) = ingest::load_dataset(
            vec![batch],
            manifest.as_ref(),
            filter(min_block, max_block, require_success),
        );
        Ok(Self { ds, report })
    }

    fn __len__(&self) -> usize {
        self.ds.len()
    }

    #[pyo3(signature = (view="full"))]
    fn view_len(&self, view: &str) -> PyResult<usize> {
        Ok(self.ds.view_len(choice("view", view)?))
    }

    fn transactions(&self) -> Vec<PyTransaction> {
        self.ds
            .transactions()
            .iter()
            .cloned()
            .map(PyTransaction)
            .collect()
    }

    fn block_range(&self) -> Option<(u64, u64)> {
        self.ds.block_range()
    }

    /// Load counters as a dict.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.report)
    }

    fn warnings(&self) -> Vec<String> {
        self.report.warnings()
    }
}

fn partition(ds: &PyDataset, spec: &WindowSpec, view: &str) -> PyResult<tempgraph::Partition> {
    tempgraph::partition_windows(&ds.ds, spec, choice("view", view)?).map_err(to_py)
}

/// `(index, bounds, transaction_count)` per window.
#[pyfunction]
#[pyo3(signature = (dataset, mode="week", anchor=None, count=None, blocks=None, view="full"))]
fn windows(
    dataset: &PyDataset,
    mode: &str,
    anchor: Option<&str>,
    count: Option<u32>,
    blocks: Option<Vec<(u64, u64)>>,
    view: &str,
) -> PyResult<Vec<(usize, String, usize)>> {
    let part = partition(dataset, &window_spec(mode, anchor, count, blocks)?, view)?;
    Ok(part
        .windows
        .iter()
        .map(|w| (w.index, w.bounds.to_string(), w.len()))
        .collect())
}

/// Per-account degrees of one window.
#[pyclass(name = "DegreeTable", frozen)]
struct PyDegreeTable(DegreeTable);

#[pymethods]
impl PyDegreeTable {
    #[getter]
    fn window(&self) -> usize {
        self.0.window
    }

    #[getter]
    fn metric(&self) -> &'static str {
        self.0.metric.as_str()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[pyo3(signature = (account, direction="total"))]
    fn degree(&self, account: &str, direction: &str) -> PyResult<u64> {
        Ok(self
            .0
            .degree(&address(account)?, choice("direction", direction)?))
    }

    /// `(address, indegree, outdegree, total)` in address order.
    fn rows(&self) -> Vec<(String, u64, u64, u64)> {
        self.0
            .iter()
            .map(|r| (r.account.to_string(), r.indegree, r.outdegree, r.total))
            .collect()
    }

    #[pyo3(signature = (direction="total"))]
    fn sum(&self, direction: &str) -> PyResult<u64> {
        Ok(self.0.sum(choice("direction", direction)?))
    }

    /// `(degree, fraction)` points over accounts with degree >= 1.
    #[pyo3(signature = (direction="in"))]
    fn ccdf(&self, direction: &str) -> PyResult<Vec<(u64, f64)>> {
        let points = analytics::degree_ccdf(&self.0, choice("direction", direction)?);
        Ok(points.into_iter().map(|p| (p.degree, p.fraction)).collect())
    }
}

#[pyfunction]
#[pyo3(signature = (dataset, mode="week", anchor=None, count=None, blocks=None, view="full", metric="distinct"))]
fn degree_tables(
    dataset: &PyDataset,
    mode: &str,
    anchor: Option<&str>,
    count: Option<u32>,
    blocks: Option<Vec<(u64, u64)>>,
    view: &str,
    metric: &str,
) -> PyResult<Vec<PyDegreeTable>> {
    let metric = [Metric::Distinct, Metric::TxCount]
        .into_iter()
        .find(|m| m.as_str() == metric)
        .ok_or_else(|| invalid(format!("unknown metric {metric:?}")))?;
    let part = partition(dataset, &window_spec(mode, anchor, count, blocks)?, view)?;
    Ok(tempgraph::build_window_graphs(&dataset.ds, &part)
        .iter()
        .map(|g| PyDegreeTable(tempgraph::degree_table(g, metric)))
        .collect())
}

/// `(date, transaction_count)` per UTC day.
#[pyfunction]
#[pyo3(signature = (dataset, view="full", anchor=None, count=None))]
fn volume(
    dataset: &PyDataset,
    view: &str,
    anchor: Option<&str>,
    count: Option<u32>,
) -> PyResult<Vec<(String, u64)>> {
    let part = partition(dataset, &window_spec("day", anchor, count, None)?, view)?;
    let series = analytics::volume_series(&part).map_err(to_py)?;
    Ok(series
        .points
        .iter()
        .map(|(d, n)| (d.to_string(), *n))
        .collect())
}

/// `(date, cumulative, new, active)` per UTC day.
#[pyfunction]
#[pyo3(signature = (dataset, seed_accounts=Vec::new(), view="full", anchor=None, count=None, first_day="seed-inclusive"))]
fn activity(
    dataset: &PyDataset,
    seed_accounts: Vec<String>,
    view: &str,
    anchor: Option<&str>,
    count: Option<u32>,
    first_day: &str,
) -> PyResult<Vec<(String, u64, u64, u64)>> {
    let seed: HashSet<Address> = seed_accounts
        .iter()
        .map(|s| address(s))
        .collect::<PyResult<_>>()?;
    let convention: FirstDayConvention = choice("first-day convention", first_day)?;
    let part = partition(dataset, &window_spec("day", anchor, count, None)?, view)?;
    let series =
        tempgraph::activity_series(&dataset.ds, &part, &seed, convention).map_err(to_py)?;
    Ok(series
        .days
        .iter()
        .map(|d| (d.date.to_string(), d.cumulative, d.new, d.active))
        .collect())
}

/// `(address, degree_prev, degree_next, delta)` in address order.
#[pyfunction]
#[pyo3(signature = (prev, next, direction="total"))]
fn degree_growth(
    prev: &PyDegreeTable,
    next: &PyDegreeTable,
    direction: &str,
) -> PyResult<Vec<(String, u64, u64, i64)>> {
    let records = analytics::degree_growth(&prev.0, &next.0, choice("direction", direction)?)
        .map_err(to_py)?;
    Ok(records
        .iter()
        .map(|r| (r.account.to_string(), r.degree_prev, r.degree_next, r.delta))
        .collect())
}

/// Ranked growth rows as dicts, ties broken by later degree then address.
#[pyfunction]
#[pyo3(signature = (prev, next, k=10, direction="total", order="top", tags=None))]
fn top_k<'py>(
    py: Python<'py>,
    prev: &PyDegreeTable,
    next: &PyDegreeTable,
    k: usize,
    direction: &str,
    order: &str,
    tags: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let order = match order {
        "top" => RankOrder::Top,
        "bottom" => RankOrder::Bottom,
        other => return Err(invalid(format!("unknown order {other:?}"))),
    };
    let tags = match tags {
        Some(p) => load_tag_map(&p).map_err(to_py)?.0,
        None => TagMap::bundled(),
    };
    let records = analytics::degree_growth(&prev.0, &next.0, choice("direction", direction)?)
        .map_err(to_py)?;
    analytics::rank_growth(&records, k, &tags, order)
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("rank", r.rank)?;
            d.set_item("short", r.short)?;
            d.set_item("address", r.account.to_string())?;
            d.set_item("label", r.label)?;
            d.set_item("kind", r.kind.as_str())?;
            d.set_item("delta", r.delta)?;
            d.set_item("degree_prev", r.degree_prev)?;
            d.set_item("degree_next", r.degree_next)?;
            Ok(d)
        })
        .collect()
}

/// Seeded synthetic corpus: `(transactions, flashbots_pairs, seed_accounts)`.
/// With `out`, the three files are also written there.
#[pyfunction]
#[pyo3(signature = (seed=42, transactions=10_000, days=28, accounts=2_000, flashbots_share=0.05, duplicate_share=0.0, failed_share=0.0, with_status=false, out=None))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn synthesize(
    seed: u64,
    transactions: usize,
    days: u32,
    accounts: usize,
    flashbots_share: f64,
    duplicate_share: f64,
    failed_share: f64,
    with_status: bool,
    out: Option<PathBuf>,
) -> PyResult<(Vec<PyTransaction>, Vec<(u64, String)>, Vec<String>)> {
    let corpus = synth::generate(&SynthConfig {
        seed,
        transactions,
        days,
        accounts,
        flashbots_share,
        duplicate_share,
        failed_share,
        with_status,
        ..SynthConfig::default()
    });
    if let Some(dir) = out {
        synth::write_corpus(&dir, &corpus).map_err(to_py)?;
    }
    Ok((
        corpus.transactions.into_iter().map(PyTransaction).collect(),
        corpus
            .manifest
            .iter()
            .map(|(b, h)| (b, h.to_string()))
            .collect(),
        corpus.seed_accounts.iter().map(|a| a.to_string()).collect(),
    ))
}

#[pymodule]
fn txgraph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TxgraphError", m.py().get_type::<TxgraphError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyTransaction>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyDegreeTable>()?;
    m.add_function(wrap_pyfunction!(normalize_address, m)?)?;
    m.add_function(wrap_pyfunction!(shorten_address, m)?)?;
    m.add_function(wrap_pyfunction!(read_transactions, m)?)?;
    m.add_function(wrap_pyfunction!(windows, m)?)?;
    m.add_function(wrap_pyfunction!(degree_tables, m)?)?;
    m.add_function(wrap_pyfunction!(volume, m)?)?;
    m.add_function(wrap_pyfunction!(activity, m)?)?;
    m.add_function(wrap_pyfunction!(degree_growth, m)?)?;
    m.add_function(wrap_pyfunction!(top_k, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
