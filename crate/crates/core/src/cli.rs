//! Command-line front end: `ingest`, `analyze` and `synth`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, LineWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytics::RankOrder;
use crate::error::{Error, FetchError, Result};
use crate::ingest::fetch::truncate_ndjson;
use crate::ingest::parse::write_ndjson;
use crate::ingest::{
    fetch_flashbots_manifest, fetch_transactions, load_files, BadRecordPolicy, BlockRange,
    Checkpoint, EndpointConfig, FlashbotsManifest, LoadFilter, LoadReport, View,
};
use crate::pipeline::{run_analyze, AnalysisParams, AnalyzeConfig};
use crate::preset::{StudyPreset, STUDY_2022};
use crate::report::InputDigest;
use crate::synth::{generate, write_corpus, SynthConfig};
use crate::tempgraph::{Direction, FirstDayConvention, Metric, WindowSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Temporal graph analytics for Ethereum transactions.
#[derive(Debug, Parser)]
#[command(name = "txgraph", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize transaction files or fetch from an endpoint into a dataset.
    Ingest(IngestArgs),
    /// Window a dataset and write volume, activity, degree, CCDF and growth reports.
    Analyze(AnalyzeArgs),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// 2022-02-10 through 2022-03-10 UTC, blocks 14174989 to 14355747.
    #[value(name = "paper-study")]
    Study2022,
}

impl PresetArg {
    fn get(self) -> &'static StudyPreset {
        match self {
            PresetArg::Study2022 => &STUDY_2022,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Day,
    Week,
    Blocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Distinct,
    Txcount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    In,
    Out,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    Full,
    Flashbots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FirstDayArg {
    /// new_1 = N_1, seed accounts included.
    SeedInclusive,
    /// new_1 = N_1 - |seed|.
    ExcludeSeed,
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["txs", "endpoint"])))]
pub struct IngestArgs {
    /// Transaction files (NDJSON, or CSV by extension).
    #[arg(long, visible_alias = "files", num_args = 1.., conflicts_with = "endpoint")]
    pub txs: Vec<PathBuf>,
    /// Endpoint config file (key = value lines).
    #[arg(long)]
    pub endpoint: Option<PathBuf>,
    /// Flashbots blocks manifest, one block record per line.
    #[arg(long)]
    pub flashbots_manifest: Option<PathBuf>,
    /// First block to keep (inclusive).
    #[arg(long)]
    pub from_block: Option<u64>,
    /// Last block to keep (inclusive).
    #[arg(long)]
    pub to_block: Option<u64>,
    /// Named study period; sets the block filter.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Drop transactions whose status marks them as failed.
    #[arg(long)]
    pub require_success: bool,
    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Continue an interrupted endpoint fetch from its checkpoint.
    #[arg(long, requires = "endpoint")]
    pub resume: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Transaction files (NDJSON, or CSV by extension).
    #[arg(long, visible_alias = "files", num_args = 1.., required = true)]
    pub txs: Vec<PathBuf>,
    /// Flashbots blocks manifest, one block record per line.
    #[arg(long)]
    pub flashbots_manifest: Option<PathBuf>,
    /// Tag file (address,label,kind). Defaults to the bundled labels.
    #[arg(long)]
    pub tags: Option<PathBuf>,
    /// Accounts known before the first day, one per line.
    #[arg(long)]
    pub seed_accounts: Option<PathBuf>,
    /// Named study period; sets windows, anchor and block filter.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Window mode for degree tables and growth ranking.
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    /// First UTC day of the first window.
    #[arg(long)]
    pub anchor: Option<NaiveDate>,
    /// Number of week windows.
    #[arg(long)]
    pub weeks: Option<u32>,
    /// Number of day windows.
    #[arg(long)]
    pub days: Option<u32>,
    /// Block windows as `start-end[,start-end...]`.
    #[arg(long, value_parser = parse_block_ranges)]
    pub blocks: Option<BlockRanges>,
    /// First block to keep (inclusive).
    #[arg(long)]
    pub from_block: Option<u64>,
    /// Last block to keep (inclusive).
    #[arg(long)]
    pub to_block: Option<u64>,
    /// Drop transactions whose status marks them as failed.
    #[arg(long)]
    pub require_success: bool,
    /// Degree metric: distinct counterparties or transaction count.
    #[arg(long, value_enum, default_value = "distinct")]
    pub metric: MetricArg,
    /// Degree direction used for growth ranking.
    #[arg(long, value_enum, default_value = "total")]
    pub direction: DirectionArg,
    /// Rows per growth table.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Full dataset or only Flashbots transactions.
    #[arg(long, value_enum, default_value = "full")]
    pub view: ViewArg,
    /// Window pair `t,u` to rank; repeatable. Defaults to every consecutive pair.
    #[arg(long, value_parser = parse_pair)]
    pub pair: Vec<(usize, usize)>,
    /// How the first day counts new accounts.
    #[arg(long, value_enum, default_value = "seed-inclusive")]
    pub first_day: FirstDayArg,
    /// Rank the largest degree losses instead of gains.
    #[arg(long)]
    pub bottom: bool,
    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Random seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Distinct transactions to generate.
    #[arg(long, default_value_t = 10_000)]
    pub transactions: usize,
    /// UTC days covered, starting 2022-02-10.
    #[arg(long, default_value_t = 28)]
    pub days: u32,
    /// Size of the account pool.
    #[arg(long, default_value_t = 2_000)]
    pub accounts: usize,
    /// Share of transactions listed in the Flashbots manifest.
    #[arg(long, default_value_t = 0.05)]
    pub flashbots_share: f64,
    /// Share of records repeated as duplicates.
    #[arg(long, default_value_t = 0.0)]
    pub duplicate_share: f64,
    /// Share of transactions marked failed (with --with-status).
    #[arg(long, default_value_t = 0.0)]
    pub failed_share: f64,
    /// Write `isError` on every record.
    #[arg(long)]
    pub with_status: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRanges(pub Vec<(u64, u64)>);

fn parse_block_ranges(s: &str) -> std::result::Result<BlockRanges, String> {
    let ranges = s
        .split(',')
        .map(|part| {
            let (a, b) = part
                .split_once('-')
                .ok_or_else(|| format!("{part:?} is not start-end"))?;
            let a: u64 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad block number {a:?}"))?;
            let b: u64 = b
                .trim()
                .parse()
                .map_err(|_| format!("bad block number {b:?}"))?;
            Ok((a, b))
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    let spec = WindowSpec::blocks(ranges.clone());
    spec.validate().map_err(|e| e.to_string())?;
    Ok(BlockRanges(ranges))
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (t, u) = s
        .split_once(',')
        .ok_or_else(|| format!("{s:?} is not t,u"))?;
    let t = t
        .trim()
        .parse()
        .map_err(|_| format!("bad window index {t:?}"))?;
    let u = u
        .trim()
        .parse()
        .map_err(|_| format!("bad window index {u:?}"))?;
    Ok((t, u))
}

/// Drops `--out DIR` / `--out=DIR` so the recorded command is independent
/// of where artifacts were written.
fn reproducible_command(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn policy(strict: bool) -> BadRecordPolicy {
    if strict {
        BadRecordPolicy::Abort
    } else {
        BadRecordPolicy::Skip
    }
}

fn load_filter(
    preset: Option<&StudyPreset>,
    from: Option<u64>,
    to: Option<u64>,
    require_success: bool,
) -> LoadFilter {
    let base = preset.map(StudyPreset::load_filter).unwrap_or_default();
    LoadFilter {
        min_block: from.or(base.min_block),
        max_block: to.or(base.max_block),
        require_success,
    }
}

impl AnalyzeArgs {
    fn window_specs(&self) -> std::result::Result<(WindowSpec, WindowSpec), String> {
        let preset = self.preset.map(PresetArg::get);
        let kind = self.window.unwrap_or(WindowArg::Week);
        let anchor = self.anchor.or(preset.map(|p| p.anchor));
        let day_spec =
            |count: Option<u32>| WindowSpec::days(anchor, count.or(preset.map(|p| p.days)));
        Ok(match kind {
            WindowArg::Week => {
                let weeks = self.weeks.or(preset.map(|p| p.weeks));
                let days = self
                    .days
                    .or(preset.map(|p| p.days))
                    .or(weeks.map(|w| w * 7));
                (WindowSpec::weeks(anchor, weeks), day_spec(days))
            }
            WindowArg::Day => {
                let spec = day_spec(self.days);
                (spec.clone(), spec)
            }
            WindowArg::Blocks => {
                let ranges = match (&self.blocks, preset) {
                    (Some(b), _) => b.0.clone(),
                    (None, Some(p)) => p.block_halves.to_vec(),
                    (None, None) => return Err("--window blocks needs --blocks or --preset".into()),
                };
                (WindowSpec::blocks(ranges), day_spec(self.days))
            }
        })
    }

    fn params(&self) -> std::result::Result<AnalysisParams, String> {
        if self.k == 0 {
            return Err("--k must be at least 1".into());
        }
        let (windows, days) = self.window_specs()?;
        Ok(AnalysisParams {
            windows,
            days,
            metric: match self.metric {
                MetricArg::Distinct => Metric::Distinct,
                MetricArg::Txcount => Metric::TxCount,
            },
            direction: match self.direction {
                DirectionArg::In => Direction::In,
                DirectionArg::Out => Direction::Out,
                DirectionArg::Total => Direction::Total,
            },
            k: self.k,
            view: match self.view {
                ViewArg::Full => View::Full,
                ViewArg::Flashbots => View::Flashbots,
            },
            pairs: (!self.pair.is_empty()).then(|| self.pair.clone()),
            first_day: match self.first_day {
                FirstDayArg::SeedInclusive => FirstDayConvention::SeedInclusive,
                FirstDayArg::ExcludeSeed => FirstDayConvention::ExcludeSeed,
            },
            order: if self.bottom {
                RankOrder::Bottom
            } else {
                RankOrder::Top
            },
        })
    }
}

fn cmd_analyze(args: &AnalyzeArgs, command: Vec<String>) -> Result<()> {
    let params = args.params().map_err(Error::Config)?;
    let cfg = AnalyzeConfig {
        txs: args.txs.clone(),
        flashbots_manifest: args.flashbots_manifest.clone(),
        tags: args.tags.clone(),
        seed_accounts: args.seed_accounts.clone(),
        filter: load_filter(
            args.preset.map(PresetArg::get),
            args.from_block,
            args.to_block,
            args.require_success,
        ),
        policy: policy(args.strict),
        params,
        command,
    };
    let outcome = run_analyze(&cfg, &args.out)?;
    let mut stdout = std::io::stdout().lock();
    for (i, md) in outcome.tables_markdown.iter().enumerate() {
        if i > 0 {
            writeln!(stdout).map_err(|e| Error::io("<stdout>", e))?;
        }
        write!(stdout, "{md}").map_err(|e| Error::io("<stdout>", e))?;
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "{} transactions loaded, {} artifacts written to {} ({})",
        outcome.load.transactions,
        outcome.bundle.artifacts.len(),
        args.out.display(),
        count_warnings(outcome.warnings.len())
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct FetchSummary {
    source: String,
    from_block: u64,
    to_block: u64,
    resumed_from_block: Option<u64>,
    records_fetched: u64,
    flashbots_source: Option<String>,
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    tool: &'static str,
    version: &'static str,
    mode: &'static str,
    inputs: Vec<InputDigest>,
    min_block: Option<u64>,
    max_block: Option<u64>,
    require_success: bool,
    fetch: Option<FetchSummary>,
    load: LoadReport,
    warnings: Vec<String>,
    outputs: Vec<String>,
}

pub const DATASET_FILE: &str = "transactions.ndjson";
pub const MANIFEST_FILE: &str = "flashbots.ndjson";
pub const SUMMARY_FILE: &str = "ingest_summary.json";
pub const RAW_FILE: &str = "raw_transactions.ndjson";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Streams the endpoint into `raw`, checkpointing after every block page.
fn fetch_raw(
    cfg: &EndpointConfig,
    range: BlockRange,
    out: &Path,
    resume: bool,
) -> Result<FetchSummary> {
    let raw = out.join(RAW_FILE);
    let cp_path = out.join(CHECKPOINT_FILE);
    let checkpoint = if resume {
        Checkpoint::load(&cp_path)?
    } else {
        None
    };
    let file = match &checkpoint {
        Some(cp) => {
            truncate_ndjson(&raw, cp.records_written).map_err(|e| Error::io(&raw, e))?;
            std::fs::OpenOptions::new()
                .append(true)
                .create(true)
                .open(&raw)
        }
        None => {
            if cp_path.exists() {
                std::fs::remove_file(&cp_path).map_err(|e| Error::io(&cp_path, e))?;
            }
            File::create(&raw)
        }
    }
    .map_err(|e| Error::io(&raw, e))?;
    let resumed_from_block = checkpoint.as_ref().map(|c| c.last_completed_block + 1);
    if let Some(b) = resumed_from_block {
        log::info!("resuming fetch at block {b}");
    }
    // Line-buffered so every record is on disk before the checkpoint that
    // counts it is written.
    let mut writer = LineWriter::new(file);
    let mut stream = fetch_transactions(cfg, range, checkpoint, Some(&cp_path))?;
    for item in stream.by_ref() {
        let tx = item?;
        writeln!(writer, "{}", crate::ingest::parse::to_ndjson_line(&tx))
            .map_err(|e| Error::io(&raw, e))?;
    }
    writer.flush().map_err(|e| Error::io(&raw, e))?;
    Ok(FetchSummary {
        source: cfg.descriptor(),
        from_block: range.start,
        to_block: range.end,
        resumed_from_block,
        records_fetched: stream.records_yielded(),
        flashbots_source: None,
    })
}

fn cmd_ingest(args: &IngestArgs, command: &[String]) -> Result<()> {
    let preset = args.preset.map(PresetArg::get);
    let filter = load_filter(preset, args.from_block, args.to_block, args.require_success);
    let policy = policy(args.strict);
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    log::debug!("ingest {}", command.join(" "));

    let mut inputs = Vec::new();
    let mut fetch = None;
    let (paths, mode) = match &args.endpoint {
        Some(cfg_path) => {
            let cfg = EndpointConfig::load(cfg_path)?;
            let (Some(start), Some(end)) = (filter.min_block, filter.max_block) else {
                return Err(Error::Config(
                    "endpoint ingest needs --from-block and --to-block (or --preset)".into(),
                ));
            };
            fetch = Some(fetch_raw(
                &cfg,
                BlockRange::new(start, end),
                &args.out,
                args.resume,
            )?);
            (vec![args.out.join(RAW_FILE)], "endpoint")
        }
        None => (args.txs.clone(), "files"),
    };
    if mode == "files" {
        for p in &paths {
            inputs.push(InputDigest::of("transactions", p)?);
        }
    }

    let manifest = match (&args.flashbots_manifest, &args.endpoint) {
        (Some(p), _) => {
            inputs.push(InputDigest::of("flashbots_manifest", p)?);
            Some(FlashbotsManifest::read(p, policy)?.0)
        }
        (None, Some(cfg_path)) => {
            let cfg = EndpointConfig::load(cfg_path)?;
            match (&cfg.flashbots_url, filter.min_block, filter.max_block) {
                (Some(url), Some(start), Some(end)) => {
                    let m = fetch_flashbots_manifest(&cfg, BlockRange::new(start, end), 100)?;
                    if let Some(f) = fetch.as_mut() {
                        f.flashbots_source = Some(url.clone());
                    }
                    Some(m)
                }
                _ => None,
            }
        }
        (None, None) => None,
    };

    let (ds, load) = load_files(&paths, manifest.as_ref(), filter, policy)?;
    let mut outputs = vec![DATASET_FILE.to_string()];
    write_ndjson(create(&args.out.join(DATASET_FILE))?, ds.transactions())
        .map_err(|e| Error::io(args.out.join(DATASET_FILE), e))?;
    if let Some(m) = &manifest {
        let p = args.out.join(MANIFEST_FILE);
        m.write(create(&p)?).map_err(|e| Error::io(&p, e))?;
        outputs.push(MANIFEST_FILE.to_string());
    }
    if fetch.is_some() {
        outputs.push(RAW_FILE.to_string());
        outputs.push(CHECKPOINT_FILE.to_string());
    }
    let warnings = load.warnings();
    let summary = IngestSummary {
        tool: crate::pipeline::TOOL,
        version: crate::pipeline::VERSION,
        mode,
        inputs,
        min_block: filter.min_block,
        max_block: filter.max_block,
        require_success: filter.require_success,
        fetch,
        load,
        warnings,
        outputs,
    };
    let p = args.out.join(SUMMARY_FILE);
    std::fs::write(&p, serde_json::to_string_pretty(&summary)? + "\n")
        .map_err(|e| Error::io(&p, e))?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "{} of {} records kept, {} skipped, {} duplicates, {} Flashbots members ({})",
        summary.load.transactions,
        summary.load.input_records,
        summary.load.skipped_lines,
        summary.load.duplicates,
        summary.load.flashbots_members,
        count_warnings(summary.warnings.len())
    );
    Ok(())
}

fn count_warnings(n: usize) -> String {
    match n {
        1 => "1 warning".into(),
        n => format!("{n} warnings"),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        seed: args.seed,
        transactions: args.transactions,
        days: args.days,
        accounts: args.accounts,
        flashbots_share: args.flashbots_share,
        duplicate_share: args.duplicate_share,
        failed_share: args.failed_share,
        with_status: args.with_status,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg);
    write_corpus(&args.out, &corpus)?;
    eprintln!(
        "{} transactions, {} manifest entries, {} seed accounts written to {}",
        corpus.transactions.len(),
        corpus.manifest.len(),
        corpus.seed_accounts.len(),
        args.out.display()
    );
    Ok(())
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let recorded: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let command = reproducible_command(&recorded);
    let result = match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, &command),
        Command::Analyze(a) => cmd_analyze(a, command),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Fetch(FetchError::Resumable { .. }) = e {
                eprintln!("hint: rerun the same command with --resume");
            }
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_FATAL,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("txgraph").chain(args.iter().copied()))
    }

    #[test]
    fn files_and_endpoint_conflict() {
        let e = parse(&[
            "ingest",
            "--files",
            "a.ndjson",
            "--endpoint",
            "c.conf",
            "--out",
            "o",
        ])
        .unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
        let e = parse(&["ingest", "--out", "o"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn preset_week_windows() {
        let cli = parse(&[
            "analyze",
            "--txs",
            "t.ndjson",
            "--preset",
            "paper-study",
            "--out",
            "o",
        ])
        .unwrap();
        let Command::Analyze(a) = cli.command else {
            panic!()
        };
        let (w, d) = a.window_specs().unwrap();
        assert_eq!(w, STUDY_2022.week_spec());
        assert_eq!(d, STUDY_2022.day_spec());
    }

    #[test]
    fn block_ranges_parse_and_validate() {
        assert_eq!(
            parse_block_ranges("1-5,6-9").unwrap().0,
            vec![(1, 5), (6, 9)]
        );
        assert!(parse_block_ranges("5-1").is_err());
        assert!(parse_block_ranges("1-5,5-9").is_err());
        assert!(parse_block_ranges("x").is_err());
        assert_eq!(parse_pair("2,3").unwrap(), (2, 3));
    }

    #[test]
    fn out_is_not_recorded() {
        let args: Vec<String> = ["analyze", "--out", "x", "--k", "3", "--out=y"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(reproducible_command(&args), vec!["analyze", "--k", "3"]);
    }
}
