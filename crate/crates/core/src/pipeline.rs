//! End-to-end analysis run: load inputs, window the selected view, compute
//! every series and table, and write the report bundle.

use std::collections::HashSet;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::analytics::{
    degree_ccdf, degree_growth, load_tag_map, rank_growth, volume_series, GrowthRecord, RankOrder,
    RankedRow, TagMap, VolumeSeries, TIE_RULE,
};
use crate::error::{Error, RecordError, Result};
use crate::ingest::{
    load_files, BadRecordPolicy, Dataset, FlashbotsManifest, LoadFilter, LoadReport, View,
};
use crate::model::Address;
use crate::report::csv::{activity_csv, ccdf_csv, degree_table_csv, ranked_csv, volume_csv};
use crate::report::{
    render_line_chart, render_markdown_table, ArtifactTags, AxisSpec, ChartText, InputDigest,
    ReportBundle, RunMetadata, Series,
};
use crate::tempgraph::{
    activity_series, build_window_graphs, degree_table, partition_windows, ActivitySeries,
    DegreeTable, Direction, FirstDayConvention, Metric, Partition, WindowSpec,
};

pub const TOOL: &str = "txgraph";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const UTC_NOTICE: &str = "All windows are UTC calendar intervals.";
pub const PER_WINDOW_NOTICE: &str = "Degrees are computed per window, not cumulatively.";

/// Parameters of the analytics stages, independent of where data comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    /// Windows for degree tables, CCDFs and growth.
    pub windows: WindowSpec,
    /// Day windows for the volume and activity series.
    pub days: WindowSpec,
    pub metric: Metric,
    pub direction: Direction,
    pub k: usize,
    pub view: View,
    /// Window pairs to rank; `None` means every consecutive pair.
    pub pairs: Option<Vec<(usize, usize)>>,
    pub first_day: FirstDayConvention,
    pub order: RankOrder,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            windows: WindowSpec::weeks(None, None),
            days: WindowSpec::days(None, None),
            metric: Metric::Distinct,
            direction: Direction::Total,
            k: 10,
            view: View::Full,
            pairs: None,
            first_day: FirstDayConvention::SeedInclusive,
            order: RankOrder::Top,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGrowth {
    pub prev: usize,
    pub next: usize,
    pub caption: String,
    pub records: Vec<GrowthRecord>,
    pub ranked: Vec<RankedRow>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub days: Partition,
    pub windows: Partition,
    pub volume: VolumeSeries,
    pub activity: ActivitySeries,
    pub tables: Vec<DegreeTable>,
    pub growth: Vec<PairGrowth>,
}

fn unit_singular(spec: &WindowSpec) -> &'static str {
    match spec {
        WindowSpec::UtcDay { .. } => "day",
        WindowSpec::UtcWeek { .. } => "week",
        WindowSpec::BlockRange { .. } => "window",
    }
}

/// Caption of a growth table, e.g. "Top 10 total-degree growth, weeks 2→3
/// (full view, distinct degree)".
pub fn growth_caption(params: &AnalysisParams, prev: usize, next: usize) -> String {
    let side = match params.order {
        RankOrder::Top => "Top",
        RankOrder::Bottom => "Bottom",
    };
    format!(
        "{side} {} {}-degree growth, {} {prev}→{next} ({} view, {} degree)",
        params.k,
        params.direction.as_str(),
        params.windows.unit_plural(),
        params.view.as_str(),
        params.metric.as_str()
    )
}

fn resolve_pairs(params: &AnalysisParams, n: usize) -> Result<Vec<(usize, usize)>> {
    match &params.pairs {
        None => Ok((1..n).map(|t| (t, t + 1)).collect()),
        Some(pairs) => {
            for &(t, u) in pairs {
                if t == 0 || u == 0 || t > n || u > n || t == u {
                    return Err(Error::Config(format!(
                        "window pair {t},{u} is not a pair of distinct windows in 1..={n}"
                    )));
                }
            }
            Ok(pairs.clone())
        }
    }
}

/// Runs every analytics stage over `ds`.
pub fn analyze(
    ds: &Dataset,
    seed: &HashSet<Address>,
    tags: &TagMap,
    params: &AnalysisParams,
) -> Result<Analysis> {
    let days = partition_windows(ds, &params.days, params.view)?;
    let volume = volume_series(&days)?;
    let activity = activity_series(ds, &days, seed, params.first_day)?;
    let windows = partition_windows(ds, &params.windows, params.view)?;
    let tables: Vec<DegreeTable> = build_window_graphs(ds, &windows)
        .iter()
        .map(|g| degree_table(g, params.metric))
        .collect();
    let mut growth = Vec::new();
    for (t, u) in resolve_pairs(params, tables.len())? {
        let records = degree_growth(&tables[t - 1], &tables[u - 1], params.direction)?;
        let ranked = rank_growth(&records, params.k, tags, params.order);
        growth.push(PairGrowth {
            prev: t,
            next: u,
            caption: growth_caption(params, t, u),
            records,
            ranked,
        });
    }
    Ok(Analysis {
        days,
        windows,
        volume,
        activity,
        tables,
        growth,
    })
}

/// Reads one address per line; blank lines and `#` comments are ignored.
pub fn read_seed_accounts(path: &Path) -> Result<HashSet<Address>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let a = Address::parse(s).map_err(|e| Error::Record {
            path: path.display().to_string(),
            source: RecordError::new(i + 1, e.to_string()),
        })?;
        out.insert(a);
    }
    Ok(out)
}

/// Inputs and settings of an `analyze` run.
#[derive(Debug, Clone)]
pub struct AnalyzeConfig {
    pub txs: Vec<PathBuf>,
    pub flashbots_manifest: Option<PathBuf>,
    pub tags: Option<PathBuf>,
    pub seed_accounts: Option<PathBuf>,
    pub filter: LoadFilter,
    pub policy: BadRecordPolicy,
    pub params: AnalysisParams,
    /// Arguments that reproduce the run, recorded in every artifact.
    pub command: Vec<String>,
}

#[derive(Debug)]
pub struct AnalyzeOutcome {
    pub bundle: ReportBundle,
    pub load: LoadReport,
    pub analysis: Analysis,
    /// Rendered growth tables, in pair order.
    pub tables_markdown: Vec<String>,
    pub warnings: Vec<String>,
}

fn chart_metadata(meta: &RunMetadata) -> Vec<(String, String)> {
    vec![
        ("tool".into(), format!("{} {}", meta.tool, meta.version)),
        ("dataset".into(), meta.dataset.clone()),
        ("view".into(), meta.view.clone()),
        ("window".into(), meta.window.clone()),
        ("metric".into(), meta.metric.clone()),
        ("direction".into(), meta.direction.clone()),
        ("timezone".into(), meta.timezone.clone()),
        ("command".into(), meta.command.join(" ")),
    ]
}

fn day_ticks(volume: &VolumeSeries) -> Vec<(f64, String)> {
    let step = volume.points.len().div_ceil(8).max(1);
    volume
        .points
        .iter()
        .enumerate()
        .step_by(step)
        .map(|(i, (d, _))| ((i + 1) as f64, d.format("%m-%d").to_string()))
        .collect()
}

fn markdown_with_footer(g: &PairGrowth) -> String {
    let mut md = render_markdown_table(&g.ranked, &g.caption);
    md.push_str(&format!(
        "\nRanked by degree growth; {TIE_RULE}. {PER_WINDOW_NOTICE} {UTC_NOTICE} Addresses show their last 7 hex characters.\n"
    ));
    md
}

/// Loads the inputs, runs [`analyze`] and writes all artifacts plus
/// `bundle.json` into `out`.
pub fn run_analyze(cfg: &AnalyzeConfig, out: &Path) -> Result<AnalyzeOutcome> {
    let params = &cfg.params;
    let mut inputs = Vec::new();
    for p in &cfg.txs {
        inputs.push(InputDigest::of("transactions", p)?);
    }
    let manifest = match &cfg.flashbots_manifest {
        Some(p) => {
            inputs.push(InputDigest::of("flashbots_manifest", p)?);
            Some(FlashbotsManifest::read(p, cfg.policy)?.0)
        }
        None => None,
    };
    if params.view == View::Flashbots && manifest.is_none() {
        return Err(Error::Config(
            "--view flashbots needs --flashbots-manifest".into(),
        ));
    }
    let mut warnings = Vec::new();
    let tags = match &cfg.tags {
        Some(p) => {
            inputs.push(InputDigest::of("tags", p)?);
            let (map, stats) = load_tag_map(p)?;
            if stats.skipped > 0 {
                warnings.push(format!("{} malformed tag rows skipped", stats.skipped));
            }
            map
        }
        None => TagMap::bundled(),
    };
    let seed = match &cfg.seed_accounts {
        Some(p) => {
            inputs.push(InputDigest::of("seed_accounts", p)?);
            read_seed_accounts(p)?
        }
        None => {
            warnings
                .push("no seed accounts supplied; the cumulative account set starts empty".into());
            HashSet::new()
        }
    };

    let (ds, load) = load_files(&cfg.txs, manifest.as_ref(), cfg.filter, cfg.policy)?;
    warnings.extend(load.warnings());
    let analysis = analyze(&ds, &seed, &tags, params)?;
    if analysis.days.unassigned > 0 {
        warnings.push(format!(
            "{} transactions fall outside the day windows",
            analysis.days.unassigned
        ));
    }
    if analysis.windows.unassigned > 0 {
        warnings.push(format!(
            "{} transactions fall outside the analysis windows",
            analysis.windows.unassigned
        ));
    }

    let mut notes = vec![
        UTC_NOTICE.to_string(),
        PER_WINDOW_NOTICE.to_string(),
        format!("Growth ranking: {TIE_RULE}."),
        format!("Day series: {}", params.days),
        format!("Seed accounts: {}", seed.len()),
    ];
    notes.extend(warnings.iter().cloned());
    let meta = RunMetadata {
        tool: TOOL.into(),
        version: VERSION.into(),
        dataset: ds.source_descriptor().to_string(),
        view: format!("{} ({})", params.view.as_str(), params.view.set_label()),
        window: params.windows.to_string(),
        metric: params.metric.as_str().into(),
        direction: params.direction.as_str().into(),
        timezone: "UTC".into(),
        command: cfg.command.clone(),
        inputs,
        notes,
    };
    let desc = chart_metadata(&meta);
    let view = params.view.as_str();
    let metric = params.metric.as_str();
    let day_window = params.days.to_string();
    let mut bundle = ReportBundle::new(out, meta)?;

    bundle.add(
        "volume.csv",
        &volume_csv(&analysis.volume)?,
        ArtifactTags {
            kind: "volume",
            window: day_window.clone(),
            direction: None,
            metric: None,
        },
    )?;
    let ticks = day_ticks(&analysis.volume);
    let ordinal = |ys: Vec<u64>| -> Vec<(f64, f64)> {
        ys.into_iter()
            .enumerate()
            .map(|(i, y)| ((i + 1) as f64, y as f64))
            .collect()
    };
    if !analysis.volume.is_empty() {
        let axes = AxisSpec {
            x_ticks: Some(ticks.clone()),
            ..AxisSpec::linear("day (UTC)", "transactions")
        };
        let svg = render_line_chart(
            &[Series::new(
                format!("transactions ({view})"),
                ordinal(analysis.volume.counts()),
            )],
            &axes,
            &ChartText {
                title: format!("Daily transaction volume, {view} view"),
                subtitle: format!("{day_window}; linear axes"),
                metadata: desc.clone(),
            },
        )?;
        bundle.add(
            "volume.svg",
            &svg,
            ArtifactTags {
                kind: "volume",
                window: day_window.clone(),
                direction: None,
                metric: None,
            },
        )?;
    }

    bundle.add(
        "activity.csv",
        &activity_csv(&analysis.activity)?,
        ArtifactTags {
            kind: "activity",
            window: day_window.clone(),
            direction: None,
            metric: None,
        },
    )?;
    if !analysis.activity.is_empty() {
        let axes = AxisSpec {
            x_ticks: Some(ticks),
            ..AxisSpec::linear("day (UTC)", "accounts")
        };
        let days = &analysis.activity.days;
        let svg = render_line_chart(
            &[
                Series::new(
                    "new accounts",
                    ordinal(days.iter().map(|d| d.new).collect()),
                ),
                Series::new(
                    "active accounts",
                    ordinal(days.iter().map(|d| d.active).collect()),
                ),
            ],
            &axes,
            &ChartText {
                title: format!("New and active accounts per day, {view} view"),
                subtitle: format!(
                    "{day_window}; seed accounts {}; linear axes",
                    analysis.activity.seed_size
                ),
                metadata: desc.clone(),
            },
        )?;
        bundle.add(
            "activity.svg",
            &svg,
            ArtifactTags {
                kind: "activity",
                window: day_window.clone(),
                direction: None,
                metric: None,
            },
        )?;
    }

    let unit = unit_singular(&params.windows);
    let mut ccdf_series: [Vec<Series>; 2] = [Vec::new(), Vec::new()];
    for (table, w) in analysis.tables.iter().zip(&analysis.windows.windows) {
        let label = format!("{unit} {}", w.index);
        bundle.add(
            &format!("degrees_w{:02}.csv", w.index),
            &degree_table_csv(table)?,
            ArtifactTags {
                kind: "degrees",
                window: format!("{label} ({})", w.bounds),
                direction: Some("in,out,total"),
                metric: Some(metric),
            },
        )?;
        let cin = degree_ccdf(table, Direction::In);
        let cout = degree_ccdf(table, Direction::Out);
        bundle.add(
            &format!("ccdf_w{:02}.csv", w.index),
            &ccdf_csv(&cin, &cout)?,
            ArtifactTags {
                kind: "ccdf",
                window: format!("{label} ({})", w.bounds),
                direction: Some("in,out"),
                metric: Some(metric),
            },
        )?;
        for (slot, pts) in ccdf_series.iter_mut().zip([cin, cout]) {
            if !pts.is_empty() {
                slot.push(Series::new(
                    label.clone(),
                    pts.iter().map(|p| (p.degree as f64, p.fraction)).collect(),
                ));
            }
        }
    }
    for (dir, series) in ["in", "out"].into_iter().zip(ccdf_series) {
        if series.is_empty() {
            continue;
        }
        let svg = render_line_chart(
            &series,
            &AxisSpec::log_log(
                format!("{dir}-degree d"),
                "fraction of accounts with degree ≥ d",
            ),
            &ChartText {
                title: format!("{dir}-degree CCDF, {view} view, {metric} degree"),
                subtitle: format!(
                    "{}; log-log axes; per-window degrees, not cumulative",
                    params.windows
                ),
                metadata: desc.clone(),
            },
        )?;
        bundle.add(
            &format!("ccdf_{dir}.svg"),
            &svg,
            ArtifactTags {
                kind: "ccdf",
                window: params.windows.to_string(),
                direction: Some(dir),
                metric: Some(metric),
            },
        )?;
    }

    let direction = params.direction.as_str();
    let mut tables_markdown = Vec::new();
    for g in &analysis.growth {
        let stem = format!("growth_w{:02}_w{:02}", g.prev, g.next);
        let window = format!("{} {}→{}", params.windows.unit_plural(), g.prev, g.next);
        let md = markdown_with_footer(g);
        bundle.add(
            &format!("{stem}.csv"),
            &ranked_csv(&g.ranked)?,
            ArtifactTags {
                kind: "growth",
                window: window.clone(),
                direction: Some(direction),
                metric: Some(metric),
            },
        )?;
        bundle.add(
            &format!("{stem}.md"),
            &md,
            ArtifactTags {
                kind: "growth",
                window,
                direction: Some(direction),
                metric: Some(metric),
            },
        )?;
        tables_markdown.push(md);
    }
    bundle.finish()?;
    Ok(AnalyzeOutcome {
        bundle,
        load,
        analysis,
        tables_markdown,
        warnings,
    })
}
