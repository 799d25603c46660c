//! CSV emitters. Output is a pure function of the input: fixed column
//! order, ISO-8601 dates, `\n` line endings and a trailing newline.

use std::path::Path;

use crate::analytics::{CcdfPoint, GrowthRecord, RankedRow, VolumeSeries};
use crate::error::{Error, Result};
use crate::tempgraph::{ActivitySeries, DegreeTable};

fn to_string(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    rows(&mut w)?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn volume_csv(series: &VolumeSeries) -> Result<String> {
    to_string(|w| {
        w.write_record(["date", "value"])?;
        for (date, n) in &series.points {
            w.write_record([date.to_string(), n.to_string()])?;
        }
        Ok(())
    })
}

pub fn activity_csv(series: &ActivitySeries) -> Result<String> {
    to_string(|w| {
        w.write_record(["date", "cumulative", "new", "active"])?;
        for d in &series.days {
            w.write_record([
                d.date.to_string(),
                d.cumulative.to_string(),
                d.new.to_string(),
                d.active.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Either kind of daily series.
#[derive(Debug, Clone, Copy)]
pub enum SeriesRef<'a> {
    Volume(&'a VolumeSeries),
    Activity(&'a ActivitySeries),
}

/// Writes a daily series as CSV: `date,value` for volume,
/// `date,cumulative,new,active` for activity.
pub fn emit_series_csv(series: SeriesRef<'_>, path: &Path) -> Result<()> {
    let text = match series {
        SeriesRef::Volume(v) => volume_csv(v)?,
        SeriesRef::Activity(a) => activity_csv(a)?,
    };
    write_text(path, &text)
}

pub fn degree_table_csv(table: &DegreeTable) -> Result<String> {
    to_string(|w| {
        w.write_record(["address", "indegree", "outdegree", "total"])?;
        for r in table.iter() {
            w.write_record([
                r.account.to_hex(),
                r.indegree.to_string(),
                r.outdegree.to_string(),
                r.total.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn ccdf_csv(indegree: &[CcdfPoint], outdegree: &[CcdfPoint]) -> Result<String> {
    to_string(|w| {
        w.write_record(["direction", "degree", "fraction"])?;
        for (dir, pts) in [("in", indegree), ("out", outdegree)] {
            for p in pts {
                w.write_record([
                    dir.to_string(),
                    p.degree.to_string(),
                    format!("{:.9}", p.fraction),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn ranked_csv(rows: &[RankedRow]) -> Result<String> {
    to_string(|w| {
        w.write_record([
            "rank",
            "address",
            "short",
            "label",
            "kind",
            "degree_prev",
            "degree_next",
            "delta",
        ])?;
        for r in rows {
            w.write_record([
                r.rank.to_string(),
                r.account.to_hex(),
                r.short.clone(),
                r.label.clone(),
                r.kind.as_str().to_string(),
                r.degree_prev.to_string(),
                r.degree_next.to_string(),
                r.delta.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn growth_csv(records: &[GrowthRecord]) -> Result<String> {
    to_string(|w| {
        w.write_record(["address", "degree_prev", "degree_next", "delta"])?;
        for r in records {
            w.write_record([
                r.account.to_hex(),
                r.degree_prev.to_string(),
                r.degree_next.to_string(),
                r.delta.to_string(),
            ])?;
        }
        Ok(())
    })
}
