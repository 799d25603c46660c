//! Windowing schemes that slice a dataset into the snapshots `G_1, G_2, ...`.

use std::fmt;

use chrono::{NaiveDate, NaiveTime};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{Dataset, View};
use crate::model::Transaction;

const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WindowSpec {
    /// Consecutive UTC days starting at `anchor` (default: first day in the data).
    UtcDay {
        anchor: Option<NaiveDate>,
        count: Option<u32>,
    },
    /// Consecutive 7-day UTC weeks starting at `anchor`.
    UtcWeek {
        anchor: Option<NaiveDate>,
        count: Option<u32>,
    },
    /// Explicit closed block intervals, one window each.
    BlockRange { ranges: Vec<(u64, u64)> },
}

impl WindowSpec {
    pub fn days(anchor: Option<NaiveDate>, count: Option<u32>) -> Self {
        WindowSpec::UtcDay { anchor, count }
    }

    pub fn weeks(anchor: Option<NaiveDate>, count: Option<u32>) -> Self {
        WindowSpec::UtcWeek { anchor, count }
    }

    pub fn blocks(ranges: Vec<(u64, u64)>) -> Self {
        WindowSpec::BlockRange { ranges }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            WindowSpec::UtcDay { .. } => "utc_day",
            WindowSpec::UtcWeek { .. } => "utc_week",
            WindowSpec::BlockRange { .. } => "block_range",
        }
    }

    /// Word used for windows in captions ("days", "weeks", "windows").
    pub fn unit_plural(&self) -> &'static str {
        match self {
            WindowSpec::UtcDay { .. } => "days",
            WindowSpec::UtcWeek { .. } => "weeks",
            WindowSpec::BlockRange { .. } => "windows",
        }
    }

    /// Rejects inverted or overlapping block ranges.
    pub fn validate(&self) -> Result<()> {
        if let WindowSpec::BlockRange { ranges } = self {
            if ranges.is_empty() {
                return Err(Error::Config(
                    "block_range windows need at least one range".into(),
                ));
            }
            for (i, &(s, e)) in ranges.iter().enumerate() {
                if s > e {
                    return Err(Error::Config(format!("block range {s}-{e} is inverted")));
                }
                if let Some(&(ps, pe)) = ranges[..i].last() {
                    if s <= pe {
                        return Err(Error::Config(format!(
                            "block ranges {ps}-{pe} and {s}-{e} overlap or are out of order"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tail = |anchor: &Option<NaiveDate>, count: &Option<u32>| {
            let a = anchor.map_or_else(|| "first-day".to_string(), |d| d.to_string());
            let c = count.map_or_else(|| "open".to_string(), |c| c.to_string());
            format!("anchor={a} count={c}")
        };
        match self {
            WindowSpec::UtcDay { anchor, count } => write!(f, "utc_day {}", tail(anchor, count)),
            WindowSpec::UtcWeek { anchor, count } => write!(f, "utc_week {}", tail(anchor, count)),
            WindowSpec::BlockRange { ranges } => {
                let r: Vec<String> = ranges.iter().map(|(s, e)| format!("{s}-{e}")).collect();
                write!(f, "block_range {}", r.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowBounds {
    /// Inclusive UTC dates.
    Days { first: NaiveDate, last: NaiveDate },
    /// Inclusive block numbers.
    Blocks { start: u64, end: u64 },
}

impl fmt::Display for WindowBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowBounds::Days { first, last } if first == last => write!(f, "{first}"),
            WindowBounds::Days { first, last } => write!(f, "{first}..{last}"),
            WindowBounds::Blocks { start, end } => write!(f, "blocks {start}..{end}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    /// 1-based.
    pub index: usize,
    pub bounds: WindowBounds,
    /// Indices into the dataset's transaction sequence.
    pub tx_indices: Vec<usize>,
}

impl Window {
    pub fn transactions<'a>(
        &'a self,
        ds: &'a Dataset,
    ) -> impl Iterator<Item = &'a Transaction> + 'a {
        self.tx_indices.iter().map(move |&i| &ds.transactions()[i])
    }

    pub fn len(&self) -> usize {
        self.tx_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx_indices.is_empty()
    }

    /// The single UTC date of a day window.
    pub fn date(&self) -> Option<NaiveDate> {
        match self.bounds {
            WindowBounds::Days { first, last } if first == last => Some(first),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub spec: WindowSpec,
    pub view: View,
    pub windows: Vec<Window>,
    /// View transactions that fall outside every window.
    pub unassigned: usize,
}

impl Partition {
    pub fn assigned(&self) -> usize {
        self.windows.iter().map(Window::len).sum()
    }

    pub fn window(&self, index: usize) -> Option<&Window> {
        index.checked_sub(1).and_then(|i| self.windows.get(i))
    }

    pub fn is_daily(&self) -> bool {
        matches!(self.spec, WindowSpec::UtcDay { .. })
    }
}

fn day_start(date: NaiveDate) -> i64 {
    date.and_time(NaiveTime::MIN).and_utc().timestamp()
}

fn date_of(ts: i64) -> NaiveDate {
    chrono::DateTime::from_timestamp(ts, 0)
        .map(|d| d.date_naive())
        .unwrap_or_default()
}

/// Assigns every transaction of `view` to at most one window.
///
/// UTC modes bucket by timestamp, `block_range` by block number. Open-ended
/// UTC specs take their anchor and extent from the whole dataset, so the
/// full and Flashbots views of one dataset share the same calendar.
pub fn partition_windows(ds: &Dataset, spec: &WindowSpec, view: View) -> Result<Partition> {
    spec.validate()?;
    let mut partition = Partition {
        spec: spec.clone(),
        view,
        windows: Vec::new(),
        unassigned: 0,
    };
    match spec {
        WindowSpec::UtcDay { anchor, count } | WindowSpec::UtcWeek { anchor, count } => {
            let days_per = if matches!(spec, WindowSpec::UtcDay { .. }) {
                1
            } else {
                7
            };
            let Some(anchor) = anchor.or_else(|| ds.timestamp_range().map(|(lo, _)| date_of(lo)))
            else {
                return Ok(partition);
            };
            let period = SECONDS_PER_DAY * days_per;
            let origin = day_start(anchor);
            let n = match count {
                Some(c) => *c as usize,
                None => match ds.timestamp_range() {
                    Some((_, hi)) if hi >= origin => {
                        ((hi - origin).div_euclid(period) + 1) as usize
                    }
                    _ => 0,
                },
            };
            partition.windows = (0..n)
                .map(|i| {
                    let first = anchor + chrono::Days::new((i as i64 * days_per) as u64);
                    Window {
                        index: i + 1,
                        bounds: WindowBounds::Days {
                            first,
                            last: first + chrono::Days::new(days_per as u64 - 1),
                        },
                        tx_indices: Vec::new(),
                    }
                })
                .collect();
            for (i, tx) in ds.view(view) {
                let offset = (tx.timestamp - origin).div_euclid(period);
                match usize::try_from(offset)
                    .ok()
                    .and_then(|o| partition.windows.get_mut(o))
                {
                    Some(w) => w.tx_indices.push(i),
                    None => partition.unassigned += 1,
                }
            }
        }
        WindowSpec::BlockRange { ranges } => {
            partition.windows = ranges
                .iter()
                .enumerate()
                .map(|(i, &(start, end))| Window {
                    index: i + 1,
                    bounds: WindowBounds::Blocks { start, end },
                    tx_indices: Vec::new(),
                })
                .collect();
            for (i, tx) in ds.view(view) {
                // Ranges are sorted and disjoint.
                let pos = ranges.partition_point(|&(_, end)| end < tx.block_number);
                match ranges.get(pos) {
                    Some(&(start, _)) if start <= tx.block_number => {
                        partition.windows[pos].tx_indices.push(i)
                    }
                    _ => partition.unassigned += 1,
                }
            }
        }
    }
    Ok(partition)
}
