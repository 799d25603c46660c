//! Week-over-week degree growth and the ranked tables built from it.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::analytics::tags::TagMap;
use crate::error::{Error, Result};
use crate::model::{Address, TagKind};
use crate::tempgraph::{DegreeTable, Direction, Metric};

/// Tie rule applied after ordering by delta; repeated in report footers.
pub const TIE_RULE: &str =
    "ties broken by larger degree in the later window, then by full address (ascending)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GrowthRecord {
    pub account: Address,
    pub degree_prev: u64,
    pub degree_next: u64,
    pub delta: i64,
    pub window_pair: (usize, usize),
    pub metric: Metric,
    pub direction: Direction,
}

/// One delta per account in either table, in address order. An account
/// missing from a window has degree 0 there.
pub fn degree_growth(
    prev: &DegreeTable,
    next: &DegreeTable,
    direction: Direction,
) -> Result<Vec<GrowthRecord>> {
    if prev.metric != next.metric {
        return Err(Error::MetricMismatch(
            prev.metric.to_string(),
            next.metric.to_string(),
        ));
    }
    let accounts: BTreeSet<&Address> = prev.accounts().chain(next.accounts()).collect();
    Ok(accounts
        .into_iter()
        .map(|&account| {
            let degree_prev = prev.degree(&account, direction);
            let degree_next = next.degree(&account, direction);
            GrowthRecord {
                account,
                degree_prev,
                degree_next,
                delta: degree_next as i64 - degree_prev as i64,
                window_pair: (prev.window, next.window),
                metric: prev.metric,
                direction,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankOrder {
    /// Largest growth first.
    #[default]
    Top,
    /// Largest decline first, for exploration.
    Bottom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedRow {
    pub rank: usize,
    pub short: String,
    pub account: Address,
    pub label: String,
    pub kind: TagKind,
    pub delta: i64,
    pub degree_prev: u64,
    pub degree_next: u64,
}

fn rank_cmp(order: RankOrder) -> impl Fn(&GrowthRecord, &GrowthRecord) -> Ordering {
    move |a, b| {
        let by_delta = match order {
            RankOrder::Top => b.delta.cmp(&a.delta),
            RankOrder::Bottom => a.delta.cmp(&b.delta),
        };
        by_delta
            .then_with(|| b.degree_next.cmp(&a.degree_next))
            .then_with(|| a.account.cmp(&b.account))
    }
}

pub fn rank_growth(
    records: &[GrowthRecord],
    k: usize,
    tags: &TagMap,
    order: RankOrder,
) -> Vec<RankedRow> {
    let mut sorted: Vec<&GrowthRecord> = records.iter().collect();
    let cmp = rank_cmp(order);
    sorted.sort_by(|a, b| cmp(a, b));
    sorted
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, r)| {
            let tag = tags.lookup(&r.account);
            RankedRow {
                rank: i + 1,
                short: r.account.short(),
                account: r.account,
                label: tag.label.to_string(),
                kind: tag.kind,
                delta: r.delta,
                degree_prev: r.degree_prev,
                degree_next: r.degree_next,
            }
        })
        .collect()
}

/// The `k` accounts with the largest degree growth, labeled via `tags`.
pub fn top_k_growth(records: &[GrowthRecord], k: usize, tags: &TagMap) -> Vec<RankedRow> {
    rank_growth(records, k, tags, RankOrder::Top)
}
