use std::collections::BTreeMap;

use serde::Serialize;

use crate::tempgraph::{DegreeTable, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcdfPoint {
    pub degree: u64,
    /// Share of accounts with degree >= `degree` among accounts with degree >= 1.
    pub fraction: f64,
}

/// Complementary cumulative degree distribution, one point per observed
/// degree value >= 1. Zero-degree accounts are excluded from the base.
pub fn degree_ccdf(table: &DegreeTable, direction: Direction) -> Vec<CcdfPoint> {
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    for r in table.iter() {
        let d = r.get(direction);
        if d >= 1 {
            *histogram.entry(d).or_insert(0) += 1;
        }
    }
    let base: u64 = histogram.values().sum();
    let mut at_least = base;
    let mut out = Vec::with_capacity(histogram.len());
    for (degree, count) in histogram {
        out.push(CcdfPoint {
            degree,
            fraction: at_least as f64 / base as f64,
        });
        at_least -= count;
    }
    out
}
