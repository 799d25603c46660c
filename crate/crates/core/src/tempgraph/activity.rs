//! Daily cumulative, new and active account counts.

use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::model::Address;
use crate::tempgraph::window::Partition;

/// How the first day's new-account count is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstDayConvention {
    /// `new_1 = N_1`, seed accounts included.
    #[default]
    SeedInclusive,
    /// `new_1 = N_1 - |seed|`.
    ExcludeSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ActivityDay {
    pub date: NaiveDate,
    /// Size of the cumulative account set after absorbing this day.
    pub cumulative: u64,
    pub new: u64,
    /// Distinct accounts sending or receiving on this day.
    pub active: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActivitySeries {
    pub days: Vec<ActivityDay>,
    pub seed_size: u64,
    pub convention: FirstDayConvention,
}

impl ActivitySeries {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// Folds day windows into the account series. The cumulative set starts
/// as `seed` and absorbs every sender and recipient day by day.
pub fn activity_series(
    ds: &Dataset,
    days: &Partition,
    seed: &HashSet<Address>,
    convention: FirstDayConvention,
) -> Result<ActivitySeries> {
    if !days.is_daily() {
        return Err(Error::Config(format!(
            "activity series needs utc_day windows, got {}",
            days.spec.mode_name()
        )));
    }
    let mut cumulative: HashSet<Address> = seed.clone();
    let mut out = Vec::with_capacity(days.windows.len());
    let mut prev = 0u64;
    for (i, w) in days.windows.iter().enumerate() {
        let mut active: HashSet<Address> = HashSet::new();
        for tx in w.transactions(ds) {
            active.extend(tx.participants());
        }
        cumulative.extend(active.iter().copied());
        let n = cumulative.len() as u64;
        let new = match (i, convention) {
            (0, FirstDayConvention::SeedInclusive) => n,
            (0, FirstDayConvention::ExcludeSeed) => n - seed.len() as u64,
            _ => n - prev,
        };
        out.push(ActivityDay {
            date: w.date().expect("daily partition"),
            cumulative: n,
            new,
            active: active.len() as u64,
        });
        prev = n;
    }
    Ok(ActivitySeries {
        days: out,
        seed_size: seed.len() as u64,
        convention,
    })
}
