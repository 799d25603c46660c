use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tempgraph::Partition;

/// Transactions per UTC day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VolumeSeries {
    pub points: Vec<(NaiveDate, u64)>,
}

impl VolumeSeries {
    pub fn total(&self) -> u64 {
        self.points.iter().map(|(_, n)| n).sum()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.points.iter().map(|(_, n)| *n).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Daily transaction counts over a day partition. The partition already
/// carries the view it was built for.
pub fn volume_series(days: &Partition) -> Result<VolumeSeries> {
    if !days.is_daily() {
        return Err(Error::Config(format!(
            "volume series needs utc_day windows, got {}",
            days.spec.mode_name()
        )));
    }
    Ok(VolumeSeries {
        points: days
            .windows
            .iter()
            .map(|w| (w.date().expect("daily partition"), w.len() as u64))
            .collect(),
    })
}
