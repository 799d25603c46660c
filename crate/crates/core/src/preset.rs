//! Named parameter sets for recurring studies.

use chrono::NaiveDate;
use serde::Serialize;

use crate::ingest::LoadFilter;
use crate::tempgraph::WindowSpec;

/// Dates, blocks and window anchors of one study period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StudyPreset {
    pub name: &'static str,
    /// First UTC day of the period; also the anchor of week 1.
    pub anchor: NaiveDate,
    pub weeks: u32,
    pub days: u32,
    /// Inclusive block interval admitted by the ingest filter.
    pub first_block: u64,
    pub last_block: u64,
    /// The two block halves used for block-range windows.
    pub block_halves: [(u64, u64); 2],
}

/// The four weeks from 2022-02-10 through 2022-03-10 UTC, blocks
/// 14,174,989 to 14,355,747.
pub const STUDY_2022: StudyPreset = StudyPreset {
    name: "paper-study",
    anchor: match NaiveDate::from_ymd_opt(2022, 2, 10) {
        Some(d) => d,
        None => panic!("invalid anchor"),
    },
    weeks: 4,
    days: 29,
    first_block: 14_174_989,
    last_block: 14_355_747,
    block_halves: [(14_174_989, 14_265_470), (14_265_812, 14_355_747)],
};

pub const PRESETS: &[StudyPreset] = &[STUDY_2022];

pub fn preset(name: &str) -> Option<&'static StudyPreset> {
    PRESETS.iter().find(|p| p.name == name)
}

impl StudyPreset {
    pub fn week_spec(&self) -> WindowSpec {
        WindowSpec::weeks(Some(self.anchor), Some(self.weeks))
    }

    pub fn day_spec(&self) -> WindowSpec {
        WindowSpec::days(Some(self.anchor), Some(self.days))
    }

    pub fn block_spec(&self) -> WindowSpec {
        WindowSpec::blocks(self.block_halves.to_vec())
    }

    pub fn load_filter(&self) -> LoadFilter {
        LoadFilter {
            min_block: Some(self.first_block),
            max_block: Some(self.last_block),
            require_success: false,
        }
    }
}
