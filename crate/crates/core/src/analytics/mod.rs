//! Study outputs derived from the temporal graph: daily volume, degree
//! distributions, degree-growth rankings and address labels.

pub mod ccdf;
pub mod growth;
pub mod tags;
pub mod volume;

pub use ccdf::{degree_ccdf, CcdfPoint};
pub use growth::{
    degree_growth, rank_growth, top_k_growth, GrowthRecord, RankOrder, RankedRow, TIE_RULE,
};
pub use tags::{load_tag_map, TagLoadStats, TagMap, TagRef, NO_PUBLIC_TAG};
pub use volume::{volume_series, VolumeSeries};
