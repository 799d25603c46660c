//! Serializers for analysis products: CSV series and tables, markdown
//! ranking tables, SVG charts, and the bundle manifest tying them together.

pub mod bundle;
pub mod csv;
pub mod markdown;
pub mod svg;

pub use self::bundle::{
    file_sha256, sha256_hex, Artifact, ArtifactTags, InputDigest, ReportBundle, RunMetadata,
};
pub use self::csv::{emit_series_csv, SeriesRef};
pub use self::markdown::render_markdown_table;
pub use self::svg::{render_line_chart, write_line_chart, AxisSpec, ChartText, Scale, Series};
