//! Temporal graph: windowing, per-window directed multigraphs and degree
//! tables, and the daily account-activity fold.

pub mod activity;
pub mod graph;
pub mod window;

pub use activity::{activity_series, ActivityDay, ActivitySeries, FirstDayConvention};
pub use graph::{
    build_window_graph, build_window_graphs, degree_table, DegreeRecord, DegreeTable, Direction,
    Metric, WindowGraph,
};
pub use window::{partition_windows, Partition, Window, WindowBounds, WindowSpec};
