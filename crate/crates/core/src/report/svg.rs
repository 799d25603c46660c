//! Minimal self-contained SVG 1.1 line charts.
//!
//! Coordinates are printed with two decimals, so identical inputs always
//! produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 70.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];
const MARKER_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    /// Explicit x tick labels, e.g. dates for day ordinals.
    pub x_ticks: Option<Vec<(f64, String)>>,
}

impl AxisSpec {
    pub fn linear(x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            x_ticks: None,
        }
    }

    pub fn log_log(x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            ..Self::linear(x_label, y_label)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChartText {
    pub title: String,
    pub subtitle: String,
    /// Run metadata embedded in the `<desc>` element.
    pub metadata: Vec<(String, String)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_step(range: f64, target: f64) -> f64 {
    let raw = (range / target).max(f64::MIN_POSITIVE);
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1.0 && v.fract() == 0.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1e-3 || v == 0.0 {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
    ticks: Vec<(f64, String)>,
}

impl Axis {
    fn fit(scale: Scale, values: impl Iterator<Item = f64>, zero_based: bool) -> Self {
        let vals: Vec<f64> = values
            .filter(|v| v.is_finite() && (scale == Scale::Linear || *v > 0.0))
            .collect();
        match scale {
            Scale::Log => {
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (mut lo, mut hi) = if vals.is_empty() {
                    (0.0, 1.0)
                } else {
                    (min.log10().floor(), max.log10().ceil())
                };
                if hi <= lo {
                    hi = lo + 1.0;
                }
                lo = lo.min(hi - 1.0);
                let ticks = (lo as i64..=hi as i64)
                    .map(|k| (k as f64, fmt_tick(10f64.powi(k as i32))))
                    .collect();
                Axis {
                    scale,
                    lo,
                    hi,
                    ticks,
                }
            }
            Scale::Linear => {
                let mut lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let mut hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if vals.is_empty() {
                    lo = 0.0;
                    hi = 1.0;
                }
                if zero_based {
                    lo = lo.min(0.0);
                }
                if hi <= lo {
                    hi = lo + 1.0;
                }
                let step = nice_step(hi - lo, 5.0);
                let first = (lo / step).ceil() as i64;
                let last = (hi / step).floor() as i64;
                let ticks = (first..=last)
                    .map(|i| (i as f64 * step, fmt_tick(i as f64 * step)))
                    .collect();
                Axis {
                    scale,
                    lo,
                    hi,
                    ticks,
                }
            }
        }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let t = match self.scale {
            Scale::Linear => v,
            Scale::Log if v > 0.0 => v.log10(),
            Scale::Log => return None,
        };
        Some((t - self.lo) / (self.hi - self.lo))
    }
}

/// Renders the chart. CCDF charts pass [`AxisSpec::log_log`]; points with
/// non-positive coordinates on a log axis are dropped.
pub fn render_line_chart(series: &[Series], axes: &AxisSpec, text: &ChartText) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Config("a chart needs at least one series".into()));
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let mut x_axis = Axis::fit(axes.x_scale, xs, false);
    let y_axis = Axis::fit(axes.y_scale, ys, axes.y_scale == Scale::Linear);
    if let Some(ticks) = &axes.x_ticks {
        if axes.x_scale == Scale::Linear {
            x_axis.ticks = ticks.clone();
        }
    }
    let px = |v: f64| x_axis.unit(v).map(|u| LEFT + u * plot_w);
    let py = |v: f64| y_axis.unit(v).map(|u| TOP + plot_h - u * plot_h);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH:.0}" height="{HEIGHT:.0}" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, "<title>{}</title>", esc(&text.title));
    if !text.metadata.is_empty() {
        let body: Vec<String> = text
            .metadata
            .iter()
            .map(|(k, v)| format!("{}={}", esc(k), esc(v)))
            .collect();
        let _ = writeln!(s, "<desc>{}</desc>", body.join("; "));
    }
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH:.0}" height="{HEIGHT:.0}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="28" font-size="16" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        esc(&text.title)
    );
    if !text.subtitle.is_empty() {
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="48" font-size="11" fill="#555" text-anchor="middle">{}</text>"##,
            LEFT + plot_w / 2.0,
            esc(&text.subtitle)
        );
    }

    // Axes and grid.
    let _ = writeln!(s, r##"<g class="axes" stroke="#333" stroke-width="1">"##);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g class="ticks" font-size="10" fill="#333">"##);
    for (v, label) in &x_axis.ticks {
        let pos = match x_axis.scale {
            Scale::Log => Some(LEFT + (v - x_axis.lo) / (x_axis.hi - x_axis.lo) * plot_w),
            Scale::Linear => px(*v),
        };
        if let Some(x) = pos.filter(|x| (LEFT - 0.5..=LEFT + plot_w + 0.5).contains(x)) {
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{TOP:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + plot_h,
                TOP + plot_h + 16.0,
                esc(label)
            );
        }
    }
    for (v, label) in &y_axis.ticks {
        let pos = match y_axis.scale {
            Scale::Log => Some(TOP + plot_h - (v - y_axis.lo) / (y_axis.hi - y_axis.lo) * plot_h),
            Scale::Linear => py(*v),
        };
        if let Some(y) = pos.filter(|y| (TOP - 0.5..=TOP + plot_h + 0.5).contains(y)) {
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + plot_w,
                LEFT - 6.0,
                y + 3.0,
                esc(label)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        esc(&axes.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        esc(&axes.y_label)
    );

    // Series.
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<(f64, f64)> = series
            .points
            .iter()
            .filter_map(|&(x, y)| Some((px(x)?, py(y)?)))
            .collect();
        let pts: Vec<String> = coords
            .iter()
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-name="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            esc(&series.name),
            pts.join(" ")
        );
        if coords.len() <= MARKER_LIMIT {
            for (x, y) in &coords {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#
                );
            }
        }
    }

    // Legend.
    let _ = writeln!(s, r#"<g class="legend" font-size="11">"#);
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 10.0 + i as f64 * 18.0;
        let x = LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            x + 18.0,
            x + 24.0,
            y + 4.0,
            esc(&series.name)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn write_line_chart(
    series: &[Series],
    axes: &AxisSpec,
    text: &ChartText,
    path: &Path,
) -> Result<()> {
    let svg = render_line_chart(series, axes, text)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
