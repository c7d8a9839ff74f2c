//! Minimal self-contained SVG scatter plots with theory overlays.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    /// Half-width of the error bar.
    pub err: Option<f64>,
}

impl PlotPoint {
    pub fn new(x: f64, y: f64) -> Self {
        PlotPoint { x, y, err: None }
    }

    pub fn with_err(x: f64, y: f64, err: f64) -> Self {
        PlotPoint { x, y, err: Some(err) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<PlotPoint>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<PlotPoint>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }

    /// A curve sampled at `n` points of `[a, b]` (log-spaced if `log`).
    pub fn curve(label: impl Into<String>, a: f64, b: f64, n: usize, log: bool, f: impl Fn(f64) -> f64) -> Self {
        let n = n.max(2);
        let points = (0..n)
            .map(|i| {
                let u = i as f64 / (n - 1) as f64;
                let x = if log { (a.ln() + u * (b.ln() - a.ln())).exp() } else { a + u * (b - a) };
                PlotPoint::new(x, f(x))
            })
            .collect();
        Series::new(label, points)
    }
}

/// Measured data, drawn as markers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotTable {
    pub series: Vec<Series>,
}

/// Axes, labels, and theory curves drawn as dashed lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub theory: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log {
                if v > 0.0 {
                    v.log10()
                } else {
                    continue;
                }
            } else {
                v
            };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            let pad = if log { 0.5 } else { (0.1 * lo.abs()).max(1.0) };
            lo -= pad;
            hi += pad;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Some(Axis { lo, hi, log })
    }

    fn t(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v > 0.0 {
                v.log10()
            } else {
                return None;
            }
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i64, self.hi.floor() as i64);
            if b >= a {
                return (a..=b).map(|e| ((e as f64 - self.lo) / (self.hi - self.lo), format!("1e{e}"))).collect();
            }
        }
        (0..=4)
            .map(|i| {
                let u = i as f64 / 4.0;
                let v = self.lo + u * (self.hi - self.lo);
                let v = if self.log { 10f64.powf(v) } else { v };
                (u, format!("{v:.3}"))
            })
            .collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG document for `table` with the overlays of `spec`.
pub fn render_svg(table: &PlotTable, spec: &PlotSpec) -> Result<String> {
    if table.series.iter().all(|s| s.points.is_empty()) {
        return Err(LabError::Empty("plot table"));
    }
    let all = || table.series.iter().chain(&spec.theory).flat_map(|s| s.points.iter());
    let xs = Axis::fit(all().map(|p| p.x), spec.log_x).ok_or(LabError::Empty("plottable x values"))?;
    let ys = Axis::fit(
        all().flat_map(|p| {
            let e = p.err.unwrap_or(0.0);
            [p.y - e, p.y + e]
        }),
        spec.log_y,
    )
    .ok_or(LabError::Empty("plottable y values"))?;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |u: f64| LEFT + u * pw;
    let py = |u: f64| TOP + (1.0 - u) * ph;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&spec.title));
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (u, label) in xs.ticks() {
        let x = px(u);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, TOP + ph + 18.0);
    }
    for (u, label) in ys.ticks() {
        let y = py(u);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, px(0.5), H - 12.0, escape(&spec.x_label));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        py(0.5),
        py(0.5),
        escape(&spec.y_label)
    );
    let mut legend = Vec::new();
    for (i, s) in spec.theory.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter_map(|p| Some(format!("{:.2},{:.2}", px(xs.t(p.x)?), py(ys.t(p.y)?))))
            .collect();
        if pts.len() >= 2 {
            let _ = writeln!(
                svg,
                r##"<polyline points="{}" fill="none" stroke="#555" stroke-width="1.5" stroke-dasharray="{}"/>"##,
                pts.join(" "),
                if i % 2 == 0 { "6 4" } else { "2 3" }
            );
        }
        legend.push((format!("{} (theory)", s.label), "#555", true));
    }
    for (i, s) in table.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for p in &s.points {
            let (Some(u), Some(v)) = (xs.t(p.x), ys.t(p.y)) else { continue };
            let (cx, cy) = (px(u), py(v));
            if let Some(e) = p.err.filter(|e| *e > 0.0) {
                if let (Some(a), Some(b)) = (ys.t(p.y - e), ys.t(p.y + e)) {
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
                        py(a),
                        py(b)
                    );
                }
            }
            let _ = writeln!(svg, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5" fill="{color}"/>"#);
        }
        legend.push((s.label.clone(), color, false));
    }
    for (i, (label, color, dashed)) in legend.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let x = LEFT + 10.0;
        if *dashed {
            let _ = writeln!(
                svg,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-dasharray="6 4"/>"#,
                x + 18.0
            );
        } else {
            let _ = writeln!(svg, r#"<circle cx="{}" cy="{y}" r="3.5" fill="{color}"/>"#, x + 9.0);
        }
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x + 24.0, y + 4.0, escape(label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes the plot to `path`.
pub fn emit_plot(table: &PlotTable, spec: &PlotSpec, path: &Path) -> Result<()> {
    let svg = render_svg(table, spec)?;
    std::fs::write(path, svg)?;
    Ok(())
}
