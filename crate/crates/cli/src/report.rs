//! Report artifacts: JSON summary, CSV tables, SVG plots.
//!
//! Reports are byte-identical for identical (config, seed) pairs: no
//! timestamps, fixed field order, shortest round-trip float formatting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::EffectiveConfig;

/// One CSV table (header + stringified rows).
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// One named data series on a plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A simple scatter/line plot rendered to SVG.
#[derive(Debug, Clone)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

impl Plot {
    /// Renders the plot as a standalone SVG document.
    pub fn to_svg(&self) -> String {
        let (w, h) = (640.0, 440.0);
        let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 55.0);
        let (pw, ph) = (w - ml - mr, h - mt - mb);

        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        let (x0, x1) = padded_range(&xs);
        let (y0, y1) = padded_range(&ys);
        let px = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

        let mut svg = String::new();
        let _ = write!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
             viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
        );
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            ml + pw / 2.0,
            escape(&self.title)
        );

        // Axes, ticks, grid.
        let _ = write!(
            svg,
            "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" \
             stroke=\"black\"/>\n"
        );
        for i in 0..=4 {
            let fx = i as f64 / 4.0;
            let xv = x0 + fx * (x1 - x0);
            let yv = y0 + fx * (y1 - y0);
            let gx = ml + fx * pw;
            let gy = mt + ph - fx * ph;
            let _ = write!(
                svg,
                "<line x1=\"{gx:.1}\" y1=\"{mt}\" x2=\"{gx:.1}\" y2=\"{:.1}\" \
                 stroke=\"#dddddd\"/>\n\
                 <line x1=\"{ml}\" y1=\"{gy:.1}\" x2=\"{:.1}\" y2=\"{gy:.1}\" \
                 stroke=\"#dddddd\"/>\n",
                mt + ph,
                ml + pw
            );
            let _ = write!(
                svg,
                "<text x=\"{gx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
                 <text x=\"{:.1}\" y=\"{gy:.1}\" text-anchor=\"end\" \
                 dominant-baseline=\"middle\">{}</text>\n",
                mt + ph + 18.0,
                tick(xv),
                ml - 8.0,
                tick(yv)
            );
        }
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            ml + pw / 2.0,
            h - 12.0,
            escape(&self.x_label)
        );
        let _ = write!(
            svg,
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" \
             transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
            mt + ph / 2.0,
            mt + ph / 2.0,
            escape(&self.y_label)
        );

        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let mut path = String::new();
            for (pi, &(x, y)) in s.points.iter().enumerate() {
                if !(x.is_finite() && y.is_finite()) {
                    continue;
                }
                let _ = write!(
                    path,
                    "{}{:.2},{:.2} ",
                    if pi == 0 { "M" } else { "L" },
                    px(x),
                    py(y)
                );
                let _ = write!(
                    svg,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                    px(x),
                    py(y)
                );
            }
            let _ = write!(
                svg,
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.trim_end()
            );
            // Legend entry.
            let ly = mt + 16.0 + 16.0 * si as f64;
            let _ = write!(
                svg,
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
                ml + pw - 150.0,
                ml + pw - 130.0,
                ml + pw - 124.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn padded_range(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-3 && v.abs() < 1e4 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Everything an experiment produced.
#[derive(Debug)]
pub struct Outcome {
    pub metrics: serde_json::Map<String, serde_json::Value>,
    pub passed: bool,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
}

#[derive(Serialize)]
struct Report<'a> {
    version: &'static str,
    config_hash: String,
    config: &'a EffectiveConfig,
    metrics: &'a serde_json::Map<String, serde_json::Value>,
    passed: bool,
    tables: Vec<String>,
    plots: Vec<String>,
}

/// SHA-256 of the canonical serialization of the effective config; whitespace
/// or key-order differences in the source file do not change the hash.
pub fn config_hash(config: &EffectiveConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serialization cannot fail");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    format!("{:x}", hasher.finalize())
}

/// Writes report.json, one CSV per table, and (optionally) one SVG per plot
/// into `out_dir`. Returns the report path.
pub fn write_artifacts(
    out_dir: &Path,
    config: &EffectiveConfig,
    outcome: &Outcome,
    with_plots: bool,
) -> Result<PathBuf, String> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let mut table_files = Vec::new();
    for table in &outcome.tables {
        let file = format!("{}.csv", table.name);
        let path = out_dir.join(&file);
        std::fs::write(&path, table.to_csv())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        table_files.push(file);
    }
    let mut plot_files = Vec::new();
    if with_plots {
        for plot in &outcome.plots {
            let file = format!("{}.svg", plot.name);
            let path = out_dir.join(&file);
            std::fs::write(&path, plot.to_svg())
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            plot_files.push(file);
        }
    }
    let report = Report {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(config),
        config,
        metrics: &outcome.metrics,
        passed: outcome.passed,
        tables: table_files,
        plots: plot_files,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&report).map_err(|e| format!("report serialization: {e}"))?;
    bytes.push(b'\n');
    let path = out_dir.join("report.json");
    std::fs::write(&path, &bytes)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}
