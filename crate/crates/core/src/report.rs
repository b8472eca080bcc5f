//! Tables, figure data and self-contained SVG renderings.
//!
//! Figures are pure functions of their data records, so the JSON written next
//! to each SVG is enough to redraw it. Rounding only happens in the rendering.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{Table1, Table2, STRONG_CORRELATION};
use crate::corpus::Subset;
use crate::error::{Error, Result};
use crate::metrics::MetricVariant;

/// Two-decimal display without a negative zero.
pub fn fmt2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// File-name-safe form of a variant label.
pub fn slug(v: &MetricVariant) -> String {
    v.label().replace('/', "_").replace('+', "-")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub subset: Subset,
    pub x: f64,
    pub y: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterData {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<ScatterPoint>,
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 56.0;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

pub fn render_scatter(data: &ScatterData) -> String {
    let (x0, x1) = range(data.points.iter().map(|p| p.x));
    let (y0, y1) = range(data.points.iter().map(|p| p.y));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        W / 2.0,
        escape(&data.title)
    );
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
    );
    for frac in [0.0, 0.5, 1.0] {
        let xv = x0 + frac * (x1 - x0);
        let yv = y0 + frac * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(xv),
            b + 14.0,
            fmt2(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 4.0,
            py(yv) + 4.0,
            fmt2(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        escape(&data.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&data.y_label)
    );
    for p in &data.points {
        let (shape_fill, stroke) = match p.subset {
            Subset::Common => ("#1f77b4", "none"),
            Subset::NonNative => ("none", "#d62728"),
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{shape_fill}" stroke="{stroke}"/>"#,
            px(p.x),
            py(p.y)
        );
    }
    let _ = writeln!(
        s,
        r##"<circle cx="{}" cy="40" r="3" fill="#1f77b4"/><text x="{}" y="44">Common</text>"##,
        r - 90.0,
        r - 84.0
    );
    let _ = writeln!(
        s,
        r##"<circle cx="{}" cy="54" r="3" fill="none" stroke="#d62728"/><text x="{}" y="58">NonNative</text>"##,
        r - 90.0,
        r - 84.0
    );
    s.push_str("</svg>\n");
    s
}

/// Renders a scatter plot and returns it with its data record.
pub fn emit_scatter(data: ScatterData) -> (String, ScatterData) {
    (render_scatter(&data), data)
}

/// Pairwise p-values in ranking order with correlations on the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    pub title: String,
    pub labels: Vec<String>,
    pub p: Vec<Vec<f64>>,
    pub diagonal: Vec<f64>,
}

impl HeatmapSpec {
    pub fn from_table2(t: &Table2) -> Self {
        HeatmapSpec {
            title: format!(
                "{} p-values, {} / {}",
                t.test, t.subset, t.aggregation
            ),
            labels: t.ranking.iter().map(|r| r.metric_variant.label()).collect(),
            p: t.p_matrix(),
            diagonal: t.ranking.iter().map(|r| r.r).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.diagonal.len() != n || self.p.len() != n || self.p.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("heatmap is not square".into()));
        }
        if self.diagonal.iter().any(|r| !(-1.0..=1.0).contains(r)) {
            return Err(Error::Invalid("heatmap diagonal outside [-1, 1]".into()));
        }
        for (i, row) in self.p.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if i != j && !(0.0..=1.0).contains(p) {
                    return Err(Error::Invalid(format!("heatmap p[{i}][{j}] = {p} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

const CELL: f64 = 36.0;
const LABEL_W: f64 = 170.0;

pub fn render_heatmap(spec: &HeatmapSpec) -> Result<String> {
    spec.validate()?;
    let n = spec.labels.len();
    let top = LABEL_W;
    let w = LABEL_W + CELL * n as f64 + 10.0;
    let h = top + CELL * n as f64 + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="6" y="16" font-size="12">{}</text>"#,
        escape(&spec.title)
    );
    for (i, label) in spec.labels.iter().enumerate() {
        let y = top + CELL * i as f64 + CELL / 2.0 + 3.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
            LABEL_W - 6.0,
            escape(label)
        );
        let x = LABEL_W + CELL * i as f64 + CELL / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="start" transform="rotate(-60 {x} {})">{}</text>"#,
            top - 6.0,
            top - 6.0,
            escape(label)
        );
    }
    for i in 0..n {
        for j in 0..n {
            let x = LABEL_W + CELL * j as f64;
            let y = top + CELL * i as f64;
            let (fill, text, bold) = if i == j {
                ("#ffffff".to_string(), fmt2(spec.diagonal[i]), true)
            } else {
                let p = spec.p[i][j];
                // darker means more significant
                let shade = (80.0 + 175.0 * p.clamp(0.0, 1.0)).round() as u8;
                (format!("#{shade:02x}{shade:02x}ff"), fmt2(p), false)
            };
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#999999"/>"##
            );
            let weight = if bold { r#" font-weight="bold""# } else { "" };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle"{weight}>{text}</text>"#,
                x + CELL / 2.0,
                y + CELL / 2.0 + 3.0
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_heatmap(spec: HeatmapSpec) -> Result<(String, HeatmapSpec)> {
    Ok((render_heatmap(&spec)?, spec))
}

/// Correlation table, r below the strong threshold in italics.
pub fn table1_markdown(t: &Table1) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Pearson correlation of {} with metrics\n", t.cr_definition);
    for panel in &t.panels {
        let _ = writeln!(s, "## {}\n", panel.aggregation);
        let header: Vec<&str> = t.metrics.iter().map(|m| m.metric.label()).collect();
        let _ = writeln!(s, "| subset | n | {} |", header.join(" | "));
        let _ = writeln!(s, "|---|---:|{}", "---:|".repeat(header.len()));
        for row in &panel.rows {
            let cells: Vec<String> = row
                .cells
                .iter()
                .map(|c| {
                    if c.r < STRONG_CORRELATION {
                        format!("*{}*", fmt2(c.r))
                    } else {
                        fmt2(c.r)
                    }
                })
                .collect();
            let _ = writeln!(s, "| {} | {} | {} |", row.subset, row.n, cells.join(" | "));
        }
        s.push('\n');
    }
    s
}

/// Ranked variants with cluster boundaries drawn as marker rows.
pub fn table2_markdown(t: &Table2) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# Metric variants by correlation with {} ({}, {}, n={})\n",
        t.cr_definition, t.subset, t.aggregation, t.n
    );
    let _ = writeln!(s, "| # | metric | reference | alignment | r | p |");
    let _ = writeln!(s, "|---:|---|---|---|---:|---:|");
    for (i, row) in t.ranking.iter().enumerate() {
        let v = row.metric_variant;
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            i + 1,
            v.metric.label(),
            v.reference_mode.label(),
            v.alignment_mode.label(),
            fmt2(row.r),
            fmt_p(row.p)
        );
        let k = i + 1;
        let marks: Vec<String> = t
            .clusters
            .iter()
            .filter(|c| c.after.contains(&k))
            .map(|c| format!("p<{}", c.threshold))
            .collect();
        if !marks.is_empty() && k < t.ranking.len() {
            let _ = writeln!(s, "| | *boundary: {}* | | | | |", marks.join(", "));
        }
    }
    s
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invalid(format!("serializing {}: {e}", path.display())))?;
    s.push('\n');
    write_file(path, &s)
}
