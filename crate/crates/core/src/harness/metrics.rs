//! Learning-curve metrics as CSV and a self-contained SVG plot.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// One evaluation point. Losses are averaged over the updates since the
/// previous evaluation and are NaN when there were none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub mean_return: f64,
    pub success_rate: f64,
    pub alpha: f64,
    pub critic_loss: f64,
    pub actor_loss: f64,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Result<String, HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let err = |e: csv::Error| HarnessError::Csv { path: "<metrics>".into(), msg: e.to_string() };
    w.write_record(["step", "mean_return", "success_rate", "alpha", "critic_loss", "actor_loss"]).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Csv { path: "<metrics>".into(), msg: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), HarnessError> {
    std::fs::write(path, metrics_csv(rows)?).map_err(|source| HarnessError::Io { path: path.into(), source })
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let err = |e: csv::Error| HarnessError::Csv { path: path.into(), msg: e.to_string() };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().collect::<Result<Vec<MetricsRow>, _>>().map_err(err)
}

/// Pointwise mean and population standard deviation across series, by row
/// index over the common prefix.
pub fn mean_std(series: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let n = series.len() as f64;
            let mean = series.iter().map(|s| s[i]).sum::<f64>() / n;
            let var = series.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect()
}

const WIDTH: f64 = 760.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

struct Panel<'a> {
    title: &'a str,
    top: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Panel<'_> {
    fn x(&self, v: f64) -> f64 {
        MARGIN_L + v / self.x_max * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        self.top + PANEL_H - (v - self.y_min) / (self.y_max - self.y_min) * PANEL_H
    }

    fn frame(&self, svg: &mut String) {
        let (x0, x1) = (self.x(0.0), self.x(self.x_max));
        let (y0, y1) = (self.top, self.top + PANEL_H);
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{PANEL_H:.1}" fill="none" stroke="#444"/>"##,
            x1 - x0
        );
        let _ = writeln!(svg, r#"<text x="{x0:.1}" y="{:.1}" font-size="14">{}</text>"#, y0 - 8.0, self.title);
        for (v, anchor_y) in [(self.y_min, y1), (self.y_max, y0 + 10.0)] {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{anchor_y:.1}" font-size="11" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                short(v)
            );
        }
        for (v, anchor) in [(0.0, "start"), (self.x_max, "end")] {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="{anchor}">{}</text>"#,
                self.x(v),
                y1 + 16.0,
                short(v)
            );
        }
    }

    fn polyline(&self, svg: &mut String, pts: &[(f64, f64)], color: &str, width: f64) {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.x(x), self.y(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            coords.join(" ")
        );
    }

    fn band(&self, svg: &mut String, xs: &[f64], stats: &[(f64, f64)]) {
        let upper = xs.iter().zip(stats).map(|(&x, &(m, s))| (x, m + s));
        let lower = xs.iter().zip(stats).rev().map(|(&x, &(m, s))| (x, m - s));
        let coords: Vec<String> =
            upper.chain(lower).map(|(x, y)| format!("{:.2},{:.2}", self.x(x), self.y(y))).collect();
        let _ = writeln!(svg, r##"<polygon points="{}" fill="#000" fill-opacity="0.12" stroke="none"/>"##, coords.join(" "));
    }
}

fn short(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Mean return and success rate against step, one line per series; with two
/// or more series the mean and a mean +- std band are drawn as well.
pub fn learning_curve_svg(series: &[(String, Vec<MetricsRow>)]) -> String {
    let x_max = series.iter().flat_map(|(_, rows)| rows.iter().map(|r| r.step as f64)).fold(1.0, f64::max);
    let agg = series.len() >= 2;
    let returns: Vec<Vec<f64>> = series.iter().map(|(_, rows)| rows.iter().map(|r| r.mean_return).collect()).collect();
    let success: Vec<Vec<f64>> = series.iter().map(|(_, rows)| rows.iter().map(|r| r.success_rate).collect()).collect();
    let ret_stats = mean_std(&returns);
    let (mut y_lo, mut y_hi) = range(returns.iter().flatten().copied());
    if agg {
        let (a, b) = range(ret_stats.iter().flat_map(|&(m, s)| [m - s, m + s]));
        y_lo = y_lo.min(a);
        y_hi = y_hi.max(b);
    }
    let height = MARGIN_T + 2.0 * PANEL_H + GAP + 60.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let panels = [
        (Panel { title: "mean return", top: MARGIN_T, x_max, y_min: y_lo, y_max: y_hi }, &returns),
        (Panel { title: "success rate", top: MARGIN_T + PANEL_H + GAP, x_max, y_min: -0.02, y_max: 1.02 }, &success),
    ];
    for (panel, data) in &panels {
        panel.frame(&mut svg);
        if agg {
            let xs: Vec<f64> = series[0].1.iter().map(|r| r.step as f64).collect();
            let stats = mean_std(data);
            let xs = &xs[..stats.len().min(xs.len())];
            panel.band(&mut svg, xs, &stats[..xs.len()]);
            let mean: Vec<(f64, f64)> = xs.iter().zip(&stats).map(|(&x, &(m, _))| (x, m)).collect();
            panel.polyline(&mut svg, &mean, "#000", 2.0);
        }
        for (i, ((_, rows), ys)) in series.iter().zip(data.iter()).enumerate() {
            let pts: Vec<(f64, f64)> = rows.iter().zip(ys).map(|(r, &y)| (r.step as f64, y)).collect();
            panel.polyline(&mut svg, &pts, COLORS[i % COLORS.len()], if agg { 1.0 } else { 1.8 });
        }
    }
    let legend_y = MARGIN_T + 2.0 * PANEL_H + GAP + 40.0;
    for (i, (label, _)) in series.iter().enumerate() {
        let x = MARGIN_L + 110.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{legend_y:.1}" font-size="12">{label}</text>"#,
            legend_y - 10.0,
            COLORS[i % COLORS.len()],
            x + 16.0
        );
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">step</text>"#, WIDTH / 2.0, legend_y - 20.0);
    svg.push_str("</svg>\n");
    svg
}

pub fn write_learning_curve(path: &Path, series: &[(String, Vec<MetricsRow>)]) -> Result<(), HarnessError> {
    std::fs::write(path, learning_curve_svg(series)).map_err(|source| HarnessError::Io { path: path.into(), source })
}
