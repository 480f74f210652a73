//! Native SVG plots: one polyline per method, mean across seeds with a
//! standard-error band. No renderer dependency; the output is a plain
//! hand-assembled SVG document.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::csv::{read_csv, ResultRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// RMSE vs number of acquired tasks.
    Rmse,
    /// RMSE at the final budget vs number of clusters.
    Clusters,
    /// Regret vs BO iteration.
    Regret,
}

impl FigureKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rmse" => Ok(FigureKind::Rmse),
            "clusters" => Ok(FigureKind::Clusters),
            "regret" => Ok(FigureKind::Regret),
            other => Err(Error::config(format!("plot kind: unknown '{other}'"))),
        }
    }

    fn metric(self) -> &'static str {
        match self {
            FigureKind::Rmse => "rmse",
            FigureKind::Clusters => "rmse_at_budget",
            FigureKind::Regret => "regret",
        }
    }

    fn axis_labels(self) -> (&'static str, &'static str) {
        match self {
            FigureKind::Rmse => ("acquired tasks", "RMSE"),
            FigureKind::Clusters => ("clusters", "RMSE"),
            FigureKind::Regret => ("iteration", "regret"),
        }
    }
}

struct Series {
    method: String,
    /// step -> (mean, standard error across seeds)
    points: Vec<(usize, f64, f64)>,
}

fn aggregate(rows: &[ResultRow], metric: &str) -> Vec<Series> {
    let mut by_method: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == metric) {
        by_method
            .entry(r.method.clone())
            .or_default()
            .entry(r.step)
            .or_default()
            .push(r.value);
    }
    by_method
        .into_iter()
        .map(|(method, steps)| {
            let points = steps
                .into_iter()
                .map(|(step, vals)| {
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let se = if vals.len() > 1 {
                        let var =
                            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                        (var / n).sqrt()
                    } else {
                        0.0
                    };
                    (step, mean, se)
                })
                .collect();
            Series { method, points }
        })
        .collect()
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 64.0;
const MR: f64 = 18.0;
const MT: f64 = 18.0;
const MB: f64 = 52.0;

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let span = hi - lo;
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = start;
    while t <= hi + 1e-9 * span {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn fmt(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

/// Reads the CSV and renders the figure. Fails on a malformed file or when
/// no rows carry the figure's metric.
pub fn plot_curves(csv_path: &Path, kind: FigureKind, out_path: &Path) -> Result<()> {
    let rows = read_csv(csv_path)?;
    let svg = render_svg(&rows, kind)?;
    std::fs::write(out_path, svg).map_err(|e| Error::io(out_path.display().to_string(), e))
}

pub fn render_svg(rows: &[ResultRow], kind: FigureKind) -> Result<String> {
    let series = aggregate(rows, kind.metric());
    if series.is_empty() {
        return Err(Error::config(format!(
            "plot: no rows with metric '{}'",
            kind.metric()
        )));
    }

    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in &series {
        for &(step, mean, se) in &s.points {
            x_lo = x_lo.min(step as f64);
            x_hi = x_hi.max(step as f64);
            y_lo = y_lo.min(mean - se);
            y_hi = y_hi.max(mean + se);
        }
    }
    if !(y_hi > y_lo) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    if !(x_hi > x_lo) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    let sx = |v: f64| ML + (v - x_lo) / (x_hi - x_lo) * (W - ML - MR);
    let sy = |v: f64| H - MB - (v - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let (x_label, y_label) = kind.axis_labels();
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    for t in nice_ticks(x_lo, x_hi, 8) {
        let x = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB,
            H - MB + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            H - MB + 18.0,
            fmt(t)
        ));
    }
    for t in nice_ticks(y_lo, y_hi, 6) {
        let y = sy(t);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{ML}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            ML - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            ML - 8.0,
            y + 4.0,
            fmt(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{x_label}</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{y_label}</text>\n",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    ));

    // error bands first so the curves draw on top
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.points.len() > 1 {
            let mut d = String::from("M");
            for &(step, mean, se) in &s.points {
                d.push_str(&format!(" {:.2} {:.2}", sx(step as f64), sy(mean + se)));
            }
            for &(step, mean, se) in s.points.iter().rev() {
                d.push_str(&format!(" L {:.2} {:.2}", sx(step as f64), sy(mean - se)));
            }
            d.push_str(" Z");
            svg.push_str(&format!(
                "<path d=\"{d}\" fill=\"{color}\" opacity=\"0.15\" stroke=\"none\"/>\n"
            ));
        }
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(step, mean, _)| format!("{:.2},{:.2}", sx(step as f64), sy(mean)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"13\" fill=\"{color}\">{}</text>\n",
            W - MR - 150.0,
            MT + 18.0 + 18.0 * i as f64,
            s.method
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_two_methods() -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for seed in [1u64, 2] {
            for step in 1..=3usize {
                rows.push(ResultRow::new(
                    "rmse_fig2",
                    seed,
                    "bamld",
                    step,
                    "rmse",
                    1.0 / step as f64 + seed as f64 * 0.01,
                ));
                rows.push(ResultRow::new(
                    "rmse_fig2",
                    seed,
                    "uniform",
                    step,
                    "rmse",
                    1.2 / step as f64,
                ));
            }
        }
        rows
    }

    #[test]
    fn two_methods_make_two_polylines() {
        let svg = render_svg(&rows_two_methods(), FigureKind::Rmse).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("acquired tasks"));
        assert!(svg.contains("RMSE"));
    }

    #[test]
    fn single_seed_has_zero_width_band() {
        let rows = vec![
            ResultRow::new("e", 1, "m", 1, "rmse", 0.5),
            ResultRow::new("e", 1, "m", 2, "rmse", 0.4),
        ];
        let svg = render_svg(&rows, FigureKind::Rmse).unwrap();
        // band path exists but collapses: upper edge equals lower edge
        let series = aggregate(&rows, "rmse");
        assert_eq!(series[0].points[0].2, 0.0);
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn empty_metric_subset_is_an_error() {
        let rows = rows_two_methods();
        assert!(render_svg(&rows, FigureKind::Regret).is_err());
    }
}
