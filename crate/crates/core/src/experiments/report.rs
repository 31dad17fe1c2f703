//! CSV table, JSON sidecar and SVG chart for sweep results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::{CellSummary, ExperimentConfig, SweepRow, SweepTable};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 16] = [
    "experiment",
    "manifold",
    "d",
    "k",
    "n",
    "lambda",
    "offset_w",
    "r",
    "trials",
    "successes",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "mean_count",
    "var_count",
    "infeasible",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn row_fields(r: &SweepRow) -> [String; 16] {
    [
        r.experiment.clone(),
        r.manifold.clone(),
        r.d.to_string(),
        opt(r.k),
        r.n.to_string(),
        opt(r.lambda),
        opt(r.offset_w),
        opt(r.r),
        r.trials.to_string(),
        opt(r.successes),
        opt(r.p_hat),
        opt(r.ci_lo),
        opt(r.ci_hi),
        opt(r.mean_count),
        opt(r.var_count),
        r.infeasible.to_string(),
    ]
}

/// Writes the result table. Missing values are empty fields; floats use the
/// shortest round-trip representation.
pub fn write_csv<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io_err)?;
    for r in &table.rows {
        w.write_record(row_fields(r)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    version: &'static str,
    experiment: &'static str,
    master_seed: u64,
    wall_seconds: f64,
    config: &'a ExperimentConfig,
    cells: &'a [CellSummary],
    notes: Vec<&'static str>,
}

const ALPHA_NOTE: &str = "predicted envelopes use the half-ball exponent factor alpha = 1/2; \
the true factor is 1/2 + O(1/log n), so envelope ratios carry that uncertainty";

/// Writes the metadata sidecar: effective config, crate version, seed,
/// wall time and per-cell diagnostics.
pub fn write_json<W: Write>(table: &SweepTable, cfg: &ExperimentConfig, out: W) -> Result<()> {
    let sidecar = Sidecar {
        version: env!("CARGO_PKG_VERSION"),
        experiment: table.experiment.name(),
        master_seed: cfg.seed,
        wall_seconds: table.wall_seconds,
        config: cfg,
        cells: &table.cells,
        notes: vec![ALPHA_NOTE],
    };
    serde_json::to_writer_pretty(out, &sidecar).map_err(io_err)
}

#[derive(Default)]
struct Series {
    points: Vec<(f64, f64, f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];

/// Line chart of `p_hat` against `Λ` (or `r` for radius schedules) with
/// Wilson whiskers. One polyline per (experiment, manifold, k, n) series.
/// Rows without an estimate are skipped.
pub fn render_svg(table: &SweepTable) -> String {
    let mut series: BTreeMap<String, Series> = BTreeMap::new();
    let mut x_is_r = false;
    for row in &table.rows {
        let (Some(p), Some(lo), Some(hi)) = (row.p_hat, row.ci_lo, row.ci_hi) else {
            continue;
        };
        let x = match (row.lambda, row.r) {
            (Some(l), _) => l,
            (None, Some(r)) => {
                x_is_r = true;
                r
            }
            _ => continue,
        };
        let k = row.k.map(|k| format!(" k={k}")).unwrap_or_default();
        let key = format!("{} {}{} n={}", row.experiment, row.manifold, k, row.n);
        series.entry(key).or_default().points.push((x, p, lo, hi));
    }
    for s in series.values_mut() {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (60.0, 220.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let xs = series.values().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut xmin, mut xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
    }
    if xmax - xmin < 1e-12 {
        xmin -= 0.5;
        xmax += 0.5;
    }
    let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| top + (1.0 - y) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="lightgray"/><text x="{:.2}" y="{:.2}" text-anchor="end">{:.2}</text>"#,
            left,
            sy(y),
            left + pw,
            sy(y),
            left - 6.0,
            sy(y) + 4.0,
            y
        );
    }
    for i in 0..=4 {
        let x = xmin + (xmax - xmin) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#,
            sx(x),
            top + ph + 16.0,
            x
        );
    }
    let xlabel = if x_is_r { "r" } else { "Lambda" };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text><text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">p_hat</text>"#,
        left + pw / 2.0,
        h - 12.0,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (i, (name, ser)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, p, _, _)| format!("{:.2},{:.2}", sx(x), sy(p)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, p, lo, hi) in &ser.points {
            let (cx, cap) = (sx(x), 3.0);
            let _ = writeln!(
                s,
                r#"<path d="M{:.2},{:.2}V{:.2}M{:.2},{:.2}H{:.2}M{:.2},{:.2}H{:.2}" stroke="{color}" fill="none"/><circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                cx,
                sy(lo),
                sy(hi),
                cx - cap,
                sy(lo),
                cx + cap,
                cx - cap,
                sy(hi),
                cx + cap,
                cx,
                sy(p)
            );
        }
        let ly = top + 12.0 + 16.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            lx + 24.0,
            ly,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
