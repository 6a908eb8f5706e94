//! Static SVG line charts for CSV series.

use std::fmt::Write;

use anyhow::{bail, Context, Result};

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub x_label: String,
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// One series per column after the first, which holds x. Cells that are
/// empty or do not parse as numbers are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<Series>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().context("empty CSV")?.split(',').map(str::trim).collect();
    if header.len() < 2 {
        bail!("CSV needs an x column and at least one series");
    }
    let mut series: Vec<Series> = header[1..]
        .iter()
        .map(|name| Series {
            x_label: header[0].to_string(),
            name: name.to_string(),
            points: Vec::new(),
        })
        .collect();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let x: f64 = cells[0]
            .parse()
            .with_context(|| format!("row {}: bad x value `{}`", i + 2, cells[0]))?;
        for (s, cell) in series.iter_mut().zip(cells.iter().skip(1)) {
            if let Ok(y) = cell.parse::<f64>() {
                if y.is_finite() && x.is_finite() {
                    s.points.push((x, y));
                }
            }
        }
    }
    Ok(series)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(series: &Series) -> String {
    let (x0, x1) = range(series.points.iter().map(|p| p.0));
    let (y0, y1) = range(series.points.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>",
        W / 2.0,
        escape(&series.name)
    );
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        out,
        "<path d=\"M{l} {t} L{l} {b} L{r} {b}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    for (v, x, y, anchor) in [
        (y1, l - 6.0, t + 4.0, "end"),
        (y0, l - 6.0, b, "end"),
        (x0, l, b + 18.0, "middle"),
        (x1, r, b + 18.0, "middle"),
    ] {
        let _ = writeln!(
            out,
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{v:.4}</text>"
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        W / 2.0,
        H - 12.0,
        escape(&series.x_label)
    );
    if !series.points.is_empty() {
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// File-name friendly form of a series name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    if s.is_empty() {
        "series".into()
    } else {
        s
    }
}
