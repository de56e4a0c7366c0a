//! Minimal standalone SVG plots, emitted as text.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const PANEL: f64 = 180.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const GAP: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of<'a>(values: impl IntoIterator<Item = &'a f64>) -> Self {
        let (lo, hi) = values
            .into_iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo > hi {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if lo == hi {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            return Self { lo: lo - pad, hi: hi + pad };
        }
        Self { lo, hi }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axes box with min/max tick labels on both axes.
fn frame(out: &mut String, top: f64, xr: Range, yr: Range, xlabel: &str, ylabel: &str, log: bool) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (top + PANEL, top);
    let label = |v: f64| if log { format!("1e{v:.0}") } else { format!("{v:.4}") };
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{PANEL:.2}" fill="none" stroke="black"/>"#,
        x1 - x0
    );
    let _ = writeln!(out, r#"<text x="{x0:.2}" y="{:.2}" text-anchor="start">{}</text>"#, y0 + 14.0, label(xr.lo));
    let _ = writeln!(out, r#"<text x="{x1:.2}" y="{:.2}" text-anchor="end">{}</text>"#, y0 + 14.0, label(xr.hi));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, y0 + 14.0, escape(xlabel));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{y0:.2}" text-anchor="end">{}</text>"#, x0 - 4.0, label(yr.lo));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 4.0, y1 + 10.0, label(yr.hi));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 4.0, (y0 + y1) / 2.0, escape(ylabel));
}

fn polyline(out: &mut String, points: &[(f64, f64)], color: &str) {
    if points.is_empty() {
        return;
    }
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
}

/// One stacked panel per series, each drawn as a left-continuous step function of `x`.
pub fn step_plot(title: &str, xlabel: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let height = MARGIN_TOP + series.len() as f64 * (PANEL + GAP);
    let mut out = String::new();
    header(&mut out, height, title);
    let xr = Range::of(x);
    for (j, (name, y)) in series.iter().enumerate() {
        let top = MARGIN_TOP + j as f64 * (PANEL + GAP);
        let yr = Range::of(y);
        frame(&mut out, top, xr, yr, xlabel, name, false);
        let px = |v: f64| xr.map(v, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let py = |v: f64| yr.map(v, top + PANEL, top);
        let mut pts = Vec::with_capacity(2 * x.len());
        for (k, (&xi, &yi)) in x.iter().zip(y).enumerate() {
            if !yi.is_finite() {
                continue;
            }
            if k > 0 && y[k - 1].is_finite() {
                pts.push((px(xi), py(y[k - 1])));
            }
            pts.push((px(xi), py(yi)));
        }
        polyline(&mut out, &pts, COLORS[j % COLORS.len()]);
    }
    out.push_str("</svg>\n");
    out
}

/// All series on one panel with logarithmic axes; nonpositive values are skipped.
pub fn loglog_plot(title: &str, xlabel: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let height = MARGIN_TOP + PANEL + GAP + 16.0 * series.len() as f64;
    let mut out = String::new();
    header(&mut out, height, title);
    let lx: Vec<f64> = x.iter().map(|v| if *v > 0.0 { v.log10() } else { f64::NAN }).collect();
    let ly: Vec<Vec<f64>> =
        series.iter().map(|(_, y)| y.iter().map(|v| if *v > 0.0 { v.log10() } else { f64::NAN }).collect()).collect();
    let xr = Range::of(&lx);
    let yr = Range::of(ly.iter().flatten());
    frame(&mut out, MARGIN_TOP, xr, yr, xlabel, "", true);
    for (j, ((name, _), y)) in series.iter().zip(&ly).enumerate() {
        let color = COLORS[j % COLORS.len()];
        let pts: Vec<(f64, f64)> = lx
            .iter()
            .zip(y)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| (xr.map(a, MARGIN_LEFT, WIDTH - MARGIN_RIGHT), yr.map(b, MARGIN_TOP + PANEL, MARGIN_TOP)))
            .collect();
        polyline(&mut out, &pts, color);
        let ty = MARGIN_TOP + PANEL + GAP + 16.0 * j as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{ty:.2}" fill="{color}">{}</text>"#,
            MARGIN_LEFT,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
