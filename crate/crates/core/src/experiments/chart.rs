//! Regret-vs-T line chart, one series per discount factor, as plain SVG.

use std::fmt::Write;
use std::path::Path;

use super::{fmt_float, Summary};
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Coordinates in SVG are written with two decimals.
fn c(x: f64) -> String {
    format!("{x:.2}")
}

struct Axis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Axis { lo, hi, from, to }
    }

    fn map(&self, x: f64) -> f64 {
        self.from + (x - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

pub fn render_chart_svg(summaries: &[Summary]) -> Result<String> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::invalid("no summaries to chart"))?;
    if summaries
        .iter()
        .any(|s| s.seller != first.seller || s.buyer != first.buyer)
    {
        return Err(Error::invalid("chart summaries mix seller/buyer pairs"));
    }

    let mut gammas: Vec<f64> = Vec::new();
    for s in summaries {
        if !gammas.contains(&s.gamma) {
            gammas.push(s.gamma);
        }
    }
    gammas.sort_by(f64::total_cmp);

    let xs = summaries.iter().map(|s| s.horizon as f64);
    let ys = summaries.iter().map(|s| s.regret.mean);
    let x_axis = Axis::new(
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
        LEFT,
        WIDTH - RIGHT,
    );
    let y_axis = Axis::new(
        ys.clone().fold(0.0, f64::min),
        ys.fold(0.0, f64::max),
        HEIGHT - BOTTOM,
        TOP,
    );

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        WIDTH, HEIGHT, WIDTH, HEIGHT
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle">{} vs {}</text>"#,
        c((LEFT + WIDTH - RIGHT) / 2.0),
        escape(&first.seller),
        escape(&first.buyer)
    );

    // axes
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        c(x0), c(y0), c(x1), c(y0)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        c(x0), c(y0), c(x0), c(y1)
    );
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x_axis.lo + f * (x_axis.hi - x_axis.lo);
        let yv = y_axis.lo + f * (y_axis.hi - y_axis.lo);
        let (xp, yp) = (x_axis.map(xv), y_axis.map(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/><text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            c(xp), c(y0), c(xp), c(y0 + 5.0), c(xp), c(y0 + 18.0), tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{}</text>"#,
            c(x0 - 5.0), c(yp), c(x0), c(yp), c(x0 - 8.0), c(yp + 4.0), tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">T</text>"#,
        c((x0 + x1) / 2.0),
        c(HEIGHT - 12.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">regret</text>"#,
        c((y0 + y1) / 2.0),
        c((y0 + y1) / 2.0)
    );

    for (i, gamma) in gammas.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = summaries
            .iter()
            .filter(|s| s.gamma == *gamma)
            .map(|s| (s.horizon as f64, s.regret.mean))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.len() > 1 {
            let coords: Vec<String> = pts
                .iter()
                .map(|(x, y)| format!("{},{}", c(x_axis.map(*x)), c(y_axis.map(*y))))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                coords.join(" ")
            );
        }
        for (x, y) in &pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                c(x_axis.map(*x)),
                c(y_axis.map(*y))
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">gamma={}</text>"#,
            c(lx), c(ly), c(lx + 20.0), c(ly), c(lx + 26.0), c(ly + 4.0), fmt_float(*gamma)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick_label(v: f64) -> String {
    let r: f64 = format!("{v:.3e}").parse().expect("float parses");
    fmt_float(r)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_chart(summaries: &[Summary], path: &Path) -> Result<()> {
    let svg = render_chart_svg(summaries)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
