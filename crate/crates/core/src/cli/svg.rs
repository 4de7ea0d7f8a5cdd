//! Minimal self-contained SVG line and bar charts.

use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 15.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Dashed,
    /// Histogram bars centred on the points, of the given width.
    Bars(f64),
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn line(label: &str, color: &'static str, x: &[f64], y: &[f64]) -> Self {
        Self {
            label: label.into(),
            color,
            style: Style::Line,
            points: x.iter().copied().zip(y.iter().copied()).collect(),
        }
    }

    pub fn dashed(label: &str, color: &'static str, x: &[f64], y: &[f64]) -> Self {
        Self {
            style: Style::Dashed,
            ..Self::line(label, color, x, y)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(out: &mut String, p: &Panel, x0: f64) {
    let (xmin, xmax) = range(p.series.iter().flat_map(|s| {
        let half = if let Style::Bars(w) = s.style { w / 2.0 } else { 0.0 };
        s.points.iter().flat_map(move |q| [q.0 - half, q.0 + half])
    }));
    let (mut ymin, ymax) = range(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)));
    if p.series.iter().any(|s| matches!(s.style, Style::Bars(_))) {
        ymin = ymin.min(0.0);
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| x0 + LEFT + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| TOP + (ymax - y) / (ymax - ymin) * ph;

    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##,
        x0 + LEFT
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        x0 + LEFT + pw / 2.0,
        escape(&p.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
        x0 + LEFT + pw / 2.0,
        H - 8.0,
        escape(&p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        x0 + 14.0,
        TOP + ph / 2.0,
        x0 + 14.0,
        TOP + ph / 2.0,
        escape(&p.y_label)
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = xmin + t * (xmax - xmin);
        let yv = ymin + t * (ymax - ymin);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{:.3}</text>"#,
            sx(xv),
            TOP + ph + 14.0,
            xv
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{:.3}</text>"#,
            x0 + LEFT - 4.0,
            sy(yv) + 3.0,
            yv
        );
    }
    for (k, s) in p.series.iter().enumerate() {
        match s.style {
            Style::Bars(w) => {
                for &(x, y) in s.points.iter().filter(|q| q.0.is_finite() && q.1.is_finite()) {
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.35"/>"#,
                        sx(x - w / 2.0),
                        sy(y.max(0.0)),
                        sx(x + w / 2.0) - sx(x - w / 2.0),
                        sy(0.0) - sy(y.max(0.0)),
                        s.color
                    );
                }
            }
            Style::Line | Style::Dashed => {
                let mut d = String::new();
                let mut pen = false;
                for &(x, y) in &s.points {
                    if x.is_finite() && y.is_finite() {
                        let _ = write!(d, "{}{:.2} {:.2} ", if pen { "L" } else { "M" }, sx(x), sy(y));
                        pen = true;
                    } else {
                        pen = false;
                    }
                }
                if !d.is_empty() {
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="5 3""# } else { "" };
                    let _ = writeln!(
                        out,
                        r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                        d.trim_end(),
                        s.color
                    );
                }
            }
        }
        let ly = TOP + 12.0 + 13.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="10" fill="{}">{}</text>"#,
            x0 + LEFT + 6.0,
            s.color,
            escape(&s.label)
        );
    }
}

/// Panels side by side.
pub fn render(panels: &[Panel]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{H:.0}" viewBox="0 0 {:.0} {H:.0}" font-family="sans-serif">"#,
        W * panels.len() as f64,
        W * panels.len() as f64
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        panel(&mut out, p, W * i as f64);
    }
    out.push_str("</svg>\n");
    out
}
