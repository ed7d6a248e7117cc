//! CSV, JSON and SVG emission. Every file starts with the config hash and
//! the seed so that a result can be traced back to its inputs.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use fracbif_core::bifurcation::BifurcationDiagram;
use serde_json::Value;

use crate::config::RunConfig;

/// 17 significant digits: enough to round-trip every `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(kind: &str, cfg: &RunConfig, columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# fracbif {kind}");
        let _ = writeln!(text, "# config_sha256 = {}", cfg.hash());
        let _ = writeln!(text, "# seed = {}", cfg.seed());
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text, columns: columns.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "CSV row width");
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Wraps `body` in the common record header.
pub fn record(command: &str, cfg: &RunConfig, body: Value) -> Value {
    serde_json::json!({
        "command": command,
        "config_sha256": cfg.hash(),
        "seed": cfg.seed(),
        "config": cfg.canonical().lines().collect::<Vec<_>>(),
        "result": body,
    })
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> io::Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    write(dir, name, &text)
}

/// Round step of the form `{1, 2, 5} × 10^k` giving about `target` ticks.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo, 6.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Sup-norms of both branches against λ, with the bisection bracket shaded
/// and the continuation fold dashed.
pub fn branch_svg(diagram: &BifurcationDiagram, cfg: &RunConfig) -> String {
    let star = &diagram.lambda_star;
    let xs = diagram.points.iter().map(|p| p.lambda).chain([star.lower, star.estimate]);
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let y_hi = diagram
        .points
        .iter()
        .map(|p| p.diagnostics.sup_u.max(p.diagnostics.sup_v.unwrap_or(0.0)))
        .fold(0.0_f64, f64::max)
        .max(1e-3)
        * 1.08;
    let pad = 0.03 * (x_hi - x_lo).max(1e-9);
    let (x_lo, x_hi) = (x_lo - pad, x_hi + pad);
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - y / y_hi * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<desc>config_sha256 = {}; seed = {}</desc>", cfg.hash(), cfg.seed());
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);

    let (b0, b1) = (px(star.lower), px(star.estimate));
    let _ = writeln!(
        s,
        r##"<rect id="lambda-star-bracket" x="{:.2}" y="{TOP}" width="{:.2}" height="{:.2}" fill="#f4c7a1" opacity="0.6"><title>lambda* in [{}, {}]</title></rect>"##,
        b0,
        (b1 - b0).max(1.0),
        H - TOP - BOTTOM,
        num(star.lower),
        num(star.estimate)
    );
    if let Some(fold) = &diagram.fold {
        let x = px(fold.estimate);
        let _ = writeln!(
            s,
            r##"<line id="fold" x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#b05a00" stroke-dasharray="5,4"><title>continuation fold {}</title></line>"##,
            H - BOTTOM,
            num(fold.estimate)
        );
    }

    // Axes and ticks.
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    for t in ticks(x_lo, x_hi) {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0,
            H - BOTTOM + 19.0,
            label(t)
        );
    }
    for t in ticks(0.0, y_hi) {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            label(t)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">lambda</text>"#, (LEFT + W - RIGHT) / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">sup norm</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0
    );

    let line = |pts: &[(f64, f64)]| -> String {
        pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect::<Vec<_>>().join(" ")
    };
    let upper: Vec<(f64, f64)> =
        diagram.points.iter().filter(|p| p.has_solution()).map(|p| (p.lambda, p.diagnostics.sup_u)).collect();
    let lower: Vec<(f64, f64)> =
        diagram.points.iter().filter_map(|p| p.diagnostics.sup_v.map(|v| (p.lambda, v))).collect();
    let _ = writeln!(s, r##"<polyline id="u-big" points="{}" fill="none" stroke="#1f4e9c" stroke-width="2"/>"##, line(&upper));
    let _ = writeln!(
        s,
        r##"<polyline id="v-saddle" points="{}" fill="none" stroke="#2e8b57" stroke-width="2" stroke-dasharray="6,3"/>"##,
        line(&lower)
    );

    for (k, p) in diagram.points.iter().enumerate() {
        let d = &p.diagnostics;
        let _ = writeln!(
            s,
            r##"<circle class="branch-point" data-index="{k}" cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"><title>lambda = {}, sup_u = {}</title></circle>"##,
            px(p.lambda),
            py(d.sup_u),
            if p.has_solution() { "#1f4e9c" } else { "#999999" },
            num(p.lambda),
            num(d.sup_u)
        );
        if let Some(v) = d.sup_v {
            let _ = writeln!(
                s,
                r##"<circle class="saddle-point" data-index="{k}" cx="{:.2}" cy="{:.2}" r="3" fill="#2e8b57"><title>lambda = {}, sup_v = {}</title></circle>"##,
                px(p.lambda),
                py(v),
                num(p.lambda),
                num(v)
            );
        }
    }

    let lx = W - RIGHT - 190.0;
    let _ = writeln!(
        s,
        r##"<g id="legend"><line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="#1f4e9c" stroke-width="2"/><text x="{}" y="{}">biggest solution</text><line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="#2e8b57" stroke-width="2" stroke-dasharray="6,3"/><text x="{}" y="{}">mountain-pass solution</text></g>"##,
        TOP + 10.0,
        lx + 24.0,
        TOP + 10.0,
        lx + 30.0,
        TOP + 14.0,
        TOP + 28.0,
        lx + 24.0,
        TOP + 28.0,
        lx + 30.0,
        TOP + 32.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_width_numbers() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.1), "-1.0000000000000001e-1");
        assert_eq!(opt(None), "");
        let v = std::f64::consts::TAU * 1.000_000_1;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn ticks_are_round_and_cover_the_range() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(4.7, 16.3);
        assert_eq!(t.first(), Some(&6.0));
        assert_eq!(t.last(), Some(&16.0));
        assert_eq!(label(0.30000000000000004), "0.3");
        assert_eq!(label(12.0), "12");
    }
}
