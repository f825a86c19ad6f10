//! Standalone SVG line plot of per-class profiles on a log y-axis.

use std::fmt::Write;

pub struct Series {
    pub name: String,
    pub color: String,
    pub mean: Vec<f64>,
    /// Half-width of the shaded band.
    pub band: Vec<f64>,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Decade range covering every positive mean and band bound.
fn log_range(series: &[Series]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in series {
        for (m, sd) in s.mean.iter().zip(&s.band) {
            for v in [*m, m + sd, m - sd] {
                if v > 0.0 && v.is_finite() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
    }
    if !lo.is_finite() {
        return (-8.0, 0.0);
    }
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a - 1.0, b + 1.0)
    } else {
        (a, b)
    }
}

pub fn profile_plot(series: &[Series], title: &str) -> String {
    let (d0, d1) = log_range(series);
    let len = series
        .iter()
        .map(|s| s.mean.len())
        .max()
        .unwrap_or(1)
        .max(2);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |i: usize| LEFT + pw * i as f64 / (len - 1) as f64;
    let py = |v: f64| {
        // non-positive values sit on the bottom axis
        let l = if v > 0.0 { v.log10().clamp(d0, d1) } else { d0 };
        TOP + ph * (d1 - l) / (d1 - d0)
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );

    // grid and y ticks
    let mut d = d0;
    while d <= d1 + 1e-9 {
        let y = py(10f64.powf(d));
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            W - RIGHT
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            d as i64
        );
        d += 1.0;
    }
    for q in 0..=4 {
        let i = (len - 1) * q / 4;
        let x = px(i);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{i}</text>"#,
            H - BOTTOM + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">frequency bin</text>"#,
        LEFT + pw / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">power (log scale)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for s in series {
        let color = escape(&s.color);
        let mut band = String::new();
        for (i, (m, sd)) in s.mean.iter().zip(&s.band).enumerate() {
            let _ = write!(band, "{:.2},{:.2} ", px(i), py(m + sd));
        }
        for (i, (m, sd)) in s.mean.iter().zip(&s.band).enumerate().rev() {
            let _ = write!(band, "{:.2},{:.2} ", px(i), py(m - sd));
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = s
            .mean
            .iter()
            .enumerate()
            .map(|(i, &m)| format!("{:.2},{:.2}", px(i), py(m)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
    }

    for (k, s) in series.iter().enumerate() {
        let y = TOP + 14.0 + 18.0 * k as f64;
        let x = W - RIGHT - 110.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="3"/>"#,
            x + 24.0,
            escape(&s.color)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 30.0,
            y + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_covers_decades() {
        let s = Series {
            name: "a".into(),
            color: "red".into(),
            mean: vec![1.0, 0.05, 0.002],
            band: vec![0.0, 0.01, 0.003],
        };
        assert_eq!(log_range(&[s]), (-3.0, 0.0));
    }

    #[test]
    fn names_are_escaped() {
        let s = Series {
            name: "a<b".into(),
            color: "red".into(),
            mean: vec![1.0, 0.5],
            band: vec![0.0, 0.1],
        };
        let svg = profile_plot(&[s], "t&t");
        assert!(svg.contains("a&lt;b") && svg.contains("t&amp;t"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
