//! Self-contained SVG log-log plots of rate tables.

use std::fmt::Write as _;

use dgsemi_core::harness::{RateTable, RATE_MEASURES};

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, h: f64) -> f64 {
        let t = (h.log10() - self.x.0) / (self.x.1 - self.x.0);
        MARGIN + t * (W - 2.0 * MARGIN)
    }

    fn py(&self, e: f64) -> f64 {
        let t = (e.log10() - self.y.0) / (self.y.1 - self.y.0);
        H - MARGIN - t * (H - 2.0 * MARGIN)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::log10)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = 0.05 * (hi - lo).max(0.5);
    (lo - pad, hi + pad)
}

/// Error measures against `h_max`, with slope-`k` and slope-`k+1` guides.
pub fn rate_plot(table: &RateTable, k: usize, title: &str) -> String {
    let rows = &table.rows;
    let axes = Axes {
        x: range(rows.iter().map(|r| r.h_max)),
        y: range(rows.iter().flat_map(|r| r.measures())),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#,
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">error</text>"#,
        H / 2.0,
        H / 2.0
    );
    for r in rows {
        let x = axes.px(r.h_max);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            y1 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{:.3e}</text>"#,
            y1 + 18.0,
            r.h_max
        );
    }
    for d in (axes.y.0.ceil() as i32)..=(axes.y.1.floor() as i32) {
        let y = axes.py(10f64.powi(d));
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }

    for (m, name) in RATE_MEASURES.iter().enumerate() {
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| r.measures()[m] > 0.0)
            .map(|r| format!("{:.2},{:.2}", axes.px(r.h_max), axes.py(r.measures()[m])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="measure" data-name="{name}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            pts.join(" "),
            COLORS[m]
        );
        let ly = y0 + 16.0 + 16.0 * m as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#,
            x0 + 10.0,
            x0 + 30.0,
            COLORS[m]
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, x0 + 36.0, ly + 4.0);
    }

    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        for (slope, anchor) in [(k as f64, first.enorm_err), ((k + 1) as f64, first.l2_err)] {
            if anchor.is_nan() || anchor <= 0.0 {
                continue;
            }
            // guide through the coarse-level value, offset below the data
            let e0 = anchor * 0.5;
            let e1 = e0 * (last.h_max / first.h_max).powf(slope);
            let (xa, ya, xb, yb) = (axes.px(first.h_max), axes.py(e0), axes.px(last.h_max), axes.py(e1));
            let _ = writeln!(
                s,
                r#"<line class="reference" x1="{xa:.2}" y1="{ya:.2}" x2="{xb:.2}" y2="{yb:.2}" stroke="gray" stroke-dasharray="6 4"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" fill="gray">slope {slope}</text>"#,
                xb + 4.0,
                yb + 14.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
