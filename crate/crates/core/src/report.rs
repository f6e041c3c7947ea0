//! Artifact emission: CSV tables, JSON reports, provenance, and static SVG
//! log-log charts. All formatting is deterministic.

use std::fmt::Write as _;

/// One named curve for the log-log chart.
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 4] = ["#1f6fb2", "#c23b22", "#2e8b57", "#8a2be2"];

/// Renders a static log2-log2 line chart. Curves with nonpositive values are
/// dropped (nothing to plot on a log axis).
pub fn svg_loglog(title: &str, x_label: &str, y_label: &str, curves: &[Curve]) -> String {
    let (w, h) = (640.0, 440.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 55.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;

    let mut pts: Vec<(f64, f64)> = Vec::new();
    for c in curves {
        for &(x, y) in &c.points {
            if x > 0.0 && y > 0.0 {
                pts.push((x.log2(), y.log2()));
            }
        }
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        w / 2.0
    );
    if pts.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">all values degenerate (nothing to plot)</text>"#,
            w / 2.0,
            h / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if (x1 - x0).abs() < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (y1 - y0).abs() < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad_y = 0.06 * (y1 - y0);
    y0 -= pad_y;
    y1 += pad_y;
    let sx = move |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = move |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

    // Axes and integer log2 ticks.
    let _ = writeln!(
        svg,
        r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    let mut tick = x0.ceil() as i64;
    while (tick as f64) <= x1 {
        let px = sx(tick as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="#ccc"/>"##,
            mt,
            mt + ph
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">2^{tick}</text>"#,
            mt + ph + 16.0
        );
        tick += 1;
    }
    let mut tick = y0.ceil() as i64;
    while (tick as f64) <= y1 {
        let py = sy(tick as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{ml}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#eee"/>"##,
            ml + pw
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{py:.2}" text-anchor="end" font-family="sans-serif" font-size="11">2^{tick}</text>"#,
            ml - 6.0
        );
        tick += 1;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>"#,
        ml + pw / 2.0,
        h - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{y_label}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0
    );

    for (ci, c) in curves.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        let mut path = String::new();
        let mut markers = String::new();
        for &(x, y) in &c.points {
            if x <= 0.0 || y <= 0.0 {
                continue;
            }
            let (px, py) = (sx(x.log2()), sy(y.log2()));
            if path.is_empty() {
                let _ = write!(path, "M {px:.2} {py:.2}");
            } else {
                let _ = write!(path, " L {px:.2} {py:.2}");
            }
            let _ = writeln!(
                markers,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"#
            );
        }
        if !path.is_empty() {
            let _ = writeln!(
                svg,
                r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
            );
            svg.push_str(&markers);
        }
        let ly = mt + 16.0 + 16.0 * ci as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            ml + pw - 130.0,
            ml + pw - 110.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            ml + pw - 104.0,
            ly + 4.0,
            c.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Builds a CSV from a header and rows of preformatted cells.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Fixed scientific formatting used in every CSV cell.
pub fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}
