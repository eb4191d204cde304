//! Self-contained SVG charts: inline styles only, no scripts or external assets.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" style="font-family:sans-serif;font-size:11px">"##
    );
    let _ = write!(s, r##"<rect width="{w}" height="{h}" fill="white"/>"##);
    let _ = write!(
        s,
        r##"<text x="{}" y="18" text-anchor="middle" style="font-size:14px;font-weight:bold">{}</text>"##,
        w / 2.0,
        escape(title)
    );
    s
}

/// Horizontal bars with value labels.
pub fn bar_chart(title: &str, bars: &[(String, f64)], unit: &str) -> String {
    let (left, bar_h, gap, width) = (150.0, 18.0, 6.0, 420.0);
    let h = 40.0 + bars.len() as f64 * (bar_h + gap) + 10.0;
    let w = left + width + 80.0;
    let max = bars.iter().map(|b| b.1).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut s = open(w, h, title);
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = 32.0 + i as f64 * (bar_h + gap);
        let len = width * v / max;
        let _ = write!(
            s,
            r##"<text x="{}" y="{}" text-anchor="end">{}</text><rect x="{left}" y="{y}" width="{len:.2}" height="{bar_h}" fill="{}"/><text x="{}" y="{}">{v:.1}{}</text>"##,
            left - 6.0,
            y + 13.0,
            escape(label),
            PALETTE[i % PALETTE.len()],
            left + len + 4.0,
            y + 13.0,
            escape(unit)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One polyline per series over a shared x axis; y is clamped to [0, 1].
pub fn line_chart(title: &str, xs: &[f64], series: &[(String, Vec<f64>)], x_label: &str) -> String {
    let (left, top, pw, ph) = (50.0, 30.0, 560.0, 300.0);
    let legend_w = 120.0;
    let w = left + pw + legend_w + 20.0;
    let h = top + ph + 50.0;
    let mut s = open(w, h, title);
    let (x0, x1) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a, a + 1.0),
        _ => (0.0, 1.0),
    };
    let px = |x: f64| left + pw * (x - x0) / (x1 - x0);
    let py = |y: f64| top + ph * (1.0 - y.clamp(0.0, 1.0));
    let _ = write!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>"##
    );
    for k in 0..=4 {
        let y = k as f64 / 4.0;
        let _ = write!(
            s,
            r##"<line x1="{left}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="#eee"/><text x="{}" y="{:.2}" text-anchor="end">{y:.2}</text>"##,
            left + pw,
            py(y),
            py(y),
            left - 4.0,
            py(y) + 4.0
        );
    }
    let _ = write!(
        s,
        r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##,
        left + pw / 2.0,
        top + ph + 30.0,
        escape(x_label)
    );
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = write!(
            s,
            r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
        let ly = top + 10.0 + i as f64 * 14.0;
        let _ = write!(
            s,
            r##"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"##,
            left + pw + 10.0,
            ly - 9.0,
            left + pw + 24.0,
            ly,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Grid of cells shaded by value relative to the maximum.
pub fn heatmap(title: &str, rows: &[String], cols: &[String], cells: &[Vec<f64>]) -> String {
    let cell = 16.0;
    let (left, top) = (160.0, 120.0);
    let w = left + cols.len() as f64 * cell + 20.0;
    let h = top + rows.len() as f64 * cell + 20.0;
    let max = cells.iter().flatten().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut s = open(w, h, title);
    for (j, c) in cols.iter().enumerate() {
        let x = left + j as f64 * cell + cell / 2.0;
        let _ = write!(
            s,
            r##"<text transform="translate({x:.1},{}) rotate(-60)" >{}</text>"##,
            top - 4.0,
            escape(c)
        );
    }
    for (i, r) in rows.iter().enumerate() {
        let y = top + i as f64 * cell;
        let _ = write!(
            s,
            r##"<text x="{}" y="{}" text-anchor="end">{}</text>"##,
            left - 4.0,
            y + 12.0,
            escape(r)
        );
        for (j, v) in cells[i].iter().enumerate() {
            let t = v / max;
            // white to dark blue
            let shade = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
            let _ = write!(
                s,
                r##"<rect x="{}" y="{y}" width="{cell}" height="{cell}" fill="rgb({},{},{})" stroke="#fff"><title>{}</title></rect>"##,
                left + j as f64 * cell,
                shade(255.0, 8.0),
                shade(255.0, 48.0),
                shade(255.0, 107.0),
                v
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
