//! Fixed-template bar chart of histogram counts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

/// One `<rect>` per bin and a dashed horizontal line at `reference`.
pub fn bar_chart(title: &str, counts: &[usize], reference: f64) -> String {
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let top = counts.iter().copied().max().unwrap_or(0) as f64;
    let y_max = (top.max(reference) * 1.1).max(1.0);
    let y = |v: f64| HEIGHT - MARGIN - v / y_max * plot_h;
    let bar_w = plot_w / counts.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"  <text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    for (k, &c) in counts.iter().enumerate() {
        let x = MARGIN + k as f64 * bar_w;
        let top = y(c as f64);
        let _ = writeln!(
            s,
            r##"  <rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#4c78a8" stroke="#ffffff"/>"##,
            bar_w,
            HEIGHT - MARGIN - top
        );
    }
    let base = HEIGHT - MARGIN;
    let _ = writeln!(
        s,
        r##"  <line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="#000000"/>"##,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r##"  <line x1="{MARGIN}" y1="{base}" x2="{MARGIN}" y2="{MARGIN}" stroke="#000000"/>"##
    );
    let r = y(reference);
    let _ = writeln!(
        s,
        r##"  <line x1="{MARGIN}" y1="{r:.2}" x2="{}" y2="{r:.2}" stroke="#e45756" stroke-dasharray="6 4"/>"##,
        WIDTH - MARGIN
    );
    for (label, x) in [("0", MARGIN), ("1", WIDTH - MARGIN)] {
        let _ = writeln!(
            s,
            r#"  <text x="{x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{label}</text>"#,
            base + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"  <text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="12">{}</text>"#,
        MARGIN - 4.0,
        r + 4.0,
        reference
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
