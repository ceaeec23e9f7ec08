//! Minimal SVG line charts and heatmaps.

use std::fmt::Write;

use grokbench_core::Mat;

use crate::io::Table;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of `ys` against `xs`; non-finite points break the line.
/// Log scale drops non-positive values.
pub fn line_chart(title: &str, x_label: &str, xs: &[f64], ys: &[f64], log_y: bool) -> String {
    let keep = |y: f64| y.is_finite() && (!log_y || y > 0.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, &y)| keep(y)).map(|(&x, &y)| (x, ty(y))).collect();

    let (mut x0, mut x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 = x0 + 1.0;
    }
    let (mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if pts.is_empty() {
        (y0, y1) = (0.0, 1.0);
    } else if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let scale = if log_y { " (log scale)" } else { "" };
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}{scale}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let yv = y0 + f * (y1 - y0);
        let label = if log_y { fmt_tick(10f64.powf(yv)) } else { fmt_tick(yv) };
        let y = py(yv);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"#, LEFT - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0);
        let xv = x0 + f * (x1 - x0);
        let x = px(xv);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, fmt_tick(xv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 8.0, escape(x_label));

    let mut segment: Vec<String> = Vec::new();
    let flush = |segment: &mut Vec<String>, s: &mut String| {
        if segment.len() > 1 {
            let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##, segment.join(" "));
        } else if let Some(p) = segment.first() {
            let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(s, r##"<circle cx="{x}" cy="{y}" r="2.5" fill="#1f5fa8"/>"##);
        }
        segment.clear();
    };
    for (&x, &y) in xs.iter().zip(ys) {
        if keep(y) {
            segment.push(format!("{:.2},{:.2}", px(x), py(ty(y))));
        } else {
            flush(&mut segment, &mut s);
        }
    }
    flush(&mut segment, &mut s);
    s.push_str("</svg>\n");
    s
}

/// One chart per non-`iter` column: `(column name, svg)`.
pub fn history_charts(table: &Table) -> Vec<(String, String)> {
    let xs = table
        .column("iter")
        .unwrap_or_else(|| (0..table.rows.len()).map(|i| i as f64).collect());
    table
        .columns
        .iter()
        .filter(|c| c.as_str() != "iter")
        .map(|c| {
            let ys = table.column(c).expect("listed column");
            (c.clone(), line_chart(c, "iteration", &xs, &ys, c.contains("loss")))
        })
        .collect()
}

/// Grayscale heatmap, black at the maximum. With `hide_diagonal` the
/// diagonal is drawn in a neutral color and left out of the color range.
pub fn heatmap(title: &str, m: &Mat, hide_diagonal: bool) -> String {
    let (r, c) = (m.rows(), m.cols());
    let skip = |i: usize, j: usize| hide_diagonal && i == j;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..r {
        for j in 0..c {
            let v = m[(i, j)];
            if !skip(i, j) && v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if !(hi > lo) {
        lo = if lo.is_finite() { lo - 0.5 } else { 0.0 };
        hi = lo + 1.0;
    }
    let cell = (480.0 / r.max(c).max(1) as f64).max(1.0);
    let (w, h) = (cell * c as f64, cell * r as f64 + 28.0);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}" font-family="sans-serif" font-size="12" shape-rendering="crispEdges">"#);
    let _ = writeln!(s, r#"<rect width="{w:.2}" height="{h:.2}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="18" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    for i in 0..r {
        for j in 0..c {
            let v = m[(i, j)];
            let fill = if skip(i, j) || !v.is_finite() {
                "#d08080".to_string()
            } else {
                let g = (255.0 * (1.0 - (v - lo) / (hi - lo))).round().clamp(0.0, 255.0) as u8;
                format!("#{g:02x}{g:02x}{g:02x}")
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{fill}"/>"#,
                j as f64 * cell,
                28.0 + i as f64 * cell
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_chart_skips_nonpositive_and_nan() {
        let svg = line_chart("test_loss", "iteration", &[1.0, 2.0, 3.0, 4.0], &[1.0, f64::NAN, 0.1, 0.01], true);
        assert!(svg.contains("(log scale)"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn heatmap_has_one_rect_per_cell() {
        let m = Mat::from_fn(3, 3, |i, j| (i + j) as f64);
        let svg = heatmap("M", &m, true);
        assert_eq!(svg.matches("<rect").count(), 1 + 9);
        assert_eq!(svg.matches("#d08080").count(), 3);
    }
}
