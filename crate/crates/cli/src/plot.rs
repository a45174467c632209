//! Static SVG of the flat and biased score curves.

use std::fmt::Write;

use tacsum_core::model::Partition;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 32.0;

fn polyline(values: &[f64], x: impl Fn(usize) -> f64, y: impl Fn(f64) -> f64, stroke: &str, dash: &str) -> String {
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v)))
        .collect();
    format!(
        r#"<polyline fill="none" stroke="{stroke}" stroke-width="1.5"{dash} points="{}"/>"#,
        points.join(" ")
    )
}

/// Flat scores (dashed), biased scores (solid), partition boundaries (grey)
/// and keyframes (red dots), all over the sample axis.
pub fn score_plot(flat: &[f64], scores: &[f64], keyframes: &[usize], partitions: &[Partition]) -> String {
    let n = scores.len().max(2);
    let top = scores.iter().chain(flat).cloned().fold(0.0f64, f64::max).max(1e-12);
    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v / top;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for p in partitions.iter().skip(1) {
        let px = x(p.start);
        writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{MARGIN}" x2="{px:.2}" y2="{:.2}" stroke="#bbbbbb"/>"##,
            HEIGHT - MARGIN
        )
        .unwrap();
    }
    writeln!(svg, "{}", polyline(flat, x, y, "#4477aa", r#" stroke-dasharray="4 3""#)).unwrap();
    writeln!(svg, "{}", polyline(scores, x, y, "#222222", "")).unwrap();
    for &k in keyframes {
        writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#cc3311"/>"##, x(k), y(scores[k])).unwrap();
    }
    writeln!(
        svg,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="12">max score {top:.3}</text>"#
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}
