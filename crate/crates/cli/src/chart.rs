//! Static SVG line charts of sweep aggregates.

use std::fmt::Write;

use crate::runner::SweepReport;

const WIDTH: f64 = 640.0;
const PANEL: f64 = 220.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const GAP: f64 = 60.0;

struct Panel<'a> {
    title: &'a str,
    ys: Vec<f64>,
    y_range: (f64, f64),
}

fn nice_range(ys: &[f64]) -> (f64, f64) {
    let hi = ys.iter().copied().fold(0.0, f64::max);
    if hi <= 0.0 {
        return (0.0, 1.0);
    }
    let mag = 10f64.powf(hi.log10().floor());
    (0.0, (hi / mag).ceil() * mag)
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn draw_panel(svg: &mut String, xs: &[f64], panel: &Panel, top: f64, x_name: &str) {
    let plot_w = WIDTH - LEFT - RIGHT;
    let (x0, x1) = (xs[0], *xs.last().unwrap());
    let xspan = if x1 > x0 { x1 - x0 } else { 1.0 };
    let (y0, y1) = panel.y_range;
    let px = |x: f64| LEFT + (x - x0) / xspan * plot_w;
    let py = |y: f64| top + PANEL - (y - y0) / (y1 - y0) * PANEL;
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{top}" width="{plot_w}" height="{PANEL}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="13">{}</text>"#, LEFT, top - 8.0, panel.title);
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{:.1}" x2="{LEFT}" y2="{:.1}" stroke="#444"/><text x="{}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
            LEFT - 4.0,
            py(y),
            py(y),
            LEFT - 6.0,
            py(y) + 3.0,
            label(y)
        );
    }
    for &x in xs {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
            px(x),
            top + PANEL + 14.0,
            label(x)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{x_name}</text>"#,
        LEFT + plot_w / 2.0,
        top + PANEL + 30.0
    );
    let pts: Vec<String> = xs.iter().zip(&panel.ys).map(|(&x, &y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
    let _ = writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##, pts.join(" "));
    for p in &pts {
        let (cx, cy) = p.split_once(',').unwrap();
        let _ = writeln!(svg, r##"<circle cx="{cx}" cy="{cy}" r="3" fill="#1f5fa8"/>"##);
    }
}

/// Success rate and mean query count against the swept value. Everything
/// drawn comes from the rows written to `sweep.csv`.
pub fn sweep_svg(report: &SweepReport) -> String {
    let xs: Vec<f64> = report.rows.iter().map(|r| r.value).collect();
    let rates: Vec<f64> = report.rows.iter().map(|r| r.success_rate).collect();
    let queries: Vec<f64> = report.rows.iter().map(|r| r.mean_queries).collect();
    let height = TOP + 2.0 * PANEL + GAP + 40.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif">"#
    );
    if !xs.is_empty() {
        let x_name = report.axis.to_string();
        let success = Panel { title: "exact recovery rate", ys: rates, y_range: (0.0, 1.0) };
        let range = nice_range(&queries);
        let cost = Panel { title: "mean queries", ys: queries, y_range: range };
        draw_panel(&mut svg, &xs, &success, TOP, &x_name);
        draw_panel(&mut svg, &xs, &cost, TOP + PANEL + GAP, &x_name);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_labels() {
        assert_eq!(nice_range(&[0.0, 3.2e6]), (0.0, 4e6));
        assert_eq!(nice_range(&[]), (0.0, 1.0));
        assert_eq!(label(0.5), "0.50");
        assert_eq!(label(4e6), "4.0e6");
    }
}
