//! SVG rendering of aggregated regret curves on a logarithmic time axis.

use std::fmt::Write;

use crate::harness::AggregateRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Mean curves with 5%-95% bands, one colour per policy.
pub fn regret_curve_svg(rows: &[AggregateRow], title: &str) -> String {
    let mut policies: Vec<&str> = Vec::new();
    for r in rows {
        if !policies.contains(&r.policy.as_str()) {
            policies.push(&r.policy);
        }
    }
    let x_max = rows.iter().map(|r| r.checkpoint).max().unwrap_or(10).max(10) as f64;
    let y_max = rows.iter().map(|r| r.q95.max(r.mean)).fold(0.0, f64::max).max(1e-9) * 1.05;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |c: f64| MARGIN_LEFT + plot_w * c.max(1.0).log10() / x_max.log10();
    let sy = |v: f64| MARGIN_TOP + plot_h * (1.0 - v / y_max);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    // Axes and ticks.
    let (x0, y0) = (MARGIN_LEFT, MARGIN_TOP + plot_h);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{MARGIN_TOP} L{x0},{y0} L{},{y0}" stroke="black" fill="none"/>"#,
        x0 + plot_w
    );
    let mut decade = 1.0;
    while decade <= x_max {
        let x = sx(decade);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{y0}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            decade.log10().round()
        );
        decade *= 10.0;
    }
    for i in 0..=5 {
        let v = y_max / 1.05 * i as f64 / 5.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">rounds</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">cumulative regret</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, policy) in policies.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let curve: Vec<&AggregateRow> = rows.iter().filter(|r| r.policy == *policy).collect();
        let mut band = String::new();
        for r in &curve {
            let _ = write!(band, "{:.2},{:.2} ", sx(r.checkpoint as f64), sy(r.q95));
        }
        for r in curve.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", sx(r.checkpoint as f64), sy(r.q05));
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = curve
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(r.checkpoint as f64), sy(r.mean)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = MARGIN_TOP + 20.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 25.0,
            lx + 30.0,
            ly + 4.0,
            escape(policy)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v >= 100.0 || v == 0.0 {
        format!("{v:.0}")
    } else if v >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
