//! Minimal SVG error-bar charts of a sweep: mean ± one standard deviation of
//! the certified `R∥` against `n` for each degree (left panel) and against
//! `k` for each size (right panel).

use std::collections::BTreeMap;
use std::fmt::Write;

use super::sweep::CellSummary;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

struct Series {
    label: String,
    /// (x, mean, std)
    points: Vec<(f64, f64, f64)>,
}

fn series_by<F, G>(cells: &[CellSummary], key: F, x: G, prefix: &str) -> Vec<Series>
where
    F: Fn(&CellSummary) -> usize,
    G: Fn(&CellSummary) -> usize,
{
    let mut groups: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for c in cells {
        groups
            .entry(key(c))
            .or_default()
            .push((x(c) as f64, c.mean_r_par, c.std_r_par));
    }
    groups
        .into_iter()
        .map(|(k, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("{prefix} = {k}"),
                points,
            }
        })
        .collect()
}

fn panel(out: &mut String, x0: f64, title: &str, x_label: &str, series: &[Series]) {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut xmin, mut xmax, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, m, s) in pts {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymax = ymax.max(m + s);
    }
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
    }
    if xmax == xmin {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if ymax <= 0.0 {
        ymax = 1.0;
    }
    ymax *= 1.1;
    let plot_w = PANEL_W - 2.0 * MARGIN;
    let plot_h = PANEL_H - 2.0 * MARGIN;
    let sx = |x: f64| x0 + MARGIN + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| MARGIN + plot_h - y / ymax * plot_h;

    let (left, bottom, right) = (x0 + MARGIN, MARGIN + plot_h, x0 + MARGIN + plot_w);
    let _ = writeln!(out, r#"<text x="{:.1}" y="25" text-anchor="middle" font-size="14">{title}</text>"#, x0 + PANEL_W / 2.0);
    let _ = writeln!(out, r#"<line x1="{left:.1}" y1="{bottom:.1}" x2="{right:.1}" y2="{bottom:.1}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{left:.1}" y1="{MARGIN:.1}" x2="{left:.1}" y2="{bottom:.1}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{x_label}</text>"#, (left + right) / 2.0, bottom + 35.0);
    for i in 0..=4 {
        let y = ymax * i as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{y:.3}</text>"#, left - 5.0, sy(y) + 3.0);
    }
    let mut ticks: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{x}</text>"#, sx(x), bottom + 15.0);
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, m, _)| format!("{:.1},{:.1}", sx(x), sy(m))).collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, path.join(" "));
        for &(x, m, sd) in &s.points {
            let (px, lo, hi) = (sx(x), sy((m - sd).max(0.0)), sy(m + sd));
            let _ = writeln!(out, r#"<line x1="{px:.1}" y1="{lo:.1}" x2="{px:.1}" y2="{hi:.1}" stroke="{color}"/>"#);
            let _ = writeln!(out, r#"<circle cx="{px:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, sy(m));
        }
        let ly = MARGIN + 12.0 * i as f64;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{ly:.1}" font-size="10" fill="{color}">{}</text>"#, right - 60.0, s.label);
    }
}

/// Renders both layouts side by side.
pub fn render_sweep_svg(cells: &[CellSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{PANEL_H}" font-family="sans-serif">"#,
        2.0 * PANEL_W
    );
    panel(&mut out, 0.0, "certified R_par, fixed degree", "n", &series_by(cells, |c| c.k, |c| c.n, "k"));
    panel(&mut out, PANEL_W, "certified R_par, fixed size", "k", &series_by(cells, |c| c.n, |c| c.k, "n"));
    out.push_str("</svg>\n");
    out
}
