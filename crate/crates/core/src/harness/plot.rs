use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::{ExperimentKind, ResultsTable};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Series key: everything about a cell except `m`, plus the metric name.
type SeriesKey = (usize, u64, usize, usize, String);

/// SVG with one polyline per (n, p, capacity range, metric): x is `m`, y is
/// the mean maximal percentage utility gain.
pub fn plot_svg(table: &ResultsTable) -> Result<String> {
    if table.kind != ExperimentKind::MpugCurve {
        return Err(Error::InvalidConfig(format!(
            "plots need an mpug-curve table, got {}",
            table.kind
        )));
    }
    let mut series: BTreeMap<SeriesKey, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &table.rows {
        let c = &row.cell;
        for m in row.metrics.iter().filter(|m| m.name.starts_with("mpug")) {
            series
                .entry((c.n, c.p.to_bits(), c.b_low, c.b_high, m.name.clone()))
                .or_default()
                .push((c.m as f64, m.value));
        }
    }
    if series.is_empty() {
        return Err(Error::InvalidConfig(
            "table has no mpug metric to plot".into(),
        ));
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let vary = |f: fn(&SeriesKey) -> String| {
        let mut seen: Vec<String> = series.keys().map(f).collect();
        seen.dedup();
        seen.sort();
        seen.dedup();
        seen.len() > 1
    };
    let show_p = vary(|k| f64::from_bits(k.1).to_string());
    let show_b = vary(|k| format!("{}-{}", k.2, k.3));
    let show_metric = vary(|k| k.4.clone());

    let all = series.values().flatten();
    let (x_lo, x_hi) = all
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let y_hi = all.map(|p| p.1).fold(0.0, f64::max);
    let y_hi = if y_hi > 0.0 { y_hi * 1.05 } else { 1.0 };
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / x_span * plot_w;
    let sy = |y: f64| TOP + plot_h - y / y_hi * plot_h;

    let mut s = String::new();
    let w = &mut s;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    let (x0, y0, x1, y1) = (LEFT, TOP + plot_h, LEFT + plot_w, TOP);
    writeln!(
        w,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let mut xs: Vec<f64> = series.values().flatten().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let px = sx(x);
        writeln!(
            w,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        )
        .unwrap();
    }
    for k in 0..=4 {
        let y = y_hi * k as f64 / 4.0;
        let py = sy(y);
        writeln!(
            w,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">number of tasks m</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">mean MPUG</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();
    for (i, (key, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let mut label = format!("n={}", key.0);
        if show_p {
            write!(label, " p={}", f64::from_bits(key.1)).unwrap();
        }
        if show_b {
            write!(label, " b={}-{}", key.2, key.3).unwrap();
        }
        if show_metric {
            write!(label, " {}", key.4).unwrap();
        }
        writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        let ly = TOP + 10.0 + 18.0 * i as f64;
        writeln!(
            w,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            x1 + 15.0,
            x1 + 35.0,
            x1 + 40.0,
            ly + 4.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_plot(table: &ResultsTable, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, plot_svg(table)?)?;
    Ok(())
}
