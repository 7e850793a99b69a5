// SPDX-License-Identifier: Apache-2.0

//! Minimal self-contained SVG bar chart of recovery probabilities.

use std::collections::BTreeSet;
use std::fmt::Write;

use anyhow::{bail, Result};
use subgraph_recovery::{Strategy, Summary};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn colour(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::Atomic => "#8da0cb",
        Strategy::Composite => "#fc8d62",
    }
}

/// One bar per strategy, or with `by_order` one group of bars per graph
/// order. Bar heights are the probabilities on a fixed 0..1 axis.
pub fn render(summary: &Summary, by_order: bool) -> Result<String> {
    if summary.strategies.is_empty() {
        bail!("summary contains no strategies");
    }
    let groups: Vec<(String, Vec<(Strategy, f64)>)> = if by_order {
        let orders: BTreeSet<usize> = summary.strategies.iter().flat_map(|s| s.by_order.keys().copied()).collect();
        if orders.is_empty() {
            bail!("summary contains no per-order results");
        }
        orders
            .into_iter()
            .map(|o| {
                let bars = summary
                    .strategies
                    .iter()
                    .map(|s| (s.strategy, s.by_order.get(&o).copied().unwrap_or(0.0)))
                    .collect();
                (o.to_string(), bars)
            })
            .collect()
    } else {
        vec![("all".into(), summary.strategies.iter().map(|s| (s.strategy, s.mean)).collect())]
    };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let base = TOP + plot_h;
    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#)?;
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    for k in 0..=5 {
        let v = f64::from(k) / 5.0;
        let y = base - v * plot_h;
        writeln!(w, r##"<line x1="{LEFT}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="#ddd"/>"##, WIDTH - RIGHT)?;
        writeln!(w, r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{v:.1}</text>"#, LEFT - 6.0, y + 4.0)?;
    }
    writeln!(w, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="black"/>"#)?;
    writeln!(w, r#"<line x1="{LEFT}" y1="{base}" x2="{:.3}" y2="{base}" stroke="black"/>"#, WIDTH - RIGHT)?;
    writeln!(
        w,
        r#"<text class="axis-label" transform="translate(18 {:.3}) rotate(-90)" text-anchor="middle">Recovery Probability</text>"#,
        TOP + plot_h / 2.0
    )?;
    if by_order {
        writeln!(w, r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">Graph order</text>"#, LEFT + plot_w / 2.0, HEIGHT - 15.0)?;
    }

    let slot = plot_w / groups.len() as f64;
    for (g, (label, bars)) in groups.iter().enumerate() {
        let bar_w = slot * 0.7 / bars.len() as f64;
        let x0 = LEFT + slot * g as f64 + slot * 0.15;
        for (b, &(strategy, value)) in bars.iter().enumerate() {
            let h = value.clamp(0.0, 1.0) * plot_h;
            let x = x0 + bar_w * b as f64;
            writeln!(
                w,
                r#"<rect class="bar" data-strategy="{strategy}" data-group="{label}" data-value="{value}" x="{x:.3}" y="{:.3}" width="{:.3}" height="{h:.3}" fill="{}"/>"#,
                base - h,
                bar_w * 0.92,
                colour(strategy),
            )?;
            writeln!(w, r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" font-size="10">{value:.2}</text>"#, x + bar_w * 0.46, base - h - 4.0)?;
        }
        if by_order {
            writeln!(w, r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{label}</text>"#, x0 + slot * 0.35, base + 18.0)?;
        }
    }

    let strategies: Vec<Strategy> = summary.strategies.iter().map(|s| s.strategy).collect();
    for (k, s) in strategies.iter().enumerate() {
        let y = TOP - 26.0 + 14.0 * k as f64;
        let x = WIDTH - RIGHT - 110.0;
        writeln!(w, r#"<rect x="{x}" y="{y}" width="10" height="10" fill="{}"/>"#, colour(*s))?;
        writeln!(w, r#"<text x="{}" y="{}">{s}</text>"#, x + 14.0, y + 9.0)?;
    }
    writeln!(w, "</svg>")?;
    Ok(svg)
}
