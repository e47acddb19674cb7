//! Minimal deterministic SVG charts: per-element bars and log-scale
//! convergence curves.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;

const BAR: &str = "#4a78a8";
const ACCENT: &str = "#c0392b";
const GUIDE: &str = "#555555";

/// A horizontal reference line across the whole plot.
#[derive(Debug, Clone)]
pub struct Guide {
    pub value: f64,
    pub label: String,
    pub color: &'static str,
}

#[derive(Debug, Clone)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub values: Vec<f64>,
    pub guides: Vec<Guide>,
    /// Optional per-bar reference ticks, e.g. the true value.
    pub markers: Option<(String, Vec<f64>)>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.2},{y1:.2} V{y0:.2} H{x1:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

/// Round tick spacing giving roughly `count` intervals over `[0, max]`.
fn tick_step(max: f64, count: usize) -> f64 {
    let raw = max / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

pub fn bar_chart(chart: &BarChart) -> String {
    let mut out = String::new();
    header(&mut out, &chart.title);
    let n = chart.values.len().max(1);
    let mut top = chart.values.iter().cloned().fold(0.0, f64::max);
    for g in &chart.guides {
        top = top.max(g.value);
    }
    if let Some((_, m)) = &chart.markers {
        top = m.iter().cloned().fold(top, f64::max);
    }
    if !(top > 0.0 && top.is_finite()) {
        top = 1.0;
    }
    let step = tick_step(top * 1.05, 5);
    let y_max = (top * 1.05 / step).ceil() * step;
    let plot_h = HEIGHT - BOTTOM - TOP;
    let plot_w = WIDTH - LEFT - RIGHT;
    let y = |v: f64| HEIGHT - BOTTOM - v.clamp(0.0, y_max) / y_max * plot_h;
    let slot = plot_w / n as f64;

    let mut t = 0.0;
    while t <= y_max + 0.5 * step {
        let _ = writeln!(
            &mut out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#e4e4e4"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT,
            y(t),
            WIDTH - RIGHT,
            y(t),
            LEFT - 6.0,
            y(t) + 4.0,
            tick_label(t, step)
        );
        t += step;
    }
    for (i, v) in chart.values.iter().enumerate() {
        let x = LEFT + slot * i as f64 + 0.15 * slot;
        let _ = writeln!(
            &mut out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{BAR}"/>"#,
            x,
            y(*v),
            0.7 * slot,
            (HEIGHT - BOTTOM) - y(*v)
        );
        let _ = writeln!(
            &mut out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + slot * (i as f64 + 0.5),
            HEIGHT - BOTTOM + 16.0,
            i + 1
        );
    }
    let mut legend_y = TOP + 4.0;
    if let Some((label, marks)) = &chart.markers {
        for (i, v) in marks.iter().enumerate() {
            let _ = writeln!(
                &mut out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{ACCENT}" stroke-width="3"/>"#,
                LEFT + slot * i as f64 + 0.05 * slot,
                y(*v),
                LEFT + slot * (i as f64 + 0.95),
                y(*v)
            );
        }
        legend(&mut out, legend_y, ACCENT, label, false);
        legend_y += 16.0;
    }
    for g in &chart.guides {
        let _ = writeln!(
            &mut out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-dasharray="6,4"/>"#,
            LEFT,
            y(g.value),
            WIDTH - RIGHT,
            y(g.value),
            g.color
        );
        legend(&mut out, legend_y, g.color, &g.label, true);
        legend_y += 16.0;
    }
    axes(&mut out, "element", &chart.y_label);
    out.push_str("</svg>\n");
    out
}

fn legend(out: &mut String, y: f64, color: &str, label: &str, dashed: bool) {
    let x = WIDTH - RIGHT - 170.0;
    let dash = if dashed {
        r#" stroke-dasharray="6,4""#
    } else {
        ""
    };
    let _ = writeln!(
        out,
        r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
        y + 6.0,
        x + 24.0,
        y + 6.0,
        x + 30.0,
        y + 10.0,
        escape(label)
    );
}

/// Objective value per iteration on a log axis; `stage_starts` marks the
/// iterations where a new stage began.
pub fn convergence_chart(
    title: &str,
    iterations: &[f64],
    values: &[f64],
    stage_starts: &[f64],
) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let positive: Vec<f64> = values
        .iter()
        .cloned()
        .filter(|v| *v > 0.0 && v.is_finite())
        .collect();
    let lo = positive.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = positive.iter().cloned().fold(0.0, f64::max);
    let (d0, d1) = if positive.is_empty() {
        (-1.0, 0.0)
    } else {
        let d0 = lo.log10().floor();
        (d0, hi.log10().ceil().max(d0 + 1.0))
    };
    let x_max = iterations.iter().cloned().fold(1.0, f64::max);
    let plot_h = HEIGHT - BOTTOM - TOP;
    let plot_w = WIDTH - LEFT - RIGHT;
    let px = |i: f64| LEFT + i / x_max * plot_w;
    let py = |v: f64| {
        let l = if v > 0.0 { v.log10().clamp(d0, d1) } else { d0 };
        HEIGHT - BOTTOM - (l - d0) / (d1 - d0) * plot_h
    };

    let mut d = d0;
    while d <= d1 {
        let _ = writeln!(
            &mut out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#e4e4e4"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"##,
            LEFT,
            py(10f64.powf(d)),
            WIDTH - RIGHT,
            py(10f64.powf(d)),
            LEFT - 6.0,
            py(10f64.powf(d)) + 4.0,
            d as i64
        );
        d += 1.0;
    }
    let step = tick_step(x_max, 8).max(1.0);
    let mut t = 0.0;
    while t <= x_max + 1e-9 {
        let _ = writeln!(
            &mut out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(t),
            HEIGHT - BOTTOM + 16.0,
            t as i64
        );
        t += step;
    }
    for s in stage_starts {
        let _ = writeln!(
            &mut out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{GUIDE}" stroke-dasharray="3,3"/>"#,
            px(*s),
            TOP,
            px(*s),
            HEIGHT - BOTTOM
        );
    }
    let path: Vec<String> = iterations
        .iter()
        .zip(values)
        .map(|(i, v)| format!("{:.2},{:.2}", px(*i), py(*v)))
        .collect();
    if !path.is_empty() {
        let _ = writeln!(
            &mut out,
            r#"<polyline points="{}" fill="none" stroke="{BAR}" stroke-width="2"/>"#,
            path.join(" ")
        );
    }
    axes(&mut out, "iteration", "objective J");
    out.push_str("</svg>\n");
    out
}
