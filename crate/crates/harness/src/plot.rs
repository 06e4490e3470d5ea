//! Residual-versus-iteration plots as standalone SVG.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const MAX_POINTS: usize = 1000;
/// Residuals below `10^FLOOR` (including zero) are drawn at the floor.
const FLOOR: f64 = -16.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub method: String,
    pub start_id: usize,
    /// Residual after iteration `k` at index `k − 1`.
    pub residuals: Vec<f64>,
}

fn log_res(r: f64) -> f64 {
    if r > 0.0 && r.is_finite() {
        r.log10().max(FLOOR)
    } else if r.is_infinite() {
        f64::NAN
    } else {
        FLOOR
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Indices kept when thinning a series to at most `MAX_POINTS`; always keeps the last.
fn thin(len: usize) -> Vec<usize> {
    if len <= MAX_POINTS {
        return (0..len).collect();
    }
    let stride = len.div_ceil(MAX_POINTS);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

pub fn render_residual_plot(title: &str, series: &[Series]) -> String {
    let k_max = series.iter().map(|s| s.residuals.len()).max().unwrap_or(0).max(1) as f64;
    let logs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.residuals.iter().map(|&r| log_res(r)))
        .filter(|v| v.is_finite())
        .collect();
    let (mut y_lo, mut y_hi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (FLOOR, 0.0);
    }
    y_lo = y_lo.floor();
    y_hi = y_hi.ceil().max(y_lo + 1.0);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |k: f64| LEFT + pw * k / k_max;
    let sy = |v: f64| TOP + ph * (y_hi - v) / (y_hi - y_lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let y_step = ((y_hi - y_lo) / 10.0).ceil().max(1.0);
    let mut t = y_lo;
    while t <= y_hi + 1e-9 {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            t as i64
        );
        t += y_step;
    }
    for i in 0..=5 {
        let k = k_max * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(k),
            TOP + ph + 18.0,
            k.round() as u64
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration k</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">residual</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let mut methods: Vec<&str> = Vec::new();
    for s in series {
        if !methods.contains(&s.method.as_str()) {
            methods.push(&s.method);
        }
    }
    let color = |m: &str| PALETTE[methods.iter().position(|x| *x == m).unwrap_or(0) % PALETTE.len()];

    for s in series {
        let pts: Vec<String> = thin(s.residuals.len())
            .into_iter()
            .filter_map(|i| {
                let v = log_res(s.residuals[i]);
                v.is_finite().then(|| format!("{:.2},{:.2}", sx((i + 1) as f64), sy(v)))
            })
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{} start {}</title></polyline>"#,
            color(&s.method),
            pts.join(" "),
            escape(&s.method),
            s.start_id
        );
    }

    for (i, m) in methods.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            x + 20.0,
            color(m),
            x + 26.0,
            y + 4.0,
            escape(m)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
