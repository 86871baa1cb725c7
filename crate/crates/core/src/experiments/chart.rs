//! Standalone SVG line charts of the experiment CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Lines,
    /// Log-10 vertical axis; non-positive points are dropped.
    LogLines,
}

impl ChartKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lines" => Some(ChartKind::Lines),
            "log_lines" | "log" => Some(ChartKind::LogLines),
            _ => None,
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn bad(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Chart(msg.into())
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, line: u64) -> Result<&'a str, ExperimentError> {
    rec.get(idx).ok_or_else(|| bad(format!("row {line}: missing column {idx}")))
}

fn num(s: &str, what: &str) -> Result<f64, ExperimentError> {
    s.trim().parse().map_err(|_| bad(format!("bad {what} `{s}`")))
}

/// Reads either CSV layout: `n,metric,mean_rounds,..` gives one series per
/// metric over `n`; `n,m,eps,mean_rounds,..` gives one series per `(n, m)`
/// over `1 - eps`.
fn read_series(csv_text: &str) -> Result<(String, Vec<Series>), ExperimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let mut series: BTreeMap<(usize, String), Vec<(f64, f64)>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let x_label;
    let mut rows = 0;
    if cols.starts_with(&["n", "metric", "mean_rounds"]) {
        x_label = "n".to_string();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            rows += 1;
            let mean = field(&rec, 2, line)?;
            let metric = field(&rec, 1, line)?.to_string();
            let key = position(&mut order, &metric);
            if mean.is_empty() {
                continue;
            }
            series
                .entry((key, metric))
                .or_default()
                .push((num(field(&rec, 0, line)?, "n")?, num(mean, "mean_rounds")?));
        }
    } else if cols.starts_with(&["n", "m", "eps", "mean_rounds"]) {
        x_label = "1 - eps".to_string();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            rows += 1;
            let name = format!("n={}, m={}", field(&rec, 0, line)?, field(&rec, 1, line)?);
            let key = position(&mut order, &name);
            let mean = field(&rec, 3, line)?;
            if mean.is_empty() {
                continue;
            }
            let eps = num(field(&rec, 2, line)?, "eps")?;
            series
                .entry((key, name))
                .or_default()
                .push((1.0 - eps, num(mean, "mean_rounds")?));
        }
    } else {
        return Err(bad(format!("unrecognised header `{}`", cols.join(","))));
    }
    if rows == 0 {
        return Err(bad("no data rows"));
    }
    let out = series
        .into_iter()
        .map(|((_, name), mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { name, points }
        })
        .collect();
    Ok((x_label, out))
}

fn position(order: &mut Vec<String>, name: &str) -> usize {
    match order.iter().position(|s| s == name) {
        Some(i) => i,
        None => {
            order.push(name.to_string());
            order.len() - 1
        }
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-9);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|k| k * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1e5 {
        format!("{v:.0e}")
    } else if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

pub fn emit_chart(csv_text: &str, kind: ChartKind) -> Result<String, ExperimentError> {
    let (x_label, mut series) = read_series(csv_text)?;
    if kind == ChartKind::LogLines {
        for s in &mut series {
            s.points.retain(|&(_, y)| y > 0.0);
            for p in &mut s.points {
                p.1 = p.1.log10();
            }
        }
    }
    series.retain(|s| !s.points.is_empty());
    if series.is_empty() {
        return Err(bad("no plottable points"));
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if kind == ChartKind::LogLines {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    } else {
        y0 = y0.min(0.0);
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let y_ticks: Vec<f64> = if kind == ChartKind::LogLines {
        (y0 as i64..=y1 as i64).map(|e| e as f64).collect()
    } else {
        nice_ticks(y0, y1)
    };
    for t in y_ticks {
        let y = sy(t);
        let label = if kind == ChartKind::LogLines {
            fmt_tick(10f64.powf(t))
        } else {
            fmt_tick(t)
        };
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for t in nice_ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 19.0,
            fmt_tick(t)
        );
    }
    let y_label = if kind == ChartKind::LogLines {
        "Rounds (log-scale)"
    } else {
        "Rounds"
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{y_label}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            s.name
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
