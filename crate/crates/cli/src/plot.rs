//! Minimal self-contained SVG line charts: axes, tick labels, a legend and
//! one `<polyline>` per series. An optional right-hand axis carries series
//! with a different unit.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub axis: Axis,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, axis: Axis) -> Self {
        Self {
            label: label.into(),
            points,
            axis,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y2_label: Option<String>,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Scale {
    fn fit<'a>(values: impl Iterator<Item = &'a f64>) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            lo -= pad;
            hi += pad;
        }
        let step = nice_step((hi - lo) / 5.0);
        Self {
            lo: (lo / step).floor() * step,
            hi: (hi / step).ceil() * step,
            step,
        }
    }

    fn ticks(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=n).map(move |k| self.lo + k as f64 * self.step)
    }

    fn unit(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    fn label(&self, v: f64) -> String {
        let decimals = (-self.step.log10().floor()).max(0.0) as usize;
        let v = if v.abs() < self.step * 1e-9 { 0.0 } else { v };
        format!("{v:.decimals$}")
    }
}

/// Rounds `raw` up to 1, 2 or 5 times a power of ten.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let on = |axis: Axis| self.series.iter().filter(move |s| s.axis == axis);
        let xs = Scale::fit(self.series.iter().flat_map(|s| s.points.iter().map(|(x, _)| x)));
        let y1 = Scale::fit(on(Axis::Left).flat_map(|s| s.points.iter().map(|(_, y)| y)));
        let has_right = on(Axis::Right).next().is_some();
        let y2 = Scale::fit(on(Axis::Right).flat_map(|s| s.points.iter().map(|(_, y)| y)));

        let px = |x: f64| LEFT + xs.unit(x) * plot_w;
        let py = |s: &Scale, y: f64| TOP + (1.0 - s.unit(y)) * plot_h;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        // Frame and grid.
        let (x0, x1, yb, yt) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
        let _ = writeln!(svg, r#"<g class="axes" stroke="black" stroke-width="1">"#);
        let _ = writeln!(svg, r#"<line x1="{x0}" y1="{yb}" x2="{x1}" y2="{yb}"/>"#);
        let _ = writeln!(svg, r#"<line x1="{x0}" y1="{yb}" x2="{x0}" y2="{yt}"/>"#);
        if has_right {
            let _ = writeln!(svg, r#"<line x1="{x1}" y1="{yb}" x2="{x1}" y2="{yt}"/>"#);
        }
        let _ = writeln!(svg, "</g>");

        let _ = writeln!(svg, r#"<g class="ticks">"#);
        for t in xs.ticks() {
            let x = px(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{yb}" x2="{x:.2}" y2="{}" stroke="black"/>"##,
                yb + 5.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                yb + 19.0,
                xs.label(t)
            );
        }
        for t in y1.ticks() {
            let y = py(&y1, t);
            let _ = writeln!(
                svg,
                r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#e0e0e0"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 8.0,
                y + 4.0,
                y1.label(t)
            );
        }
        if has_right {
            for t in y2.ticks() {
                let y = py(&y2, t);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{x1}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="black"/>"##,
                    x1 + 5.0
                );
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{:.2}">{}</text>"#,
                    x1 + 8.0,
                    y + 4.0,
                    y2.label(t)
                );
            }
        }
        let _ = writeln!(svg, "</g>");

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 22.0,
            escape(&self.x_label)
        );
        let (cy, lx) = (TOP + plot_h / 2.0, 20.0);
        let _ = writeln!(
            svg,
            r#"<text x="{lx}" y="{cy}" text-anchor="middle" transform="rotate(-90 {lx} {cy})">{}</text>"#,
            escape(&self.y_label)
        );
        if let (true, Some(label)) = (has_right, &self.y2_label) {
            let rx = WIDTH - 16.0;
            let _ = writeln!(
                svg,
                r#"<text x="{rx}" y="{cy}" text-anchor="middle" transform="rotate(90 {rx} {cy})">{}</text>"#,
                escape(label)
            );
        }

        let _ = writeln!(svg, r#"<g class="series" fill="none" stroke-width="2">"#);
        for (k, s) in self.series.iter().enumerate() {
            let scale = if s.axis == Axis::Left { &y1 } else { &y2 };
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(scale, y)))
                .collect();
            let dash = if s.axis == Axis::Right {
                r#" stroke-dasharray="6 3""#
            } else {
                ""
            };
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" stroke="{}"{dash}><title>{}</title></polyline>"#,
                pts.join(" "),
                PALETTE[k % PALETTE.len()],
                escape(&s.label)
            );
        }
        let _ = writeln!(svg, "</g>");

        let _ = writeln!(svg, r#"<g class="legend">"#);
        for (k, s) in self.series.iter().enumerate() {
            let y = TOP + 12.0 + 18.0 * k as f64;
            let x = x1 - 170.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/>"#,
                x + 24.0,
                PALETTE[k % PALETTE.len()]
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}">{}</text>"#,
                x + 30.0,
                y + 4.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(svg, "</g>");
        svg.push_str("</svg>\n");
        svg
    }
}
