//! SVG line and bar charts built from the run artifacts alone.

use std::fmt::Write as _;
use std::path::Path;

use etbc_core::simulator::{Histogram, TriggerCause};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{read_histogram, read_json, read_trajectory, EventsFile, SummaryFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
pub enum Figure {
    /// `ζ(t)` and `‖u‖`.
    States,
    /// `(d²)^0.2` against `(−ξm)^0.2`.
    Etm,
    /// Staircase of `λ̂` and `â`.
    Estimates,
    /// Held input `U_d` over the continuous law `U_c`.
    Input,
    /// Inter-event time histogram.
    Dwell,
}

const W: f64 = 760.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone)]
enum Shape {
    Line(Vec<(f64, f64)>),
    /// `(lo, hi, height)` bars.
    Bars(Vec<(f64, f64, f64)>),
}

#[derive(Debug, Clone)]
struct Series {
    name: String,
    shape: Shape,
}

#[derive(Debug, Clone)]
pub struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    /// Event markers `(t, y)`.
    markers: Vec<(f64, f64)>,
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 7.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * span { 0.0 } else { t });
        t += step;
    }
    out
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Chart {
    fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: vec![], markers: vec![] }
    }

    fn line(mut self, name: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { name: name.into(), shape: Shape::Line(points) });
        self
    }

    fn bars(mut self, name: &str, bars: Vec<(f64, f64, f64)>) -> Self {
        self.series.push(Series { name: name.into(), shape: Shape::Bars(bars) });
        self
    }

    fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.series.iter().flat_map(|s| match &s.shape {
            Shape::Line(p) => p.iter().map(|q| q.0).collect::<Vec<_>>(),
            Shape::Bars(b) => b.iter().flat_map(|q| [q.0, q.1]).collect(),
        })
    }

    fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.series
            .iter()
            .flat_map(|s| match &s.shape {
                Shape::Line(p) => p.iter().map(|q| q.1).collect::<Vec<_>>(),
                Shape::Bars(b) => b.iter().flat_map(|q| [0.0, q.2]).collect(),
            })
            .chain(self.markers.iter().map(|m| m.1))
    }

    pub fn render(&self) -> String {
        let (x0, x1) = range(self.xs());
        let (y0, y1) = range(self.ys());
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            esc(&self.title)
        );

        let _ = writeln!(s, r##"<g id="grid" stroke="#ddd">"##);
        for t in ticks(x0, x1) {
            let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{TOP}" x2="{0:.2}" y2="{1:.2}"/>"#, sx(t), TOP + ph);
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}"/>"#, sy(t), LEFT + pw);
        }
        s.push_str("</g>\n");

        let _ = writeln!(
            s,
            r#"<g id="axes" stroke="black"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none"/></g>"#
        );
        s.push_str(r#"<g id="ticks">"#);
        s.push('\n');
        for t in ticks(x0, x1) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(t),
                TOP + ph + 18.0,
                label(t)
            );
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                sy(t) + 4.0,
                label(t)
            );
        }
        s.push_str("</g>\n");
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let id = slug(&series.name);
            match &series.shape {
                Shape::Line(points) => {
                    let pts: Vec<String> = points
                        .iter()
                        .filter(|p| p.0.is_finite() && p.1.is_finite())
                        .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline id="series-{id}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        pts.join(" ")
                    );
                }
                Shape::Bars(bars) => {
                    let _ = writeln!(s, r#"<g id="series-{id}" fill="{color}" fill-opacity="0.7">"#);
                    for &(lo, hi, v) in bars {
                        let _ = writeln!(
                            s,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                            sx(lo),
                            sy(v),
                            (sx(hi) - sx(lo)).max(0.5),
                            sy(0.0) - sy(v)
                        );
                    }
                    s.push_str("</g>\n");
                }
            }
            let ly = TOP + 14.0 + 20.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
                lx + 22.0,
                lx + 28.0,
                ly + 4.0,
                esc(&series.name)
            );
        }

        if !self.markers.is_empty() {
            s.push_str(r#"<g id="events" fill="none" stroke="black">"#);
            s.push('\n');
            for &(t, y) in &self.markers {
                let _ = writeln!(s, r#"<circle data-t="{t}" cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(t), sy(y));
            }
            s.push_str("</g>\n");
        }
        s.push_str("</svg>\n");
        s
    }
}

fn label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' }).collect()
}

fn sibling(input: &Path, name: &str) -> std::path::PathBuf {
    input.parent().unwrap_or(Path::new(".")).join(name)
}

fn load_events(input: &Path) -> Result<EventsFile, CliError> {
    read_json(&sibling(input, "events.json"))
}

/// Builds the chart for `fig` from `input` and the JSON artifacts beside it.
pub fn figure(fig: Figure, input: &Path) -> Result<Chart, CliError> {
    let root = 0.2;
    match fig {
        Figure::States => {
            let rows = read_trajectory(input)?;
            Ok(Chart::new("Plant states", "t (s)", "value")
                .line("zeta", rows.iter().map(|r| (r.t, r.zeta)).collect())
                .line("norm u", rows.iter().map(|r| (r.t, r.u_norm)).collect()))
        }
        Figure::Input => {
            let rows = read_trajectory(input)?;
            Ok(Chart::new("Boundary input", "t (s)", "input")
                .line("Ud", rows.iter().map(|r| (r.t, r.ud)).collect())
                .line("Uc", rows.iter().map(|r| (r.t, r.uc)).collect()))
        }
        Figure::Etm => {
            let rows = read_trajectory(input)?;
            let events = load_events(input)?;
            // at an event the logged d² is already reset; splice in the value that fired it
            let mut d = Vec::with_capacity(rows.len() + events.events.len());
            let mut next = events.events.iter().peekable();
            for r in &rows {
                if let Some(e) = next.next_if(|e| e.t_i == r.t) {
                    d.push((r.t, e.d2_before.powf(root)));
                }
                d.push((r.t, r.d2.powf(root)));
            }
            let mut chart = Chart::new("Trigger", "t (s)", "fifth root")
                .line("d^2", d)
                .line("-xi m", rows.iter().map(|r| (r.t, r.xi_m.powf(root))).collect());
            chart.markers = events
                .events
                .iter()
                .filter(|e| e.cause == TriggerCause::Threshold)
                .map(|e| (e.t_i, e.threshold.powf(root)))
                .collect();
            Ok(chart)
        }
        Figure::Estimates => {
            let events = load_events(input)?;
            let summary: SummaryFile = read_json(&sibling(input, "summary.json"))?;
            let rows = read_trajectory(input)?;
            let t_end = rows.last().map_or(0.0, |r| r.t);
            let mut lam = vec![(0.0, summary.initial_estimate.lambda_hat)];
            let mut a = vec![(0.0, summary.initial_estimate.a_hat)];
            for e in &events.events {
                lam.extend([(e.t_i, lam.last().unwrap().1), (e.t_i, e.lambda_hat)]);
                a.extend([(e.t_i, a.last().unwrap().1), (e.t_i, e.a_hat)]);
            }
            lam.push((t_end, lam.last().unwrap().1));
            a.push((t_end, a.last().unwrap().1));
            Ok(Chart::new("Parameter estimates", "t (s)", "estimate").line("lambda hat", lam).line("a hat", a))
        }
        Figure::Dwell => {
            let bars: Vec<(f64, f64, f64)> = if is_histogram(input)? {
                read_histogram(input)?.iter().map(|r| (r.lo, r.hi, r.count as f64)).collect()
            } else {
                let dwells: Vec<f64> = load_events(input)?.events.iter().map(|e| e.dwell).collect();
                if dwells.is_empty() {
                    return Err(CliError::Runtime("no events to histogram".into()));
                }
                let h = Histogram::new(&dwells, dwells.len().min(50))?;
                (0..h.counts.len()).map(|k| (h.edges[k], h.edges[k + 1], h.counts[k] as f64)).collect()
            };
            Ok(Chart::new("Inter-event times", "dwell (s)", "count").bars("dwell", bars))
        }
    }
}

fn is_histogram(path: &Path) -> Result<bool, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.headers()?.iter().eq(["lo", "hi", "count"]))
}
