//! Minimal static SVG charts.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Dashed,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, mark: Mark) -> Self {
        Self {
            label: label.into(),
            points,
            mark,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
            lo -= pad;
            hi += pad;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        } else {
            let pad = 0.04 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0) as i32;
            (self.lo as i32..=self.hi as i32)
                .step_by(step as usize)
                .map(|e| ((e as f64 - self.lo) / (self.hi - self.lo), format!("1e{e}")))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let mut out = Vec::new();
            let mut v = (self.lo / step).ceil() * step;
            while v <= self.hi + 1e-9 * step {
                let shown = if v.abs() < 1e-9 * step { 0.0 } else { v };
                out.push((
                    (v - self.lo) / (self.hi - self.lo),
                    format!("{}", round_sig(shown)),
                ));
                v += step;
            }
            out
        }
    }
}

fn round_sig(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(6 - v.abs().log10().ceil() as i32);
    (v * scale).round() / scale
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn legend(out: &mut String, series: &[Series]) {
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 14.0 + 18.0 * i as f64;
        let x = W - RIGHT + 14.0;
        match s.mark {
            Mark::Points => {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{}" cy="{y}" r="3" fill="{color}"/>"#,
                    x + 10.0
                );
            }
            _ => {
                let dash = if s.mark == Mark::Dashed {
                    r#" stroke-dasharray="5,3""#
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#,
                    x + 20.0
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            x + 26.0,
            y + 4.0,
            escape(&s.label)
        );
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let xa = Axis::fit(all().map(|p| p.0), self.x_log);
        let ya = Axis::fit(all().map(|p| p.1), self.y_log);
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let px = |u: f64| LEFT + u * pw;
        let py = |u: f64| TOP + (1.0 - u) * ph;

        let mut out = String::new();
        header(&mut out, &self.title);
        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for (u, label) in xa.ticks() {
            let x = px(u);
            let _ = writeln!(
                out,
                r##"<line x1="{x}" y1="{TOP}" x2="{x}" y2="{}" stroke="#ddd"/><text x="{x}" y="{}" text-anchor="middle">{label}</text>"##,
                TOP + ph,
                TOP + ph + 16.0
            );
        }
        for (u, label) in ya.ticks() {
            let y = py(u);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{label}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter_map(|&(x, y)| Some((px(xa.unit(x)?), py(ya.unit(y)?))))
                .collect();
            match s.mark {
                Mark::Points => {
                    for (x, y) in pts {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                        );
                    }
                }
                Mark::Line | Mark::Dashed => {
                    let path: Vec<String> =
                        pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let dash = if s.mark == Mark::Dashed {
                        r#" stroke-dasharray="5,3""#
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        path.join(" ")
                    );
                }
            }
        }
        legend(&mut out, &self.series);
        out.push_str("</svg>\n");
        out
    }
}

/// Quarter-circle polar chart: angle is the phase in `[0, pi/2]`, radius the
/// value on a linear scale from zero.
pub fn polar(title: &str, radial_label: &str, series: &[Series]) -> String {
    let r_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let r_max = if r_max > 0.0 { r_max * 1.05 } else { 1.0 };
    let (cx, cy) = (LEFT, H - BOTTOM);
    let radius = (H - TOP - BOTTOM).min(W - LEFT - RIGHT);
    let at = |phi: f64, r: f64| {
        let rr = radius * r / r_max;
        (cx + rr * phi.cos(), cy - rr * phi.sin())
    };

    let mut out = String::new();
    header(&mut out, title);
    for k in 1..=4 {
        let r = r_max * k as f64 / 4.0;
        let (x0, y0) = at(0.0, r);
        let (x1, y1) = at(FRAC_PI_2, r);
        let rr = radius * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<path d="M {x0:.2} {y0:.2} A {rr:.2} {rr:.2} 0 0 0 {x1:.2} {y1:.2}" fill="none" stroke="#ddd"/><text x="{x0:.2}" y="{}" text-anchor="middle">{}</text>"##,
            y0 + 16.0,
            round_sig(r)
        );
    }
    for k in 0..=6 {
        let phi = FRAC_PI_2 * k as f64 / 6.0;
        let (x, y) = at(phi, r_max);
        let _ = writeln!(
            out,
            r##"<line x1="{cx}" y1="{cy}" x2="{x:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}">{}</text>"##,
            x + 4.0 * phi.cos(),
            y - 4.0 * phi.sin(),
            round_sig(phi)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        cx + radius / 2.0,
        H - 18.0,
        escape(radial_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(phi, r)| {
                let (x, y) = at(phi, r.max(0.0));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let dash = if s.mark == Mark::Dashed {
            r#" stroke-dasharray="5,3""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_log_plot_and_skips_nonpositive() {
        let plot = Plot {
            title: "a < b".into(),
            x_label: "n".into(),
            y_label: "sigma".into(),
            x_log: true,
            y_log: true,
            series: vec![
                Series::new(
                    "one",
                    vec![(0.1, 1.0), (10.0, 0.01), (0.0, 5.0)],
                    Mark::Line,
                ),
                Series::new("two", vec![(1.0, 0.5)], Mark::Points),
            ],
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("1e-2") && svg.contains("1e1"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn linear_ticks_and_empty_plot() {
        let plot = Plot {
            series: vec![Series::new(
                "s",
                vec![(0.0, -1.0), (1.0, 3.0)],
                Mark::Dashed,
            )],
            ..Plot::default()
        };
        assert!(plot.render().contains("stroke-dasharray"));
        assert!(Plot::default().render().contains("</svg>"));
    }

    #[test]
    fn polar_chart() {
        let s = Series::new("v", vec![(0.0, 1.0), (0.5, 2.0), (1.5, 0.5)], Mark::Line);
        let svg = polar("p", "variance", &[s]);
        assert!(svg.contains("<polyline") && svg.contains("</svg>"));
    }
}
