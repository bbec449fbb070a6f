//! Minimal SVG line charts for trajectories.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::integrate::Trajectory;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Longer series are thinned to at most about this many points.
pub const MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Index into [`PALETTE`], taken modulo its length.
    pub style: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YRange {
    Auto,
    Explicit(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub series: Vec<Series>,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: u32,
    pub height: u32,
    pub y_range: YRange,
}

impl PlotSpec {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            series: Vec::new(),
            title: title.into(),
            x_label: "time".into(),
            y_label: String::new(),
            width: 900,
            height: 600,
            y_range: YRange::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::Plot("no series to plot".into()));
        }
        if self.width < 100 || self.height < 100 {
            return Err(Error::Plot(format!(
                "canvas {}x{} is smaller than 100x100",
                self.width, self.height
            )));
        }
        for s in &self.series {
            if s.times.len() != s.values.len() {
                return Err(Error::Plot(format!(
                    "series `{}` has {} times but {} values",
                    s.label,
                    s.times.len(),
                    s.values.len()
                )));
            }
            if s.times.len() < 2 {
                return Err(Error::Plot(format!("series `{}` has fewer than 2 points", s.label)));
            }
            if s.times.iter().chain(&s.values).any(|v| !v.is_finite()) {
                return Err(Error::Plot(format!("series `{}` has non-finite values", s.label)));
            }
        }
        if let YRange::Explicit(lo, hi) = self.y_range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Plot(format!("invalid y-range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Pixel rectangle of the plotting area: `(left, top, right, bottom)`.
pub fn plot_area(width: u32, height: u32) -> (f64, f64, f64, f64) {
    let (w, h) = (width as f64, height as f64);
    let left = 72f64.min(0.18 * w);
    let right = 24f64.min(0.06 * w);
    let top = 40f64.min(0.1 * h);
    let bottom = 52f64.min(0.13 * h);
    (left, top, w - right, h - bottom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub value: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub ticks: Vec<Tick>,
}

/// Decimal string for `mantissa * 10^exp`.
fn decimal_label(mantissa: i128, exp: i32) -> String {
    let neg = mantissa < 0;
    let digits = mantissa.unsigned_abs().to_string();
    let body = if exp >= 0 {
        if mantissa == 0 {
            "0".to_string()
        } else {
            format!("{digits}{}", "0".repeat(exp as usize))
        }
    } else {
        let shift = (-exp) as usize;
        let padded = format!("{digits:0>width$}", width = shift + 1);
        let (int, frac) = padded.split_at(padded.len() - shift);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    };
    if neg && body != "0" {
        format!("-{body}")
    } else {
        body
    }
}

const MAX_TICKS: usize = 11;

/// Chooses a {1,2,5}×10^n tick step giving at most 11 ticks. With `expand`
/// the axis is widened to the enclosing ticks; otherwise ticks are clipped to
/// `[lo, hi]` and the axis keeps its bounds.
pub fn nice_axis(mut lo: f64, mut hi: f64, expand: bool) -> Axis {
    if hi <= lo {
        let pad = lo.abs().max(1.0) * 0.1;
        lo -= pad;
        hi += pad;
    }
    let raw = (hi - lo) / (MAX_TICKS - 1) as f64;
    let mut e = raw.log10().floor() as i32 - 1;
    loop {
        for m in [1i128, 2, 5] {
            let step = m as f64 * 10f64.powi(e);
            let slack = 1e-9;
            let (k_lo, k_hi) = if expand {
                ((lo / step + slack).floor(), (hi / step - slack).ceil())
            } else {
                ((lo / step - slack).ceil(), (hi / step + slack).floor())
            };
            let count = k_hi - k_lo + 1.0;
            if count <= MAX_TICKS as f64 {
                let ticks: Vec<Tick> = (k_lo as i128..=k_hi as i128)
                    .map(|k| {
                        let label = decimal_label(k * m, e);
                        Tick {
                            value: label.parse().expect("decimal label"),
                            label,
                        }
                    })
                    .collect();
                let (alo, ahi) = if expand && ticks.len() >= 2 {
                    (ticks[0].value, ticks[ticks.len() - 1].value)
                } else {
                    (lo, hi)
                };
                return Axis {
                    lo: alo,
                    hi: ahi,
                    ticks,
                };
            }
        }
        e += 1;
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Indices kept when thinning a series of length `n`.
pub fn thin_indices(n: usize) -> Vec<usize> {
    if n <= MAX_POINTS {
        return (0..n).collect();
    }
    let stride = n.div_ceil(MAX_POINTS);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

fn min_max<'a>(vals: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)))
}

/// Renders `spec` to a standalone SVG 1.1 document.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    spec.validate()?;
    let (left, top, right, bottom) = plot_area(spec.width, spec.height);
    let (xmin, xmax) = min_max(spec.series.iter().flat_map(|s| s.times.iter()));
    let x_axis = nice_axis(xmin, xmax, true);
    let y_axis = match spec.y_range {
        YRange::Auto => {
            let (lo, hi) = min_max(spec.series.iter().flat_map(|s| s.values.iter()));
            nice_axis(lo, hi, true)
        }
        YRange::Explicit(lo, hi) => nice_axis(lo, hi, false),
    };
    let px = |t: f64| left + (t - x_axis.lo) / (x_axis.hi - x_axis.lo) * (right - left);
    let py = |v: f64| bottom - (v - y_axis.lo) / (y_axis.hi - y_axis.lo) * (bottom - top);

    let (w, h) = (spec.width, spec.height);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot-area"><rect x="{left}" y="{top}" width="{}" height="{}"/></clipPath></defs>"#,
        right - left,
        bottom - top
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text class="title" x="{}" y="{}" text-anchor="middle" font-size="16">{}</text>"#,
            w as f64 / 2.0,
            top / 2.0 + 6.0,
            escape(&spec.title)
        );
    }

    out.push_str("<g class=\"axes\" stroke=\"#444\" font-size=\"11\">\n");
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none"/>"#,
        right - left,
        bottom - top
    );
    for t in &x_axis.ticks {
        let x = px(t.value);
        let _ = writeln!(
            out,
            r##"<line x1="{x}" y1="{bottom}" x2="{x}" y2="{}"/><text class="tick-x" x="{x}" y="{}" text-anchor="middle" stroke="none" fill="#222">{}</text>"##,
            bottom + 5.0,
            bottom + 18.0,
            t.label
        );
    }
    for t in &y_axis.ticks {
        let y = py(t.value);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y}" x2="{left}" y2="{y}"/><text class="tick-y" x="{}" y="{}" text-anchor="end" stroke="none" fill="#222">{}</text>"##,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            t.label
        );
    }
    if !spec.x_label.is_empty() {
        let _ = writeln!(
            out,
            r##"<text class="x-label" x="{}" y="{}" text-anchor="middle" stroke="none" fill="#222" font-size="13">{}</text>"##,
            (left + right) / 2.0,
            h as f64 - 8.0,
            escape(&spec.x_label)
        );
    }
    if !spec.y_label.is_empty() {
        let (cx, cy) = (14.0, (top + bottom) / 2.0);
        let _ = writeln!(
            out,
            r##"<text class="y-label" x="{cx}" y="{cy}" transform="rotate(-90 {cx} {cy})" text-anchor="middle" stroke="none" fill="#222" font-size="13">{}</text>"##,
            escape(&spec.y_label)
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g clip-path=\"url(#plot-area)\" fill=\"none\" stroke-width=\"1.5\">\n");
    for s in &spec.series {
        let color = PALETTE[s.style % PALETTE.len()];
        let mut pts = String::new();
        for (n, i) in thin_indices(s.times.len()).into_iter().enumerate() {
            if n > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{},{}", px(s.times[i]), py(s.values[i]));
        }
        let _ = writeln!(
            out,
            r#"<polyline data-label="{}" stroke="{color}" points="{pts}"/>"#,
            escape(&s.label)
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"legend\" font-size=\"12\">\n");
    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[s.style % PALETTE.len()];
        let y = top + 14.0 + 16.0 * i as f64;
        let x = right - 170.0f64.min(0.45 * (right - left));
        let _ = writeln!(
            out,
            r##"<line x1="{x}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/><text x="{}" y="{y}" fill="#222">{}</text>"##,
            y - 4.0,
            x + 18.0,
            y - 4.0,
            x + 24.0,
            escape(&s.label)
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

/// Congestion and adoption of one run on a shared axis.
pub fn trajectory_plot(trajectory: &Trajectory) -> PlotSpec {
    let mut spec = PlotSpec::new(format!(
        "Traffic congestion and AI adoption: {}",
        trajectory.scenario_name
    ));
    spec.y_label = "level".into();
    spec.series = vec![
        Series {
            label: "congestion".into(),
            times: trajectory.times.clone(),
            values: trajectory.states.iter().map(|s| s.congestion).collect(),
            style: 0,
        },
        Series {
            label: "adoption".into(),
            times: trajectory.times.clone(),
            values: trajectory.states.iter().map(|s| s.adoption).collect(),
            style: 1,
        },
    ];
    spec
}

/// Congestion and adoption of several runs overlaid.
pub fn overlay_plot(trajectories: &[Trajectory]) -> PlotSpec {
    let mut spec = PlotSpec::new("Traffic congestion and AI adoption over time");
    spec.y_label = "level".into();
    let n = trajectories.len().max(1);
    for (i, tr) in trajectories.iter().enumerate() {
        spec.series.push(Series {
            label: format!("{} congestion", tr.scenario_name),
            times: tr.times.clone(),
            values: tr.states.iter().map(|s| s.congestion).collect(),
            style: i,
        });
    }
    for (i, tr) in trajectories.iter().enumerate() {
        spec.series.push(Series {
            label: format!("{} adoption", tr.scenario_name),
            times: tr.times.clone(),
            values: tr.states.iter().map(|s| s.adoption).collect(),
            style: n + i,
        });
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(label: &str, pts: &[(f64, f64)]) -> Series {
        Series {
            label: label.into(),
            times: pts.iter().map(|p| p.0).collect(),
            values: pts.iter().map(|p| p.1).collect(),
            style: 0,
        }
    }

    #[test]
    fn labels() {
        assert_eq!(decimal_label(3, -1), "0.3");
        assert_eq!(decimal_label(-25, -3), "-0.025");
        assert_eq!(decimal_label(20, -1), "2");
        assert_eq!(decimal_label(5, 2), "500");
        assert_eq!(decimal_label(0, -4), "0");
        assert_eq!(decimal_label(0, 3), "0");
    }

    #[test]
    fn axis_ticks_are_nice() {
        let a = nice_axis(0.0, 100.0, true);
        assert_eq!(a.ticks.len(), 11);
        assert_eq!(a.ticks[3].label, "30");
        let a = nice_axis(0.0601, 99.99, true);
        assert!(a.ticks.len() <= 11);
        assert_eq!((a.lo, a.hi), (0.0, 100.0));
        let a = nice_axis(-0.013, 0.071, true);
        assert!(a.ticks.len() <= 11);
        assert!(a.lo <= -0.013 && a.hi >= 0.071);
    }

    #[test]
    fn degenerate_range_is_padded() {
        let a = nice_axis(5.0, 5.0, true);
        assert!(a.lo < 5.0 && a.hi > 5.0);
    }

    #[test]
    fn thinning_keeps_last_point() {
        assert_eq!(thin_indices(10).len(), 10);
        let idx = thin_indices(4001);
        assert_eq!(idx[1], 3);
        assert_eq!(*idx.last().unwrap(), 4000);
        assert!(idx.len() <= MAX_POINTS + 1);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = PlotSpec::new("t");
        assert!(render_svg(&spec).is_err());
        spec.series.push(line("bad", &[(0.0, 1.0), (1.0, f64::NAN)]));
        let msg = render_svg(&spec).unwrap_err().to_string();
        assert!(msg.contains("bad"), "{msg}");
        spec.series[0] = line("short", &[(0.0, 1.0)]);
        assert!(render_svg(&spec).is_err());
        spec.series[0] = line("ok", &[(0.0, 1.0), (1.0, 2.0)]);
        spec.width = 99;
        assert!(render_svg(&spec).is_err());
    }

    #[test]
    fn escapes_labels() {
        let mut spec = PlotSpec::new("a < b & c");
        spec.series.push(line("x\"y", &[(0.0, 1.0), (1.0, 2.0)]));
        let svg = render_svg(&spec).unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.contains("x&quot;y"));
    }
}
