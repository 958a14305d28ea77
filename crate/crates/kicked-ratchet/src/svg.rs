//! Hand-emitted SVG line/scatter plots with no plotting dependency.
//!
//! Plots are a pure function of the data handed in (which the scenarios
//! read back from the CSV they just wrote), so figures are reproducible
//! byte-for-byte from their sibling data files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
    LineMarkers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Optional symmetric error bars on y.
    pub y_err: Option<Vec<f64>>,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            style: Style::Line,
            y_err: None,
        }
    }

    pub fn markers(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            style: Style::Markers,
            y_err: None,
        }
    }

    pub fn with_errors(mut self, err: Vec<f64>) -> Self {
        assert_eq!(err.len(), self.points.len());
        self.y_err = Some(err);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Plot log10 of y instead of y (labels show the exponent).
    pub log_y: bool,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            log_y: false,
        }
    }

    pub fn add(&mut self, s: Series) -> &mut Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for s in &self.series {
            for (i, &(x, y)) in s.points.iter().enumerate() {
                let y = if self.log_y { y.log10() } else { y };
                if x.is_finite() && y.is_finite() {
                    pts.push((x, y));
                    if let Some(err) = &s.y_err {
                        if !self.log_y {
                            pts.push((x, s.points[i].1 + err[i]));
                            pts.push((x, s.points[i].1 - err[i]));
                        }
                    }
                }
            }
        }
        let (x_lo, x_hi) = range(pts.iter().map(|p| p.0));
        let (y_lo, y_hi) = range(pts.iter().map(|p| p.1));
        let x_ticks = ticks(x_lo, x_hi, 8);
        let y_ticks = ticks(y_lo, y_hi, 7);
        // expand to tick bounds for a tidy frame
        let x_lo = x_lo.min(*x_ticks.first().unwrap_or(&x_lo));
        let x_hi = x_hi.max(*x_ticks.last().unwrap_or(&x_hi));
        let y_lo = y_lo.min(*y_ticks.first().unwrap_or(&y_lo));
        let y_hi = y_hi.max(*y_ticks.last().unwrap_or(&y_hi));
        let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(
            svg,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        // frame
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
            MARGIN_L,
            MARGIN_T,
            WIDTH - MARGIN_L - MARGIN_R,
            HEIGHT - MARGIN_T - MARGIN_B
        );
        // grid + tick labels
        for &t in &x_ticks {
            let x = px(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#dddddd" stroke-width="0.5"/>"##,
                MARGIN_T,
                HEIGHT - MARGIN_B
            );
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                HEIGHT - MARGIN_B + 18.0,
                tick_label(t)
            );
        }
        for &t in &y_ticks {
            let y = py(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#dddddd" stroke-width="0.5"/>"##,
                MARGIN_L,
                WIDTH - MARGIN_R
            );
            let label = if self.log_y {
                format!("1e{}", tick_label(t))
            } else {
                tick_label(t)
            };
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y:.2}" font-size="12" text-anchor="end" dominant-baseline="middle" font-family="sans-serif">{label}</text>"#,
                MARGIN_L - 8.0
            );
        }
        // axis labels and title
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="14" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let ylab_y = MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0;
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{ylab_y}" font-size="14" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 18 {ylab_y})">{}</text>"#,
            escape(&self.y_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" font-size="15" text-anchor="middle" font-family="sans-serif" font-weight="bold">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        // zero line if visible
        if y_lo < 0.0 && y_hi > 0.0 && !self.log_y {
            let y = py(0.0);
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#888888" stroke-width="0.8" stroke-dasharray="4 3"/>"##,
                MARGIN_L,
                WIDTH - MARGIN_R
            );
        }
        // series
        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let mapped: Vec<(f64, f64, usize)> = s
                .points
                .iter()
                .enumerate()
                .filter_map(|(i, &(x, y))| {
                    let y = if self.log_y { y.log10() } else { y };
                    (x.is_finite() && y.is_finite()).then_some((px(x), py(y), i))
                })
                .collect();
            if matches!(s.style, Style::Line | Style::LineMarkers) && mapped.len() > 1 {
                let path: Vec<String> = mapped
                    .iter()
                    .map(|(x, y, _)| format!("{x:.2},{y:.2}"))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                    path.join(" ")
                );
            }
            if let Some(err) = &s.y_err {
                for &(x, _, i) in &mapped {
                    let (yv, e) = (s.points[i].1, err[i]);
                    if self.log_y {
                        continue;
                    }
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}" stroke-width="1"/>"#,
                        py(yv - e),
                        py(yv + e)
                    );
                }
            }
            if matches!(s.style, Style::Markers | Style::LineMarkers) {
                for &(x, y, _) in &mapped {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                    );
                }
            }
            // legend entry
            let ly = MARGIN_T + 16.0 + 18.0 * si as f64;
            let lx = MARGIN_L + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                lx + 22.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="12" font-family="sans-serif" dominant-baseline="middle">{}</text>"#,
                lx + 28.0,
                ly,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// 1-2-5 tick positions covering [lo, hi].
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if span <= 0.0 || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let mut p = Plot::new("demo", "x", "y");
        p.add(Series::line(
            "sine",
            (0..50).map(|i| (i as f64 * 0.2, (i as f64 * 0.2).sin())).collect(),
        ));
        p.add(
            Series::markers("data", vec![(0.0, 0.1), (1.0, 0.9), (2.0, 0.4)])
                .with_errors(vec![0.05, 0.1, 0.02]),
        );
        let svg = p.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("circle"));
        assert!(svg.matches("<text").count() >= 8);
    }

    #[test]
    fn render_is_deterministic() {
        let mut p = Plot::new("t", "x", "y");
        p.add(Series::line("s", vec![(0.0, 0.0), (1.0, 1.0)]));
        assert_eq!(p.render(), p.render());
    }

    #[test]
    fn log_y_mode() {
        let mut p = Plot::new("hist", "rho", "N");
        p.log_y = true;
        p.add(Series::line(
            "N",
            (1..40).map(|i| (i as f64, (-(i as f64) / 5.0).exp())).collect(),
        ));
        let svg = p.render();
        assert!(svg.contains("1e"));
    }

    #[test]
    fn tick_helper_is_sane() {
        let t = ticks(0.0, 10.0, 8);
        assert!(t.contains(&0.0) && t.contains(&10.0));
        let t = ticks(-1.3, 1.3, 8);
        assert!(t.contains(&0.0));
    }
}
