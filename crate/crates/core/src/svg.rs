//! Static SVG charts: grouped bars, line plots and class-coloured scatters.
//!
//! Output is a pure function of the input; coordinates are printed with two
//! decimals so identical data gives byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    pub name: String,
    pub data: T,
}

impl<T> Series<T> {
    pub fn new(name: impl Into<String>, data: T) -> Self {
        Series { name: name.into(), data }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plot {
    /// One bar per series within each category; `None` leaves a gap.
    GroupedBars {
        title: String,
        x_label: String,
        y_label: String,
        categories: Vec<String>,
        series: Vec<Series<Vec<Option<f64>>>>,
    },
    Lines {
        title: String,
        x_label: String,
        y_label: String,
        log_x: bool,
        series: Vec<Series<Vec<(f64, f64)>>>,
    },
    /// One colour per group.
    Scatter {
        title: String,
        x_label: String,
        y_label: String,
        groups: Vec<Series<Vec<(f64, f64)>>>,
    },
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn extent(values: impl Iterator<Item = f64>) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("plot value {v}")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return Err(Error::EmptyData);
    }
    Ok((lo, hi))
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: &[(f64, String)]) {
    let (bx, by) = (HEIGHT - BOTTOM, WIDTH - RIGHT);
    let _ = writeln!(
        out,
        r#"<path d="M{LEFT:.2},{TOP:.2} L{LEFT:.2},{bx:.2} L{by:.2},{bx:.2}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let v = f.y0 + (f.y1 - f.y0) * k as f64 / 5.0;
        let y = f.py(v);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0,
            tick_label(v)
        );
    }
    for (x, label) in x_ticks {
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{bx:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bx + 4.0,
            bx + 18.0,
            escape(label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, names: &[&str]) {
    let x = WIDTH - RIGHT + 15.0;
    let _ = writeln!(out, r#"<g class="legend">"#);
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect class="legend-entry" x="{x:.2}" y="{:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(name)
        );
    }
    let _ = writeln!(out, "</g>");
}

pub fn render(plot: &Plot) -> Result<String> {
    let mut out = String::new();
    match plot {
        Plot::GroupedBars {
            title,
            x_label,
            y_label,
            categories,
            series,
        } => {
            if categories.is_empty() || series.is_empty() {
                return Err(Error::EmptyData);
            }
            let (lo, hi) = extent(series.iter().flat_map(|s| s.data.iter().flatten().copied()))?;
            let f = Frame {
                x0: 0.0,
                x1: categories.len() as f64,
                y0: lo.min(0.0),
                y1: if hi > lo.min(0.0) { hi * 1.05 } else { 1.0 },
            };
            let slot = 1.0 / (series.len() as f64 + 1.0);
            let ticks: Vec<(f64, String)> = categories
                .iter()
                .enumerate()
                .map(|(i, c)| (f.px(i as f64 + 0.5), c.clone()))
                .collect();
            header(&mut out, title);
            axes(&mut out, &f, x_label, y_label, &ticks);
            for (si, s) in series.iter().enumerate() {
                let colour = PALETTE[si % PALETTE.len()];
                for (ci, v) in s.data.iter().enumerate() {
                    let Some(v) = v else { continue };
                    let xa = f.px(ci as f64 + slot * (si as f64 + 0.5));
                    let xb = f.px(ci as f64 + slot * (si as f64 + 1.5));
                    let (ya, yb) = (f.py(v.max(f.y0)), f.py(f.y0.max(0.0)));
                    let _ = writeln!(
                        out,
                        r#"<rect class="bar" x="{xa:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"><title>{}: {v:.4}</title></rect>"#,
                        ya.min(yb),
                        xb - xa,
                        (yb - ya).abs(),
                        escape(&s.name)
                    );
                }
            }
            legend(&mut out, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
        }
        Plot::Lines {
            title,
            x_label,
            y_label,
            log_x,
            series,
        } => {
            let tx = |x: f64| if *log_x { x.log10() } else { x };
            if *log_x && series.iter().flat_map(|s| &s.data).any(|p| p.0 <= 0.0) {
                return Err(Error::Config("log-x plot with non-positive x".into()));
            }
            let (xl, xh) = extent(series.iter().flat_map(|s| s.data.iter().map(|p| tx(p.0))))?;
            let (yl, yh) = extent(series.iter().flat_map(|s| s.data.iter().map(|p| p.1)))?;
            let ((x0, x1), (y0, y1)) = (padded(xl, xh), padded(yl, yh));
            let f = Frame { x0, x1, y0, y1 };
            let ticks: Vec<(f64, String)> = (0..=4)
                .map(|k| {
                    let v = xl + (xh - xl) * k as f64 / 4.0;
                    let shown = if *log_x { 10f64.powf(v) } else { v };
                    (f.px(v), tick_label(shown))
                })
                .collect();
            header(&mut out, title);
            axes(&mut out, &f, x_label, y_label, &ticks);
            for (si, s) in series.iter().enumerate() {
                if s.data.is_empty() {
                    continue;
                }
                let colour = PALETTE[si % PALETTE.len()];
                let mut d = String::new();
                for (k, &(x, y)) in s.data.iter().enumerate() {
                    let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, f.px(tx(x)), f.py(y));
                }
                let _ = writeln!(
                    out,
                    r#"<path class="series" d="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
                    d.trim_end()
                );
            }
            legend(&mut out, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
        }
        Plot::Scatter {
            title,
            x_label,
            y_label,
            groups,
        } => {
            let (xl, xh) = extent(groups.iter().flat_map(|g| g.data.iter().map(|p| p.0)))?;
            let (yl, yh) = extent(groups.iter().flat_map(|g| g.data.iter().map(|p| p.1)))?;
            let ((x0, x1), (y0, y1)) = (padded(xl, xh), padded(yl, yh));
            let f = Frame { x0, x1, y0, y1 };
            let ticks: Vec<(f64, String)> = (0..=4)
                .map(|k| {
                    let v = xl + (xh - xl) * k as f64 / 4.0;
                    (f.px(v), tick_label(v))
                })
                .collect();
            header(&mut out, title);
            axes(&mut out, &f, x_label, y_label, &ticks);
            for (gi, g) in groups.iter().enumerate() {
                let colour = PALETTE[gi % PALETTE.len()];
                let _ = writeln!(out, r#"<g fill="{colour}" fill-opacity="0.6">"#);
                for &(x, y) in &g.data {
                    let _ = writeln!(out, r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="2.5"/>"#, f.px(x), f.py(y));
                }
                let _ = writeln!(out, "</g>");
            }
            legend(&mut out, &groups.iter().map(|g| g.name.as_str()).collect::<Vec<_>>());
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(plot: &Plot, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = render(plot)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bars() -> Plot {
        Plot::GroupedBars {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            categories: vec!["a".into(), "b".into()],
            series: vec![
                Series::new("one", vec![Some(0.5), Some(0.9)]),
                Series::new("two", vec![Some(0.7), None]),
            ],
        }
    }

    #[test]
    fn two_series_two_legend_entries() {
        let s = render(&bars()).unwrap();
        assert_eq!(s.matches("class=\"legend-entry\"").count(), 2);
        assert_eq!(s.matches("class=\"bar\"").count(), 3);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
    }

    #[test]
    fn deterministic() {
        assert_eq!(render(&bars()).unwrap(), render(&bars()).unwrap());
    }

    #[test]
    fn scatter_counts() {
        let p = Plot::Scatter {
            title: "pca".into(),
            x_label: "PC1".into(),
            y_label: "PC2".into(),
            groups: vec![
                Series::new("4", vec![(0.0, 1.0), (1.0, 2.0)]),
                Series::new("9", vec![(2.0, -1.0)]),
            ],
        };
        let s = render(&p).unwrap();
        assert_eq!(s.matches("class=\"point\"").count(), 3);
        assert_eq!(s.matches("fill-opacity").count(), 2);
    }

    #[test]
    fn empty_and_non_finite() {
        let p = Plot::Scatter {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            groups: vec![],
        };
        assert!(matches!(render(&p), Err(Error::EmptyData)));
        let p = Plot::Lines {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            log_x: false,
            series: vec![Series::new("s", vec![(0.0, f64::NAN)])],
        };
        assert!(matches!(render(&p), Err(Error::NonFinite(_))));
    }
}
