//! Standalone SVG plots.
//!
//! No plotting dependency: the renderer emits a self-contained SVG with
//! axes, optional log scales, one polyline per series, confidence bands as
//! polygons, text annotations (e.g. a fitted slope), and the full data
//! table embedded in a `<metadata>` element.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 75.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 45.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// One plotted series: points in data coordinates, with an optional
/// confidence band given as `(x, lo, hi)`.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub band: Option<Vec<(f64, f64, f64)>>,
}

/// Everything the renderer needs, prepared by the experiment driver.
#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub annotations: Vec<String>,
}

struct Axis {
    min: f64,
    max: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Result<Axis> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            if !v.is_finite() {
                continue;
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter(
                "plot has no finite data points".into(),
            ));
        }
        // Log scale needs positive data; fall back to linear otherwise.
        let log = log && min > 0.0;
        if min == max {
            // Degenerate single-value axis: pad so the point sits mid-plot.
            if log {
                min /= 2.0;
                max *= 2.0;
            } else {
                let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.5 };
                min -= pad;
                max += pad;
            }
        }
        Ok(Axis { min, max, log })
    }

    fn fraction(&self, v: f64) -> f64 {
        if self.log {
            (v.ln() - self.min.ln()) / (self.max.ln() - self.min.ln())
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    /// Tick positions in data coordinates: decades on log axes, five even
    /// steps on linear ones.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let lo = self.min.log10().ceil() as i32;
            let hi = self.max.log10().floor() as i32;
            if lo > hi {
                return vec![self.min, self.max];
            }
            (lo..=hi).map(|d| 10f64.powi(d)).collect()
        } else {
            (0..=4)
                .map(|i| self.min + (self.max - self.min) * i as f64 / 4.0)
                .collect()
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.0e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the plot spec plus its data table to an SVG string.
pub fn render_svg(spec: &PlotSpec, data_table: &str) -> Result<String> {
    if spec.series.is_empty() || spec.series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let xs = spec.series.iter().flat_map(|s| {
        s.points
            .iter()
            .map(|p| p.0)
            .chain(s.band.iter().flatten().map(|b| b.0))
    });
    let ys = spec.series.iter().flat_map(|s| {
        s.points.iter().map(|p| p.1).chain(
            s.band
                .iter()
                .flatten()
                .flat_map(|b| [b.1, b.2].into_iter()),
        )
    });
    let x_axis = Axis::new(xs, spec.log_x)?;
    let y_axis = Axis::new(ys, spec.log_y)?;
    let px = |v: f64| MARGIN_L + x_axis.fraction(v) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |v: f64| HEIGHT - MARGIN_B - y_axis.fraction(v) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<metadata id=\"data-table\">{}</metadata>", xml_escape(data_table));
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        xml_escape(&spec.title)
    );

    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>",
        HEIGHT - MARGIN_B
    );
    for t in x_axis.ticks() {
        let x = px(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN_B + 18.0,
            fmt_tick(t)
        );
    }
    for t in y_axis.ticks() {
        let y = py(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{MARGIN_L}\" y2=\"{y:.2}\" stroke=\"black\"/>",
            MARGIN_L - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        xml_escape(spec.x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        xml_escape(spec.y_label)
    );

    // Series: band polygon first so lines draw on top.
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(band) = &series.band {
            if band.len() > 1 {
                let mut pts = String::new();
                for &(x, lo, _) in band {
                    let _ = write!(pts, "{:.2},{:.2} ", px(x), py(lo));
                }
                for &(x, _, hi) in band.iter().rev() {
                    let _ = write!(pts, "{:.2},{:.2} ", px(x), py(hi));
                }
                let _ = writeln!(
                    svg,
                    "<polygon class=\"ci-band\" points=\"{}\" fill=\"{color}\" opacity=\"0.18\"/>",
                    pts.trim_end()
                );
            }
        }
        if series.points.len() > 1 {
            let mut pts = String::new();
            for &(x, y) in &series.points {
                let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
            }
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                pts.trim_end()
            );
        }
        for &(x, y) in &series.points {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                px(x),
                py(y)
            );
        }
        // Legend entry.
        let ly = MARGIN_T + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            WIDTH - MARGIN_R + 10.0,
            ly
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            WIDTH - MARGIN_R + 25.0,
            ly + 9.0,
            xml_escape(&series.label)
        );
    }

    // Annotations under the legend.
    for (i, note) in spec.annotations.iter().enumerate() {
        let y = MARGIN_T + 16.0 * spec.series.len() as f64 + 18.0 + 15.0 * i as f64;
        let _ = writeln!(
            svg,
            "<text class=\"annotation\" x=\"{}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            WIDTH - MARGIN_R + 10.0,
            xml_escape(note)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes the plot for a sweep result next to its CSV.
pub fn render_plots(result: &super::experiment::SweepResult, path: &Path) -> Result<()> {
    let svg = render_svg(&result.plot, &result.csv_string())?;
    std::fs::write(path, svg).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_with(points: Vec<(f64, f64)>, band: Option<Vec<(f64, f64, f64)>>) -> PlotSpec {
        PlotSpec {
            title: "test".into(),
            x_label: "x",
            y_label: "y",
            log_x: true,
            log_y: true,
            series: vec![Series {
                label: "s".into(),
                points,
                band,
            }],
            annotations: vec!["slope = 0.5".into()],
        }
    }

    #[test]
    fn renders_loglog_with_annotation() {
        let spec = spec_with(vec![(1e3, 15.0), (1e4, 50.0), (1e5, 158.0)], None);
        let svg = render_svg(&spec, "n,m\n1000,15\n").unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("slope = 0.5"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("<metadata id=\"data-table\">"));
        assert!(svg.contains("n,m"));
    }

    #[test]
    fn renders_ci_band_polygon() {
        let band = vec![(1.0, 0.8, 0.9), (2.0, 0.85, 0.95), (3.0, 0.9, 1.0)];
        let spec = PlotSpec {
            log_x: false,
            log_y: false,
            ..spec_with(vec![(1.0, 0.85), (2.0, 0.9), (3.0, 0.95)], Some(band))
        };
        let svg = render_svg(&spec, "").unwrap();
        assert!(svg.contains("class=\"ci-band\""));
        assert!(svg.contains("<polygon"));
    }

    #[test]
    fn single_point_degenerates_gracefully() {
        let spec = spec_with(vec![(42.0, 7.0)], None);
        let svg = render_svg(&spec, "x,y\n42,7\n").unwrap();
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_plot_is_an_error() {
        let spec = spec_with(vec![], None);
        assert!(render_svg(&spec, "").is_err());
    }

    #[test]
    fn escapes_xml_in_annotations() {
        let mut spec = spec_with(vec![(1.0, 1.0), (2.0, 2.0)], None);
        spec.annotations = vec!["a < b & c".into()];
        let svg = render_svg(&spec, "x<y").unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.contains("x&lt;y"));
    }
}
