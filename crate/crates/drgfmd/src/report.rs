//! CSV and SVG emission.
//!
//! The CSV schema is fixed: one header, one row per (trial, checkpoint)
//! plus aggregate rows with an empty trial column, floats rendered with
//! 17 significant digits so parsing recovers them exactly, UTF-8 with LF
//! line endings. The SVG plots are small hand-emitted line charts with
//! no plotting dependency.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// Exactly the column order every file uses.
pub const CSV_HEADER: &str =
    "config_fingerprint,suite,trial,t,agent,gap_running_mean,gap_reciprocal,gap_alpha_weighted,consensus,bound";

/// One CSV record; `None` renders as the empty string.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub config_fingerprint: String,
    pub suite: String,
    pub trial: Option<u64>,
    pub t: u64,
    pub agent: Option<u64>,
    pub gap_running_mean: Option<f64>,
    pub gap_reciprocal: Option<f64>,
    pub gap_alpha_weighted: Option<f64>,
    pub consensus: Option<f64>,
    pub bound: Option<f64>,
}

/// 17 significant digits: enough for `f64` round trips.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

impl CsvRow {
    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.config_fingerprint,
            self.suite,
            self.trial.map(|t| t.to_string()).unwrap_or_default(),
            self.t,
            self.agent.map(|a| a.to_string()).unwrap_or_default(),
            format_opt(self.gap_running_mean),
            format_opt(self.gap_reciprocal),
            format_opt(self.gap_alpha_weighted),
            format_opt(self.consensus),
            format_opt(self.bound),
        )
    }

    fn parse_line(line: &str, line_no: usize) -> Result<CsvRow, ReportError> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(ReportError::Malformed {
                line: line_no,
                reason: format!("expected 10 fields, found {}", fields.len()),
            });
        }
        let opt_u64 = |s: &str, what: &str| -> Result<Option<u64>, ReportError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| ReportError::Malformed {
                    line: line_no,
                    reason: format!("{what}: {e}"),
                })
            }
        };
        let opt_f64 = |s: &str, what: &str| -> Result<Option<f64>, ReportError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| ReportError::Malformed {
                    line: line_no,
                    reason: format!("{what}: {e}"),
                })
            }
        };
        Ok(CsvRow {
            config_fingerprint: fields[0].to_string(),
            suite: fields[1].to_string(),
            trial: opt_u64(fields[2], "trial")?,
            t: fields[3].parse().map_err(|e| ReportError::Malformed {
                line: line_no,
                reason: format!("t: {e}"),
            })?,
            agent: opt_u64(fields[4], "agent")?,
            gap_running_mean: opt_f64(fields[5], "gap_running_mean")?,
            gap_reciprocal: opt_f64(fields[6], "gap_reciprocal")?,
            gap_alpha_weighted: opt_f64(fields[7], "gap_alpha_weighted")?,
            consensus: opt_f64(fields[8], "consensus")?,
            bound: opt_f64(fields[9], "bound")?,
        })
    }
}

/// Serializes rows under the fixed header.
pub fn csv_to_string(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_line());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<(), ReportError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(csv_to_string(rows).as_bytes())?;
    Ok(())
}

/// Parses a file written by [`write_csv`]; the 17-digit rendering makes
/// this a lossless round trip.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        other => {
            return Err(ReportError::Malformed {
                line: 1,
                reason: format!("bad header: {:?}", other.map(|(_, h)| h)),
            })
        }
    }
    lines
        .map(|(i, line)| CsvRow::parse_line(line, i + 1))
        .collect()
}

/// One curve on a plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A single panel: axes, optional log scaling, named curves.
#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const PANEL_W: f64 = 560.0;
const PANEL_H: f64 = 420.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 52.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Axis {
    min: f64,
    max: f64,
    log: bool,
}

impl Axis {
    fn from_values(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            if (log && v <= 0.0) || !v.is_finite() {
                continue;
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            min = if log { 0.1 } else { 0.0 };
            max = 1.0;
        }
        if min == max {
            if log {
                min /= 10.0;
                max *= 10.0;
            } else {
                min -= 0.5;
                max += 0.5;
            }
        }
        Axis { min, max, log }
    }

    fn transform(&self, v: f64) -> Option<f64> {
        if !v.is_finite() {
            return None;
        }
        if self.log {
            if v <= 0.0 {
                return None;
            }
            let (lo, hi) = (self.min.log10(), self.max.log10());
            Some((v.log10() - lo) / (hi - lo))
        } else {
            Some((v - self.min) / (self.max - self.min))
        }
    }

    /// Tick positions and labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let lo = self.min.log10().floor() as i32;
            let hi = self.max.log10().ceil() as i32;
            let step = (((hi - lo) as usize).div_ceil(6)).max(1);
            (lo..=hi)
                .step_by(step)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .filter(|(v, _)| *v >= self.min / 1.001 && *v <= self.max * 1.001)
                .collect()
        } else {
            let span = self.max - self.min;
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| span / s <= 6.0)
                .unwrap_or(mag);
            let first = (self.min / step).ceil() as i64;
            let last = (self.max / step).floor() as i64;
            (first..=last)
                .map(|k| {
                    let v = k as f64 * step;
                    (v, format!("{v}"))
                })
                .collect()
        }
    }
}

fn render_panel(svg: &mut String, plot: &LinePlot, x_off: f64) {
    let xs = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let x_axis = Axis::from_values(xs, plot.log_x);
    let y_axis = Axis::from_values(ys, plot.log_y);

    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |u: f64| x_off + MARGIN_L + u * plot_w;
    let py = |u: f64| MARGIN_T + (1.0 - u) * plot_h;

    // Frame and title.
    let _ = writeln!(
        svg,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#444\"/>",
        x_off + MARGIN_L,
        MARGIN_T
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" font-family=\"sans-serif\">{}</text>",
        x_off + PANEL_W / 2.0,
        plot.title
    );

    // Ticks.
    for (v, label) in x_axis.ticks() {
        if let Some(u) = x_axis.transform(v) {
            let x = px(u);
            let y0 = py(0.0);
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.2}\" y1=\"{y0:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>",
                y0 + 5.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">{label}</text>",
                y0 + 18.0
            );
        }
    }
    for (v, label) in y_axis.ticks() {
        if let Some(u) = y_axis.transform(v) {
            let y = py(u);
            let x0 = px(0.0);
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\" stroke=\"#444\"/>",
                x0 - 5.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">{label}</text>",
                x0 - 8.0,
                y + 4.0
            );
        }
    }

    // Axis labels.
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">{}</text>",
        x_off + MARGIN_L + plot_w / 2.0,
        PANEL_H - 12.0,
        plot.x_label
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 {:.2} {:.2})\">{}</text>",
        x_off + 16.0,
        MARGIN_T + plot_h / 2.0,
        x_off + 16.0,
        MARGIN_T + plot_h / 2.0,
        plot.y_label
    );

    // Curves.
    for (idx, series) in plot.series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for &(x, y) in &series.points {
            match (x_axis.transform(x), y_axis.transform(y)) {
                (Some(ux), Some(uy)) => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(path, "{cmd}{:.2} {:.2} ", px(ux), py(uy));
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        let _ = writeln!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.trim_end()
        );
        // Legend entry.
        let ly = MARGIN_T + 14.0 + 16.0 * idx as f64;
        let lx = x_off + MARGIN_L + plot_w - 150.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 22.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>",
            lx + 28.0,
            ly + 4.0,
            series.label
        );
    }
}

/// Renders panels side by side into one standalone SVG document.
pub fn render_svg(plots: &[LinePlot]) -> String {
    let total_w = PANEL_W * plots.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{total_w}\" height=\"{PANEL_H}\" viewBox=\"0 0 {total_w} {PANEL_H}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{total_w}\" height=\"{PANEL_H}\" fill=\"white\"/>"
    );
    for (i, plot) in plots.iter().enumerate() {
        render_panel(&mut svg, plot, PANEL_W * i as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(path: &Path, plots: &[LinePlot]) -> Result<(), ReportError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(render_svg(plots).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> CsvRow {
        CsvRow {
            config_fingerprint: "00ff00ff00ff00ff".into(),
            suite: "demo".into(),
            trial: Some(3),
            t: 17,
            agent: None,
            gap_running_mean: Some(0.1 + 0.2),
            gap_reciprocal: Some(1.0 / 3.0),
            gap_alpha_weighted: None,
            consensus: Some(7.062_513_370_443_823e-10),
            bound: Some(f64::MIN_POSITIVE),
        }
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rows = vec![
            sample_row(),
            CsvRow {
                trial: None,
                agent: Some(4),
                gap_running_mean: None,
                ..sample_row()
            },
        ];
        let text = csv_to_string(&rows);
        assert!(text.starts_with(CSV_HEADER));
        assert!(!text.contains('\r'));
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn parser_rejects_bad_header_and_short_rows() {
        assert!(parse_csv("nope\n").is_err());
        let text = format!("{CSV_HEADER}\na,b,c\n");
        assert!(matches!(
            parse_csv(&text),
            Err(ReportError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn svg_renders_finite_document() {
        let plot = LinePlot {
            title: "gap".into(),
            x_label: "iteration".into(),
            y_label: "value".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                label: "mean".into(),
                points: (1..100).map(|t| (t as f64, 1.0 / t as f64)).collect(),
            }],
        };
        let svg = render_svg(&[plot.clone(), plot]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<path"));
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }

    #[test]
    fn log_axis_skips_nonpositive_points() {
        let plot = LinePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: false,
            log_y: true,
            series: vec![Series {
                label: "s".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)],
            }],
        };
        let svg = render_svg(&[plot]);
        assert!(!svg.contains("NaN"));
    }
}
