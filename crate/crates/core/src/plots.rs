//! Static SVG figures, each written next to a CSV with the plotted
//! coordinates.
//!
//! Plotted points carry their data coordinates in `data-x`/`data-y`
//! attributes, formatted exactly as in the CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fdcore::{SampledFunction, Site};
use crate::io::{fmt_num, write_table};
use crate::variogram::{EmpiricalVariogram, VariogramModel};

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// One row of the CSV behind a plot.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotPoint {
    pub panel: String,
    pub series: String,
    pub x: f64,
    pub y: f64,
}

struct Frame {
    ox: f64,
    oy: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn new(
        ox: f64,
        oy: f64,
        xs: impl Iterator<Item = f64> + Clone,
        ys: impl Iterator<Item = f64> + Clone,
    ) -> Frame {
        let (mut xmin, mut xmax) = bounds(xs);
        let (mut ymin, mut ymax) = bounds(ys);
        if xmax <= xmin {
            xmin -= 0.5;
            xmax += 0.5;
        }
        if ymax <= ymin {
            ymin -= 0.5;
            ymax += 0.5;
        }
        Frame {
            ox,
            oy,
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.ox + MARGIN + (x - self.xmin) / (self.xmax - self.xmin) * (PANEL_W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.oy + PANEL_H
            - MARGIN
            - (y - self.ymin) / (self.ymax - self.ymin) * (PANEL_H - 2.0 * MARGIN)
    }

    fn axes(&self, svg: &mut String, title: &str) {
        let (x0, x1) = (self.ox + MARGIN, self.ox + PANEL_W - MARGIN);
        let (y0, y1) = (self.oy + PANEL_H - MARGIN, self.oy + MARGIN);
        let _ = writeln!(
            svg,
            r#"<g class="axes"><line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/><line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            self.ox + PANEL_W / 2.0,
            self.oy + MARGIN / 2.0,
            escape(title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x0:.2}" y="{:.2}" font-size="10">{:.3}</text><text x="{x1:.2}" y="{:.2}" font-size="10" text-anchor="end">{:.3}</text>"#,
            y0 + 14.0,
            self.xmin,
            y0 + 14.0,
            self.xmax
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{y0:.2}" font-size="10" text-anchor="end">{:.3}</text><text x="{:.2}" y="{y1:.2}" font-size="10" text-anchor="end">{:.3}</text></g>"#,
            x0 - 4.0,
            self.ymin,
            x0 - 4.0,
            self.ymax
        );
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn polyline(
    svg: &mut String,
    frame: &Frame,
    pts: &[(f64, f64)],
    series: &str,
    color: &str,
    dashed: bool,
) {
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    let dash = if dashed {
        r#" stroke-dasharray="5,3""#
    } else {
        ""
    };
    let _ = writeln!(
        svg,
        r#"<polyline class="curve" data-series="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
        escape(series),
        coords.join(" ")
    );
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn write_svg(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn write_points(path: &Path, points: &[PlotPoint]) -> Result<()> {
    let header = ["panel", "series", "x", "y"].map(String::from);
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.panel.clone(),
                p.series.clone(),
                fmt_num(p.x),
                fmt_num(p.y),
            ]
        })
        .collect();
    write_table(&path.with_extension("csv"), &header, &rows)
}

/// Empirical bins and fitted curves, one panel per variogram.
pub fn variogram_plot(
    path: &Path,
    panels: &[(&str, &EmpiricalVariogram, &VariogramModel)],
) -> Result<Vec<PlotPoint>> {
    let mut body = String::new();
    let mut points = Vec::new();
    for (p, (title, emp, model)) in panels.iter().enumerate() {
        let hmax = emp
            .bins
            .iter()
            .map(|b| b.lag)
            .fold(0.0, f64::max)
            .max(1e-12);
        let curve: Vec<(f64, f64)> = (0..=60)
            .map(|k| hmax * k as f64 / 60.0)
            .map(|h| (h, model.evaluate(h)))
            .collect();
        let frame = Frame::new(
            p as f64 * PANEL_W,
            0.0,
            emp.bins.iter().map(|b| b.lag).chain(std::iter::once(0.0)),
            emp.bins
                .iter()
                .map(|b| b.semivariance)
                .chain(curve.iter().map(|c| c.1))
                .chain(std::iter::once(0.0)),
        );
        frame.axes(&mut body, title);
        polyline(&mut body, &frame, &curve, "fitted", PALETTE[1], false);
        for &(x, y) in &curve {
            points.push(PlotPoint {
                panel: title.to_string(),
                series: "fitted".into(),
                x,
                y,
            });
        }
        for b in &emp.bins {
            let _ = writeln!(
                body,
                r#"<circle class="bin" data-x="{}" data-y="{}" cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#,
                fmt_num(b.lag),
                fmt_num(b.semivariance),
                frame.px(b.lag),
                frame.py(b.semivariance),
                PALETTE[0]
            );
            points.push(PlotPoint {
                panel: title.to_string(),
                series: "empirical".into(),
                x: b.lag,
                y: b.semivariance,
            });
        }
    }
    write_svg(
        path,
        &document(PANEL_W * panels.len().max(1) as f64, PANEL_H, &body),
    )?;
    write_points(path, &points)?;
    Ok(points)
}

/// Truth, amplitude-phase and ordinary kriging curves, one panel per target.
pub fn prediction_plot(
    path: &Path,
    targets: &[(&str, &SampledFunction, &SampledFunction, &SampledFunction)],
) -> Result<Vec<PlotPoint>> {
    let cols = targets.len().clamp(1, 4);
    let rows = targets.len().div_ceil(cols).max(1);
    let mut body = String::new();
    let mut points = Vec::new();
    for (p, (label, truth, apk, ok)) in targets.iter().enumerate() {
        let series = [
            ("truth", *truth, "#000000", false),
            ("apk", *apk, PALETTE[0], false),
            ("ok", *ok, PALETTE[1], true),
        ];
        let all = || series.iter().flat_map(|s| s.1.values().iter().cloned());
        let ts = truth.grid().points();
        let frame = Frame::new(
            (p % cols) as f64 * PANEL_W,
            (p / cols) as f64 * PANEL_H,
            ts.iter().cloned(),
            all().collect::<Vec<_>>().into_iter(),
        );
        frame.axes(&mut body, label);
        for (name, f, color, dashed) in series {
            let pts: Vec<(f64, f64)> = ts.iter().cloned().zip(f.values().iter().cloned()).collect();
            polyline(&mut body, &frame, &pts, name, color, dashed);
            for (x, y) in pts {
                points.push(PlotPoint {
                    panel: label.to_string(),
                    series: name.into(),
                    x,
                    y,
                });
            }
        }
    }
    write_svg(
        path,
        &document(PANEL_W * cols as f64, PANEL_H * rows as f64, &body),
    )?;
    write_points(path, &points)?;
    Ok(points)
}

/// Sites colored by cluster, one panel per partition.
pub fn site_map(
    path: &Path,
    sites: &[Site],
    panels: &[(&str, &[usize])],
) -> Result<Vec<PlotPoint>> {
    let mut body = String::new();
    let mut points = Vec::new();
    for (p, (title, assignment)) in panels.iter().enumerate() {
        let frame = Frame::new(
            p as f64 * PANEL_W,
            0.0,
            sites.iter().map(|s| s.x),
            sites.iter().map(|s| s.y),
        );
        frame.axes(&mut body, title);
        for (s, &c) in sites.iter().zip(assignment.iter()) {
            let _ = writeln!(
                body,
                r#"<circle class="site" data-x="{}" data-y="{}" data-cluster="{c}" cx="{:.2}" cy="{:.2}" r="5" fill="{}"/>"#,
                fmt_num(s.x),
                fmt_num(s.y),
                frame.px(s.x),
                frame.py(s.y),
                PALETTE[(c.max(1) - 1) % PALETTE.len()]
            );
            points.push(PlotPoint {
                panel: title.to_string(),
                series: format!("cluster_{c}"),
                x: s.x,
                y: s.y,
            });
        }
    }
    write_svg(
        path,
        &document(PANEL_W * panels.len().max(1) as f64, PANEL_H, &body),
    )?;
    write_points(path, &points)?;
    Ok(points)
}
