//! Static SVG 1.1 emission: gray anchor scatter in the background,
//! highlighted node trajectories as arrow-marked polylines.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::TrajectorySet;

/// 12 categorical colors, cycled over highlights without explicit colors.
pub const PALETTE: [&str; 12] = [
    "#1F77B4", "#FF7F0E", "#2CA02C", "#D62728", "#9467BD", "#8C564B", "#E377C2", "#7F7F7F",
    "#BCBD22", "#17BECF", "#AEC7E8", "#FFBB78",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Highlight {
    pub label: String,
    /// 6-hex color like `#D62728`; defaults to the palette cycle.
    pub color: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotSpec {
    pub width: u32,
    pub height: u32,
    pub highlights: Vec<Highlight>,
    pub background_color: String,
    pub background_opacity: f64,
    pub background_radius: f64,
    pub show_timestamp_labels: bool,
    /// Keep every stride-th trajectory point (the last one always stays).
    pub stride: usize,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            width: 960,
            height: 720,
            highlights: Vec::new(),
            background_color: "#B0B0B0".to_string(),
            background_opacity: 0.4,
            background_radius: 3.0,
            show_timestamp_labels: false,
            stride: 1,
        }
    }
}

fn valid_hex_color(c: &str) -> bool {
    c.len() == 7 && c.starts_with('#') && c[1..].chars().all(|ch| ch.is_ascii_hexdigit())
}

impl PlotSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 100 || self.height < 100 {
            return Err(Error::validation(format!(
                "canvas {}x{} below the 100px minimum",
                self.width, self.height
            )));
        }
        if self.stride == 0 {
            return Err(Error::validation("stride must be >= 1"));
        }
        if !valid_hex_color(&self.background_color) {
            return Err(Error::validation(format!(
                "bad background color {:?}",
                self.background_color
            )));
        }
        for h in &self.highlights {
            if let Some(c) = &h.color {
                if !valid_hex_color(c) {
                    return Err(Error::validation(format!(
                        "bad highlight color {c:?} for {:?}",
                        h.label
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmitSummary {
    pub anchors: usize,
    pub trajectories: usize,
    pub points: usize,
    pub bytes: usize,
}

/// Affine data-to-canvas map with one uniform scale (aspect preserved,
/// letterboxed) and a 5% margin.
pub(crate) struct CanvasMap {
    min_x: f64,
    min_y: f64,
    scale: f64,
    offset_x: f64,
    offset_y: f64,
    height: f64,
}

impl CanvasMap {
    pub(crate) fn fit(points: &[(f64, f64)], width: f64, height: f64) -> CanvasMap {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for &(x, y) in points {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        // degenerate bounding boxes fall back to a unit box around the data
        let mut w = max_x - min_x;
        let mut h = max_y - min_y;
        if w <= 0.0 {
            min_x -= 0.5;
            w = 1.0;
        }
        if h <= 0.0 {
            min_y -= 0.5;
            h = 1.0;
        }
        let usable_w = width * 0.9;
        let usable_h = height * 0.9;
        let scale = (usable_w / w).min(usable_h / h);
        let offset_x = (width - scale * w) / 2.0;
        let offset_y = (height - scale * h) / 2.0;
        CanvasMap { min_x, min_y, scale, offset_x, offset_y, height }
    }

    pub(crate) fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let cx = self.offset_x + self.scale * (x - self.min_x);
        // flip y so data "up" points up on screen
        let cy = self.height - (self.offset_y + self.scale * (y - self.min_y));
        (cx, cy)
    }
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn decimate(points: &[(usize, f64, f64)], stride: usize) -> Vec<(usize, f64, f64)> {
    if stride <= 1 || points.len() <= 2 {
        return points.to_vec();
    }
    let mut kept: Vec<(usize, f64, f64)> = points.iter().copied().step_by(stride).collect();
    let last = *points.last().expect("non-empty");
    if kept.last() != Some(&last) {
        kept.push(last);
    }
    kept
}

/// Renders the full scene; `upto` limits trajectories to points with
/// timestamp <= upto while keeping the global coordinate frame.
pub(crate) fn render_svg_frame(
    set: &TrajectorySet,
    spec: &PlotSpec,
    upto: Option<usize>,
) -> Result<String> {
    spec.validate()?;
    let mut all_points: Vec<(f64, f64)> = set
        .nodes
        .iter()
        .flat_map(|n| n.points.iter().map(|&(_, x, y)| (x, y)))
        .collect();
    all_points.extend(set.anchors.iter().map(|a| (a.x, a.y)));
    if all_points.is_empty() {
        return Err(Error::validation("no positions to render"));
    }
    let map = CanvasMap::fit(&all_points, spec.width as f64, spec.height as f64);

    let mut resolved: Vec<(usize, &Highlight, String)> = Vec::new();
    for (i, h) in spec.highlights.iter().enumerate() {
        let track = set
            .nodes
            .iter()
            .position(|n| n.label == h.label)
            .ok_or_else(|| Error::validation(format!("unknown highlighted label {:?}", h.label)))?;
        let color = h
            .color
            .clone()
            .unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string());
        resolved.push((track, h, color));
    }

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = spec.width,
        h = spec.height
    ));
    svg.push_str(&format!(
        "<desc>{} anchors; method {}; k={}; alpha={}</desc>\n",
        set.anchors.len(),
        xml_escape(&set.meta.method),
        set.meta.k,
        set.meta.alpha
    ));
    svg.push_str("<defs>\n");
    for (i, (_, _, color)) in resolved.iter().enumerate() {
        svg.push_str(&format!(
            "<marker id=\"arrow{i}\" viewBox=\"0 0 10 10\" refX=\"8\" refY=\"5\" markerWidth=\"4.5\" markerHeight=\"4.5\" orient=\"auto\"><path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"{color}\"/></marker>\n"
        ));
    }
    svg.push_str("</defs>\n");

    svg.push_str("<g>\n");
    for anchor in &set.anchors {
        let (cx, cy) = map.map(anchor.x, anchor.y);
        svg.push_str(&format!(
            "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{}\" fill=\"{}\" fill-opacity=\"{}\"/>\n",
            spec.background_radius, spec.background_color, spec.background_opacity
        ));
    }
    svg.push_str("</g>\n");

    svg.push_str("<g>\n");
    for (i, (track_idx, highlight, color)) in resolved.iter().enumerate() {
        let track = &set.nodes[*track_idx];
        let mut points: Vec<(usize, f64, f64)> = track
            .points
            .iter()
            .copied()
            .filter(|&(t, _, _)| upto.is_none_or(|cap| t <= cap))
            .collect();
        points = decimate(&points, spec.stride);
        if points.is_empty() {
            continue;
        }
        let canvas: Vec<(f64, f64)> = points.iter().map(|&(_, x, y)| map.map(x, y)).collect();
        if canvas.len() == 1 {
            let (cx, cy) = canvas[0];
            svg.push_str(&format!(
                "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"4\" fill=\"{color}\"/>\n"
            ));
        } else {
            let coords: Vec<String> = canvas.iter().map(|(x, y)| format!("{x},{y}")).collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" marker-mid=\"url(#arrow{i})\" marker-end=\"url(#arrow{i})\" points=\"{}\"/>\n",
                coords.join(" ")
            ));
        }
        let (ex, ey) = *canvas.last().expect("non-empty");
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            ex + 6.0,
            ey - 6.0,
            xml_escape(&highlight.label)
        ));
        if spec.show_timestamp_labels {
            for ((t, _, _), (cx, cy)) in points.iter().zip(&canvas) {
                svg.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-size=\"8\" fill=\"{color}\">t{t}</text>\n",
                    cx + 3.0,
                    cy + 3.0
                ));
            }
        }
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

/// Renders the trajectory scene to an SVG string.
pub fn render_svg(set: &TrajectorySet, spec: &PlotSpec) -> Result<String> {
    render_svg_frame(set, spec, None)
}

/// Renders and writes the SVG file.
pub fn emit_svg(set: &TrajectorySet, spec: &PlotSpec, out: &Path) -> Result<EmitSummary> {
    let svg = render_svg(set, spec)?;
    fs::write(out, &svg).map_err(|e| Error::io(out, e))?;
    Ok(EmitSummary {
        anchors: set.anchors.len(),
        trajectories: spec.highlights.len(),
        points: set.total_points(),
        bytes: svg.len(),
    })
}
