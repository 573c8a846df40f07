//! Deterministic SVG output for evaluated frames.
//!
//! Coordinates use fixed six-decimal formatting and elements are emitted in
//! painter's order, so equal frames give byte-identical documents.

use std::fmt::Write as _;

use thiserror::Error;

use crate::blend::{BlendParams, BlendedFrame, EvalError, FrameEvaluator};
use crate::model::{Model25, Rgba};
use crate::shape::ShapeOptions;
use crate::{Vec2, ViewRotation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("canvas size must be positive, got {width}x{height}")]
    EmptyCanvas { width: u32, height: u32 },
    #[error("scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("stroke width must be non-negative and finite, got {0}")]
    BadStroke(f64),
    #[error("degrees per frame must be positive and finite, got {0}")]
    BadStep(f64),
}

/// Canvas size in pixels and the world-to-canvas map
/// `(x, y) ↦ (offset.x + scale·x, offset.y − scale·y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    width: u32,
    height: u32,
    scale: f64,
    offset: Vec2,
    stroke_width: f64,
    background: Rgba,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            scale: 100.0,
            offset: Vec2::new(256.0, 256.0),
            stroke_width: 0.0,
            background: Rgba::new(1.0, 1.0, 1.0, 1.0),
        }
    }
}

impl RenderOptions {
    pub fn new(
        width: u32,
        height: u32,
        scale: f64,
        offset: Vec2,
        stroke_width: f64,
        background: Rgba,
    ) -> Result<Self, RenderError> {
        if width == 0 || height == 0 {
            return Err(RenderError::EmptyCanvas { width, height });
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(RenderError::BadScale(scale));
        }
        if !(stroke_width >= 0.0) || !stroke_width.is_finite() {
            return Err(RenderError::BadStroke(stroke_width));
        }
        Ok(Self {
            width,
            height,
            scale,
            offset,
            stroke_width,
            background,
        })
    }

    /// Canvas of the given size with the world origin at its centre.
    pub fn centered(width: u32, height: u32, scale: f64) -> Result<Self, RenderError> {
        let offset = Vec2::new(f64::from(width) / 2.0, f64::from(height) / 2.0);
        Self::new(width, height, scale, offset, 0.0, Rgba::new(1.0, 1.0, 1.0, 1.0))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn to_canvas(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.offset.x + self.scale * p.x, self.offset.y - self.scale * p.y)
    }
}

/// How a part's mesh is drawn: a single boundary loop when the mesh is a
/// topological disk, otherwise its triangles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartOutline {
    Loop(Vec<usize>),
    Triangles(Vec<[usize; 3]>),
}

pub fn part_outline(triangles: &[[usize; 3]]) -> PartOutline {
    use std::collections::BTreeMap;

    let fallback = || PartOutline::Triangles(triangles.to_vec());
    let mut undirected: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if undirected[&(a.min(b), a.max(b))] == 1 && next.insert(a, b).is_some() {
                return fallback();
            }
        }
    }
    let Some(&start) = next.keys().next() else {
        return fallback();
    };
    let mut ring = vec![start];
    let mut v = next[&start];
    while v != start {
        if ring.len() > next.len() {
            return fallback();
        }
        ring.push(v);
        match next.get(&v) {
            Some(&n) => v = n,
            None => return fallback(),
        }
    }
    if ring.len() != next.len() {
        return fallback();
    }
    PartOutline::Loop(ring)
}

fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn channel(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn paint(c: &Rgba) -> String {
    format!(
        "fill=\"rgb({},{},{})\" fill-opacity=\"{}\"",
        channel(c.0[0]),
        channel(c.0[1]),
        channel(c.0[2]),
        num(c.0[3].clamp(0.0, 1.0))
    )
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn polygon(out: &mut String, pts: impl Iterator<Item = Vec2>, style: &str) {
    let points: Vec<String> = pts.map(|p| format!("{},{}", num(p.x), num(p.y))).collect();
    let _ = writeln!(out, "    <polygon points=\"{}\" {style}/>", points.join(" "));
}

/// Renders `frame` as an SVG 1.1 document: a background `rect`, then one
/// group per part in draw order.
pub fn render_frame(frame: &BlendedFrame, opts: &RenderOptions) -> Vec<u8> {
    let (w, h) = (opts.width, opts.height);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        out,
        "  <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" {}/>",
        paint(&opts.background)
    );
    let stroke = if opts.stroke_width > 0.0 {
        format!(" stroke=\"rgb(0,0,0)\" stroke-width=\"{}\"", num(opts.stroke_width))
    } else {
        String::new()
    };
    for &i in &frame.draw_order {
        let part = &frame.parts[i];
        let style = format!("{}{stroke}", paint(&part.color));
        let _ = writeln!(out, "  <g id=\"part-{}\">", escape(&part.part_id));
        let at = |k: usize| opts.to_canvas(part.vertices[k]);
        match &*part.outline {
            PartOutline::Loop(ring) => polygon(&mut out, ring.iter().map(|&k| at(k)), &style),
            PartOutline::Triangles(tris) => {
                for t in tris {
                    polygon(&mut out, t.iter().map(|&k| at(k)), &style);
                }
            }
        }
        out.push_str("  </g>\n");
    }
    out.push_str("</svg>\n");
    out.into_bytes()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Views at `k·degrees_per_frame` about `axis` covering one full turn.
pub fn turntable_views(axis: Axis, degrees_per_frame: f64) -> Result<Vec<ViewRotation>, RenderError> {
    if !(degrees_per_frame > 0.0) || !degrees_per_frame.is_finite() {
        return Err(RenderError::BadStep(degrees_per_frame));
    }
    let count = (360.0 / degrees_per_frame - 1e-9).ceil() as usize;
    Ok((0..count)
        .map(|k| {
            let deg = k as f64 * degrees_per_frame;
            match axis {
                Axis::X => ViewRotation::about_x(deg),
                Axis::Y => ViewRotation::about_y(deg),
                Axis::Z => ViewRotation::about_z(deg),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TurntableError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

pub fn render_turntable(
    model: &Model25,
    axis: Axis,
    degrees_per_frame: f64,
    params: &BlendParams,
    opts: &RenderOptions,
) -> Result<Vec<Vec<u8>>, TurntableError> {
    let views = turntable_views(axis, degrees_per_frame)?;
    let ev = FrameEvaluator::new(model.clone(), ShapeOptions::default())?;
    Ok(views
        .iter()
        .map(|v| render_frame(&ev.evaluate(v, params), opts))
        .collect())
}
