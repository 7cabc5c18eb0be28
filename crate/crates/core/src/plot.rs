//! Minimal SVG 1.1 scatter plots.
//!
//! Output depends only on the input values: coordinates are printed with a
//! fixed number of decimals and nothing else (time, randomness) is embedded.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    /// Any SVG color, e.g. `"#1f77b4"` or `"black"`.
    pub color: String,
    pub radius: f64,
    pub opacity: f64,
}

impl Style {
    pub fn new(color: &str, radius: f64, opacity: f64) -> Self {
        Style { color: color.to_string(), radius, opacity }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Points(Vec<[f64; 2]>),
    /// Line segments, e.g. `x -> T(x)` arrows without heads.
    Segments(Vec<([f64; 2], [f64; 2])>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub label: String,
    pub shape: Shape,
    pub style: Style,
}

impl Layer {
    pub fn points(label: &str, points: Vec<[f64; 2]>, style: Style) -> Self {
        Layer { label: label.to_string(), shape: Shape::Points(points), style }
    }

    pub fn segments(label: &str, segments: Vec<([f64; 2], [f64; 2])>, style: Style) -> Self {
        Layer { label: label.to_string(), shape: Shape::Segments(segments), style }
    }

    fn coords(&self) -> Box<dyn Iterator<Item = [f64; 2]> + '_> {
        match &self.shape {
            Shape::Points(p) => Box::new(p.iter().copied()),
            Shape::Segments(s) => Box::new(s.iter().flat_map(|(a, b)| [*a, *b])),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render layers into an SVG document; earlier layers are drawn first.
pub fn scatter_svg(layers: &[Layer]) -> Result<String> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for layer in layers {
        if !(layer.style.radius.is_finite() && layer.style.opacity.is_finite()) {
            return Err(Error::NonFinite("plot style"));
        }
        for p in layer.coords() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::NonFinite("plot coordinates"));
            }
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    if lo[0] > hi[0] {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    // Equal scale on both axes, centered.
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let cx = 0.5 * (lo[0] + hi[0]);
    let cy = 0.5 * (lo[1] + hi[1]);
    let map = |p: [f64; 2]| (SIZE / 2.0 + (p[0] - cx) * scale, SIZE / 2.0 - (p[1] - cy) * scale);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    for (k, layer) in layers.iter().enumerate() {
        let st = &layer.style;
        let color = escape(&st.color);
        let _ = writeln!(svg, r#"<g id="layer-{k}" opacity="{:.3}">"#, st.opacity);
        let _ = writeln!(svg, "<title>{}</title>", escape(&layer.label));
        match &layer.shape {
            Shape::Points(points) => {
                for &p in points {
                    let (x, y) = map(p);
                    let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="{color}"/>"#, st.radius);
                }
            }
            Shape::Segments(segs) => {
                for &(a, b) in segs {
                    let (x1, y1) = map(a);
                    let (x2, y2) = map(b);
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{:.2}"/>"#,
                        st.radius
                    );
                }
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

pub fn render_scatter(layers: &[Layer], out: &Path) -> Result<()> {
    std::fs::write(out, scatter_svg(layers)?)?;
    Ok(())
}
