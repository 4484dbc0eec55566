use std::fmt::Write;

use super::GraphDocument;
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    /// Square canvas side in pixels.
    pub canvas: f64,
    /// Fraction of the canvas kept free on each side.
    pub margin: f64,
    pub background: String,
    pub border_width: f64,
    pub label_size: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            canvas: 1200.0,
            margin: 0.05,
            background: "#F7F7F7".to_string(),
            border_width: 3.0,
            label_size: 14.0,
        }
    }
}

const LABEL_COLOR: &str = "#404040";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
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

/// Uniform scale-and-center from layout units to canvas pixels.
struct Viewport {
    scale: f64,
    offset: Point,
}

impl Viewport {
    fn fit(doc: &GraphDocument, opts: &SvgOptions) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for n in &doc.nodes {
            let (p, r) = (n.position, n.radius);
            lo = Point::new(lo.x.min(p.x - r), lo.y.min(p.y - r));
            hi = Point::new(hi.x.max(p.x + r), hi.y.max(p.y + r));
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        if !(extent.is_finite() && extent > 0.0) {
            return Self {
                scale: 1.0,
                offset: Point::new(opts.canvas / 2.0, opts.canvas / 2.0),
            };
        }
        let scale = opts.canvas * (1.0 - 2.0 * opts.margin) / extent;
        let mid = (lo + hi) * 0.5;
        Self {
            scale,
            offset: Point::new(opts.canvas / 2.0, opts.canvas / 2.0) - mid * scale,
        }
    }

    fn map(&self, p: Point) -> Point {
        self.offset + p * self.scale
    }
}

/// Standalone SVG 1.1 rendering: edges beneath nodes, labels under each node.
pub fn export_svg(doc: &GraphDocument, opts: &SvgOptions) -> String {
    let view = Viewport::fit(doc, opts);
    let size = opts.canvas;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size:.0}" height="{size:.0}" viewBox="0 0 {size:.0} {size:.0}">"#
    );
    let _ = writeln!(
        s,
        r#"  <rect x="0" y="0" width="{size:.0}" height="{size:.0}" fill="{}"/>"#,
        opts.background
    );

    let _ = writeln!(s, r#"  <g id="edges" stroke-linecap="round">"#);
    for e in &doc.edges {
        let (Some(na), Some(nb)) = (doc.nodes.get(e.source), doc.nodes.get(e.target)) else {
            continue;
        };
        let (a, b) = (view.map(na.position), view.map(nb.position));
        let _ = writeln!(
            s,
            r#"    <line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{}" stroke-width="{:.3}" data-pair="{}-{}"/>"#,
            a.x, a.y, b.x, b.y, e.color.hex, e.width, e.source, e.target
        );
    }
    let _ = writeln!(s, "  </g>");

    let _ = writeln!(s, r#"  <g id="nodes" font-family="sans-serif" font-size="{:.0}" text-anchor="middle">"#, opts.label_size);
    for n in &doc.nodes {
        let c = view.map(n.position);
        let r = n.radius * view.scale;
        let name = escape(&n.name);
        let _ = writeln!(
            s,
            r#"    <circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="{hex}" fill-opacity="0.35" stroke="{hex}" stroke-width="{:.0}" data-subject="{}"><title>{name} ({} images)</title></circle>"#,
            c.x,
            c.y,
            r,
            opts.border_width,
            n.subject_id,
            n.image_count,
            hex = n.border_color.hex,
        );
        let label_y = (c.y + r + opts.border_width + opts.label_size).min(size - 2.0);
        let _ = writeln!(
            s,
            r#"    <text x="{:.3}" y="{:.3}" fill="{LABEL_COLOR}">{name}</text>"#,
            c.x, label_y
        );
    }
    let _ = writeln!(s, "  </g>");
    s.push_str("</svg>\n");
    s
}
