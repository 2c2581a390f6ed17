//! Static SVG rendering of a frame. One user unit is one micrometre; the
//! y axis points up.

use std::fmt::Write as _;

use crate::geometry::Point2;
use crate::record::FrameRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub stroke: String,
    pub stroke_width: f64,
    pub driven_fill: String,
    pub driven_radius: f64,
    pub target_stroke: String,
    /// Fraction of the larger extent added on every side.
    pub margin_fraction: f64,
    pub targets: Vec<Vec<Point2>>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            stroke: "#1f4e9c".into(),
            stroke_width: 1.0,
            driven_fill: "#d62728".into(),
            driven_radius: 2.0,
            target_stroke: "#7f7f7f".into(),
            margin_fraction: 0.05,
            targets: Vec::new(),
        }
    }
}

fn bounds<'a>(points: impl Iterator<Item = &'a Point2>) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

fn points_attr(points: &[Point2]) -> String {
    let mut s = String::new();
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{},{}", p.x, p.y);
    }
    s
}

pub fn render_svg(frame: &FrameRecord, style: &SvgStyle) -> String {
    let (lo, hi) = bounds(frame.points.iter().chain(style.targets.iter().flatten()));
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1.0);
    let m = span * style.margin_fraction;
    let (x0, w) = (lo.x - m, hi.x - lo.x + 2.0 * m);
    // The flip maps y to -y, so the visible band is [-hi.y - m, -lo.y + m].
    let (y0, h) = (-hi.y - m, hi.y - lo.y + 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{x0} {y0} {w} {h}" width="{w}" height="{h}">"#
    );
    let _ = writeln!(s, r#"<title>frame {}</title>"#, frame.frame_index);
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    for t in &style.targets {
        let _ = writeln!(
            s,
            r#"<polyline class="target" points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-dasharray="2,2"/>"#,
            points_attr(t),
            style.target_stroke,
            style.stroke_width
        );
    }
    for c in 0..frame.chain_lengths.len() {
        let pts = frame.chain_points(c);
        if let [a, b] = pts {
            let _ = writeln!(
                s,
                r#"<line class="chain" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}"/>"#,
                a.x, a.y, b.x, b.y, style.stroke, style.stroke_width
            );
        } else {
            let _ = writeln!(
                s,
                r#"<polyline class="chain" points="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
                points_attr(pts),
                style.stroke,
                style.stroke_width
            );
        }
    }
    if let Some(p) = frame.driven.map(|g| frame.points[g]) {
        let _ = writeln!(
            s,
            r#"<circle class="driven" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            p.x, p.y, style.driven_radius, style.driven_fill
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}
