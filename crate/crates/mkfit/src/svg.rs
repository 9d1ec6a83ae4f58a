//! Frame rendering: curve in blue, cell edges in red, barycenters in green.

use crate::evolve::FrameRecord;
use crate::geometry::{BBox, Point2, Polygon};
use std::fmt::Write;

/// Side of the square viewport in SVG units.
pub const VIEWPORT: f64 = 1000.0;
const MARGIN: f64 = 20.0;

/// Maps the domain's bounding box into the viewport, keeping aspect ratio
/// and flipping y so that up is up.
#[derive(Debug, Clone, Copy)]
pub struct ViewTransform {
    scale: f64,
    center: Point2,
}

impl ViewTransform {
    pub fn fit(bbox: &BBox) -> Self {
        let span = bbox.width().max(bbox.height());
        let scale = if span > 0.0 { (VIEWPORT - 2.0 * MARGIN) / span } else { 1.0 };
        ViewTransform { scale, center: bbox.center() }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new(
            VIEWPORT / 2.0 + (p.x - self.center.x) * self.scale,
            VIEWPORT / 2.0 - (p.y - self.center.y) * self.scale,
        )
    }
}

fn path(points: &[Point2], view: &ViewTransform, closed: bool) -> String {
    let mut d = String::with_capacity(points.len() * 16);
    for (i, p) in points.iter().enumerate() {
        let q = view.apply(*p);
        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, q.x, q.y);
    }
    if closed {
        d.push_str(" Z");
    }
    d
}

/// SVG document for one frame.
pub fn render_frame(frame: &FrameRecord, domain: &Polygon) -> String {
    let view = ViewTransform::fit(&domain.bbox());
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{v}" height="{v}" viewBox="0 0 {v} {v}">"#,
        v = VIEWPORT
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, path(domain.vertices(), &view, true));
    let mut cells = String::new();
    for piece in frame.cells.iter().flat_map(|c| &c.pieces) {
        cells.push_str(&path(piece.vertices(), &view, true));
        cells.push(' ');
    }
    let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="red" stroke-width="0.3"/>"#, cells.trim_end());
    let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="blue" stroke-width="1"/>"#, path(&frame.samples, &view, false));
    let _ = writeln!(s, r#"<g fill="green">"#);
    for b in &frame.barycenters {
        let q = view.apply(*b);
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.2"/>"#, q.x, q.y);
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::voronoi_cells;

    #[test]
    fn bbox_corners_land_inside_viewport() {
        let sq = Polygon::unit_square();
        let v = ViewTransform::fit(&sq.bbox());
        let a = v.apply(Point2::new(0.0, 0.0));
        let b = v.apply(Point2::new(1.0, 1.0));
        assert_eq!((a.x, a.y), (MARGIN, VIEWPORT - MARGIN));
        assert_eq!((b.x, b.y), (VIEWPORT - MARGIN, MARGIN));
    }

    #[test]
    fn frame_has_all_layers() {
        let sq = Polygon::unit_square();
        let samples = vec![Point2::new(0.25, 0.5), Point2::new(0.75, 0.5)];
        let cells = voronoi_cells(&samples, &sq).unwrap();
        let frame = FrameRecord { iteration: 0, samples: samples.clone(), cells, barycenters: samples };
        let svg = render_frame(&frame, &sq);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("stroke=\"red\"") && svg.contains("stroke=\"blue\""));
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
