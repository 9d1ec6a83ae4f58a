//! Planar primitives: points, polygons, triangulation, clipping and
//! domain-clipped Voronoi cells.

mod clip;
mod voronoi;

pub use clip::{clip, split_halfplane};
pub use voronoi::{voronoi_cells, VoronoiCell};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

pub type Vec2 = Point2;

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Point2::new(r * theta.cos(), r * theta.sin())
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-d cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by a right angle.
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            Point2::ZERO
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    #[inline]
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Point2 {
    #[inline]
    fn sub_assign(&mut self, o: Point2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    #[inline]
    fn mul(self, p: Point2) -> Point2 {
        p * self
    }
}

impl Div<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn div(self, s: f64) -> Point2 {
        Point2::new(self.x / s, self.y / s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl std::iter::Sum for Point2 {
    fn sum<I: Iterator<Item = Point2>>(iter: I) -> Point2 {
        iter.fold(Point2::ZERO, |a, b| a + b)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn of(points: &[Point2]) -> BBox {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BBox { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> Point2 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        s += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * s
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o = |p: Point2, q: Point2, r: Point2| (q - p).cross(r - p);
    let on = |p: Point2, q: Point2, r: Point2| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let d1 = o(c, d, a);
    let d2 = o(c, d, b);
    let d3 = o(a, b, c);
    let d4 = o(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on(c, d, a))
        || (d2 == 0.0 && on(c, d, b))
        || (d3 == 0.0 && on(a, b, c))
        || (d4 == 0.0 && on(a, b, d))
}

/// Simple polygon with counter-clockwise vertex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for Polygon {
    type Error = Error;

    fn try_from(v: Vec<Point2>) -> Result<Polygon> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point2> {
    fn from(p: Polygon) -> Vec<Point2> {
        p.vertices
    }
}

impl Polygon {
    /// Validates and normalizes to counter-clockwise order.
    pub fn new(vertices: Vec<Point2>) -> Result<Polygon> {
        if vertices.len() < 3 {
            return Err(Error::arg(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::arg("polygon vertex is not finite"));
        }
        let mut vertices = vertices;
        let a = signed_area(&vertices);
        let diag = BBox::of(&vertices).diagonal();
        if a.abs() <= 1e-14 * diag * diag || diag == 0.0 {
            return Err(Error::Degenerate(format!("polygon area {a:e}")));
        }
        if a < 0.0 {
            vertices.reverse();
        }
        let poly = Polygon { vertices };
        if !poly.is_simple() {
            return Err(Error::Topology("edges intersect".into()));
        }
        Ok(poly)
    }

    /// Builds a polygon from (radius, angle) pairs.
    pub fn from_polar(rt: &[(f64, f64)]) -> Result<Polygon> {
        Polygon::new(rt.iter().map(|&(r, t)| Point2::from_polar(r, t)).collect())
    }

    /// Skips validation. Callers guarantee a simple CCW ring.
    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point2>) -> Polygon {
        Polygon { vertices }
    }

    pub fn unit_square() -> Polygon {
        Polygon::from_ccw_unchecked(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len();
        let mut c = Point2::ZERO;
        let mut a2 = 0.0;
        let o = self.vertices[0];
        for i in 0..n {
            let p = self.vertices[i] - o;
            let q = self.vertices[(i + 1) % n] - o;
            let w = p.cross(q);
            a2 += w;
            c += (p + q) * w;
        }
        o + c / (3.0 * a2)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        let scale = self.bbox().diagonal().powi(2);
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b - a).cross(c - b) >= -1e-12 * scale
        })
    }

    pub fn is_simple(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            if a == b {
                return false;
            }
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(a, b, v[j], v[(j + 1) % n]) {
                    return false;
                }
            }
        }
        true
    }

    /// Crossing-number point test; boundary points may land either way.
    pub fn contains(&self, p: Point2) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (v[i], v[j]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Euclidean distance from `p` to the closed polygon (0 inside).
    pub fn distance(&self, p: Point2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(v[i].dist(v[j]));
            }
        }
        d
    }
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Shoelace area of a validated polygon.
pub fn polygon_area(poly: &Polygon) -> Result<f64> {
    let a = poly.area();
    let d = poly.bbox().diagonal();
    if a <= 1e-14 * d * d {
        return Err(Error::Degenerate(format!("polygon area {a:e}")));
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub u: Point2,
    pub v: Point2,
    pub w: Point2,
}

impl Triangle {
    pub const fn new(u: Point2, v: Point2, w: Point2) -> Triangle {
        Triangle { u, v, w }
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * (self.v - self.u).cross(self.w - self.u)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point2 {
        (self.u + self.v + self.w) / 3.0
    }

    pub fn vertices(&self) -> [Point2; 3] {
        [self.u, self.v, self.w]
    }

    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.area() <= tol
    }
}

/// Triangulates a simple polygon: fan for convex input, ear clipping otherwise.
pub fn triangulate(poly: &Polygon) -> Result<Vec<Triangle>> {
    if !poly.is_simple() {
        return Err(Error::Topology("cannot triangulate".into()));
    }
    Ok(triangulate_unchecked(poly))
}

pub(crate) fn triangulate_unchecked(poly: &Polygon) -> Vec<Triangle> {
    let tol = 1e-14 * poly.area();
    let v = poly.vertices();
    let tris = if poly.is_convex() {
        (1..v.len() - 1)
            .map(|i| Triangle::new(v[0], v[i], v[i + 1]))
            .collect()
    } else {
        ear_clip(v)
    };
    tris.into_iter().filter(|t| t.area() > tol).collect()
}

fn ear_clip(v: &[Point2]) -> Vec<Triangle> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut out = Vec::with_capacity(v.len().saturating_sub(2));
    let inside = |p: Point2, a: Point2, b: Point2, c: Point2| {
        (b - a).cross(p - a) >= 0.0 && (c - b).cross(p - b) >= 0.0 && (a - c).cross(p - c) >= 0.0
    };
    while idx.len() > 3 {
        let m = idx.len();
        let mut ear = None;
        let mut best = (0, f64::NEG_INFINITY);
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (v[ia], v[ib], v[ic]);
            let turn = (b - a).cross(c - b);
            if turn > best.1 {
                best = (k, turn);
            }
            if turn <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != ia && j != ib && j != ic && {
                    let p = v[j];
                    p != a && p != b && p != c && inside(p, a, b, c)
                }
            });
            if !blocked {
                ear = Some(k);
                break;
            }
        }
        // Rounding can hide every ear; the sharpest convex corner is the safest cut.
        let k = ear.unwrap_or(best.0);
        let m = idx.len();
        out.push(Triangle::new(
            v[idx[(k + m - 1) % m]],
            v[idx[k]],
            v[idx[(k + 1) % m]],
        ));
        idx.remove(k);
    }
    out.push(Triangle::new(v[idx[0]], v[idx[1]], v[idx[2]]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> Polygon {
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|k| {
                let r = 0.3 + 0.7 * (((k + 1) % 2) as f64);
                (r, 2.0 * std::f64::consts::PI * k as f64 / 12.0)
            })
            .collect();
        Polygon::from_polar(&pts).unwrap()
    }

    fn chevron() -> Polygon {
        Polygon::new(vec![
            Point2::new(-1.0, -0.75),
            Point2::new(0.0, 0.75),
            Point2::new(1.0, -0.75),
            Point2::new(0.0, -0.25),
        ])
        .unwrap()
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&Polygon::unit_square()).unwrap(), 1.0);
        let t = Polygon::new(vec![Point2::new(0., 0.), Point2::new(1., 0.), Point2::new(0., 1.)]).unwrap();
        assert_eq!(polygon_area(&t).unwrap(), 0.5);
    }

    #[test]
    fn star_area_matches_triangle_sum() {
        let s = star();
        let tri: f64 = triangulate(&s).unwrap().iter().map(Triangle::area).sum();
        // twelve center triangles with sides 1 and 0.3 meeting at angle pi/6
        let exact = 12.0 * 0.5 * 0.3 * (std::f64::consts::PI / 6.0).sin();
        assert!((s.area() - exact).abs() < 1e-14);
        assert!((tri - s.area()).abs() < 1e-12);
    }

    #[test]
    fn orientation_is_normalized() {
        let c = chevron();
        assert!(signed_area(c.vertices()) > 0.0);
        assert!((c.area() - 1.0).abs() < 1e-15);
        assert!(!c.is_convex());
    }

    #[test]
    fn quad_fans_into_two() {
        let q = Polygon::new(vec![
            Point2::new(0., 0.),
            Point2::new(2., 0.),
            Point2::new(2.5, 1.),
            Point2::new(0., 1.5),
        ])
        .unwrap();
        let t = triangulate(&q).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|t| t.u == q.vertices()[0]));
        let s: f64 = t.iter().map(Triangle::area).sum();
        assert!((s - q.area()).abs() < 1e-12);
    }

    #[test]
    fn chevron_ear_clipping_conserves_area() {
        let c = chevron();
        let t = triangulate(&c).unwrap();
        assert_eq!(t.len(), 2);
        let s: f64 = t.iter().map(Triangle::area).sum();
        assert!((s - c.area()).abs() < 1e-12 * c.area());
        assert!(t.iter().all(|t| t.signed_area() > 0.0));
    }

    #[test]
    fn rejects_bowtie() {
        let r = Polygon::new(vec![
            Point2::new(0., 0.),
            Point2::new(2., 2.),
            Point2::new(2., 0.),
            Point2::new(0., 1.),
        ]);
        assert!(matches!(r, Err(Error::Topology(_))));
    }

    #[test]
    fn rejects_degenerate() {
        let r = Polygon::new(vec![Point2::new(0., 0.), Point2::new(1., 1.), Point2::new(2., 2.)]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn point_tests() {
        let c = chevron();
        assert!(c.contains(Point2::new(0.0, 0.0)));
        assert!(!c.contains(Point2::new(0.0, -0.5)));
        assert!((c.distance(Point2::new(0.0, 1.75)) - 1.0).abs() < 1e-12);
    }
}
