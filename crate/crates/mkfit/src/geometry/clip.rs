use super::{triangulate_unchecked, BBox, Point2, Polygon};
use crate::error::Result;

fn ring_area(v: &[Point2]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        s += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * s
}

fn tidy(mut ring: Vec<Point2>, tol: f64) -> Option<Vec<Point2>> {
    ring.dedup_by(|a, b| a.dist(*b) <= tol);
    while ring.len() > 1 && ring[0].dist(ring[ring.len() - 1]) <= tol {
        ring.pop();
    }
    if ring.len() < 3 {
        return None;
    }
    let scale = BBox::of(&ring).diagonal();
    if ring_area(&ring) <= 1e-14 * scale * scale {
        return None;
    }
    Some(ring)
}

/// Keeps the part of a simple CCW ring left of the directed line through
/// `a` with unit direction `dir`. Disconnected parts come back as separate
/// rings.
pub fn split_halfplane(ring: &[Point2], a: Point2, dir: Point2) -> Vec<Vec<Point2>> {
    let n = ring.len();
    if n < 3 {
        return Vec::new();
    }
    let bb = BBox::of(ring);
    let tol = 1e-12 * (bb.diagonal() + (bb.center() - a).norm()).max(f64::MIN_POSITIVE);
    let s: Vec<f64> = ring
        .iter()
        .map(|&v| {
            let d = dir.cross(v - a);
            if d.abs() <= tol {
                0.0
            } else {
                d
            }
        })
        .collect();
    if s.iter().all(|&x| x >= 0.0) {
        return if s.iter().any(|&x| x > 0.0) {
            vec![ring.to_vec()]
        } else {
            Vec::new()
        };
    }
    if s.iter().all(|&x| x <= 0.0) {
        return Vec::new();
    }

    let mut pts = Vec::with_capacity(n + 4);
    let mut ss = Vec::with_capacity(n + 4);
    for i in 0..n {
        let j = (i + 1) % n;
        pts.push(ring[i]);
        ss.push(s[i]);
        if s[i] * s[j] < 0.0 {
            let t = s[i] / (s[i] - s[j]);
            pts.push(ring[i] + (ring[j] - ring[i]) * t);
            ss.push(0.0);
        }
    }
    let m = pts.len();
    let inside: Vec<bool> = (0..m)
        .map(|i| {
            let j = (i + 1) % m;
            ss[i] >= 0.0
                && ss[j] >= 0.0
                && (ss[i] > 0.0 || ss[j] > 0.0 || dir.dot(pts[j] - pts[i]) > 0.0)
        })
        .collect();
    if inside.iter().all(|&b| b) {
        return tidy(pts, tol).into_iter().collect();
    }
    let Some(first) = (0..m).find(|&i| inside[i] && !inside[(i + m - 1) % m]) else {
        return Vec::new();
    };

    // Chains of consecutive kept edges; each starts and ends on the line.
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut k = 0;
    while k < m {
        let i = (first + k) % m;
        if inside[i] && !inside[(i + m - 1) % m] {
            let mut chain = vec![i];
            let mut e = i;
            while inside[e] {
                e = (e + 1) % m;
                chain.push(e);
                k += 1;
            }
            chains.push(chain);
        } else {
            k += 1;
        }
    }

    let t_of = |p: Point2| dir.dot(p - a);
    // (t, is_start, chain). Ends sort ahead of starts at equal t.
    let mut marks: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * chains.len());
    for (c, ch) in chains.iter().enumerate() {
        marks.push((t_of(pts[ch[0]]), true, c));
        marks.push((t_of(pts[*ch.last().unwrap()]), false, c));
    }
    marks.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    // Along the line the kept side is entered at an end and left at the next start.
    let mut next = vec![usize::MAX; chains.len()];
    let mut pending: std::collections::VecDeque<usize> = Default::default();
    let mut orphans = Vec::new();
    for &(_, is_start, c) in &marks {
        if is_start {
            match pending.pop_front() {
                Some(e) => next[e] = c,
                None => orphans.push(c),
            }
        } else {
            pending.push_back(c);
        }
    }
    for (e, s) in pending.into_iter().zip(orphans) {
        next[e] = s;
    }
    for (c, nx) in next.iter_mut().enumerate() {
        if *nx == usize::MAX {
            *nx = c;
        }
    }

    let mut used = vec![false; chains.len()];
    let mut out = Vec::new();
    for c0 in 0..chains.len() {
        if used[c0] {
            continue;
        }
        let mut ring = Vec::new();
        let mut c = c0;
        while !used[c] {
            used[c] = true;
            ring.extend(chains[c].iter().map(|&i| pts[i]));
            c = next[c];
        }
        if let Some(r) = tidy(ring, tol) {
            out.push(r);
        }
    }
    out
}

/// Sutherland-Hodgman step for a convex ring; keeps the left side.
pub(crate) fn clip_convex_halfplane(ring: &[Point2], a: Point2, dir: Point2, tol: f64) -> Vec<Point2> {
    let n = ring.len();
    let mut out = Vec::with_capacity(n + 1);
    if n == 0 {
        return out;
    }
    let s: Vec<f64> = ring.iter().map(|&v| dir.cross(v - a)).collect();
    if s.iter().all(|&x| x >= -tol) {
        return ring.to_vec();
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let (si, sj) = (s[i], s[j]);
        if si >= -tol {
            out.push(ring[i]);
        }
        if (si > tol && sj < -tol) || (si < -tol && sj > tol) {
            let t = si / (si - sj);
            out.push(ring[i] + (ring[j] - ring[i]) * t);
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

/// Intersection of two simple polygons as a list of pieces.
///
/// A convex operand is used as the clipper, so the subject is cut by one
/// half-plane per clipper edge. When neither is convex the clipper is
/// triangulated and the pieces of each triangle are returned.
pub fn clip(subject: &Polygon, clipper: &Polygon) -> Result<Vec<Polygon>> {
    if clipper.is_convex() {
        Ok(clip_by_convex(subject.vertices(), clipper.vertices())
            .into_iter()
            .map(Polygon::from_ccw_unchecked)
            .collect())
    } else if subject.is_convex() {
        clip(clipper, subject)
    } else {
        Ok(triangulate_unchecked(clipper)
            .into_iter()
            .flat_map(|t| clip_by_convex(subject.vertices(), &t.vertices()))
            .map(Polygon::from_ccw_unchecked)
            .collect())
    }
}

pub(crate) fn clip_by_convex(subject: &[Point2], convex: &[Point2]) -> Vec<Vec<Point2>> {
    let mut pieces = vec![subject.to_vec()];
    let n = convex.len();
    for i in 0..n {
        let a = convex[i];
        let d = (convex[(i + 1) % n] - a).normalized();
        if d == Point2::ZERO {
            continue;
        }
        pieces = pieces
            .iter()
            .flat_map(|p| split_halfplane(p, a, d))
            .collect();
        if pieces.is_empty() {
            break;
        }
    }
    pieces
}
