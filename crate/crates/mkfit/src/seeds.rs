//! Initial curves: Hilbert polylines and their mollifications, spanning walks
//! over an epsilon-cover, closed-form seeds, and cost-inflating
//! reparametrizations.

use crate::error::{Error, Result};
use crate::functional::{sobolev_cost, SobolevParams};
use crate::geometry::{point_segment_distance, BBox, Point2, Polygon};
use crate::measure::TargetMeasure;
use crate::spline::{fit_cubic, SampledCurve};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// Hilbert polyline fitted to the domain's bounding box, then mollified.
    Hilbert {
        order: u32,
        #[serde(default)]
        mollify_width: f64,
    },
    SpanningWalk { epsilon: f64 },
    /// `(t, amplitude sin(frequency t))` for `t` evenly spaced in `[-half_width, half_width]`.
    Sinusoid { amplitude: f64, frequency: f64, half_width: f64, n_samples: usize },
    /// `(t, slope t)` for `t` evenly spaced in `[-half_width, half_width]`.
    Linear { slope: f64, half_width: f64, n_samples: usize },
    /// Independent draws from the target measure, in draw order.
    Random { n_samples: usize },
    Explicit { points: Vec<Point2> },
}

impl SeedSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() { Ok(()) } else { Err(Error::arg(format!("seed.{name} must be positive, got {v}"))) }
        };
        match self {
            SeedSpec::Hilbert { order, mollify_width } => {
                if !(1..=12).contains(order) {
                    return Err(Error::arg(format!("seed.order must lie in 1..=12, got {order}")));
                }
                if !(*mollify_width >= 0.0) {
                    return Err(Error::arg("seed.mollify_width must be >= 0"));
                }
                Ok(())
            }
            SeedSpec::SpanningWalk { epsilon } => pos("epsilon", *epsilon),
            SeedSpec::Sinusoid { half_width, n_samples, amplitude, frequency } => {
                pos("half_width", *half_width)?;
                if !(amplitude.is_finite() && frequency.is_finite()) {
                    return Err(Error::arg("seed amplitude and frequency must be finite"));
                }
                if *n_samples < 2 {
                    return Err(Error::arg("seed.n_samples must be at least 2"));
                }
                Ok(())
            }
            SeedSpec::Linear { slope, half_width, n_samples } => {
                pos("half_width", *half_width)?;
                if !slope.is_finite() {
                    return Err(Error::arg("seed.slope must be finite"));
                }
                if *n_samples < 2 {
                    return Err(Error::arg("seed.n_samples must be at least 2"));
                }
                Ok(())
            }
            SeedSpec::Random { n_samples } => {
                if *n_samples < 2 {
                    return Err(Error::arg("seed.n_samples must be at least 2"));
                }
                Ok(())
            }
            SeedSpec::Explicit { points } => {
                if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
                    return Err(Error::arg("explicit seed needs finite points"));
                }
                Ok(())
            }
        }
    }

    /// Builds the seed polyline for a target on `domain`.
    pub fn build(&self, domain: &Polygon, measure: &TargetMeasure, rng_seed: u64) -> Result<Vec<Point2>> {
        self.validate()?;
        let grid = |h: f64, n: usize| (0..n).map(move |i| -h + 2.0 * h * i as f64 / (n - 1) as f64);
        Ok(match self {
            SeedSpec::Hilbert { order, mollify_width } => {
                let pts = fit_to_bbox(&hilbert_seed(*order)?, &domain.bbox());
                mollify(&pts, *mollify_width)
            }
            SeedSpec::SpanningWalk { epsilon } => spanning_walk_seed(domain, *epsilon)?,
            SeedSpec::Sinusoid { amplitude, frequency, half_width, n_samples } => {
                grid(*half_width, *n_samples).map(|t| Point2::new(t, amplitude * (frequency * t).sin())).collect()
            }
            SeedSpec::Linear { slope, half_width, n_samples } => {
                grid(*half_width, *n_samples).map(|t| Point2::new(t, slope * t)).collect()
            }
            SeedSpec::Random { n_samples } => measure.sample(*n_samples, rng_seed),
            SeedSpec::Explicit { points } => points.clone(),
        })
    }
}

fn d2xy(order: u32, d: u64) -> (u64, u64) {
    let (mut x, mut y) = (0u64, 0u64);
    let mut t = d;
    let mut s = 1u64;
    while s < (1 << order) {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x, y)
}

/// Vertices of the order-`order` Hilbert polyline in the unit square, with
/// consecutive vertices `1/(2^order - 1)` apart.
pub fn hilbert_seed(order: u32) -> Result<Vec<Point2>> {
    if !(1..=12).contains(&order) {
        return Err(Error::arg(format!("Hilbert order must lie in 1..=12, got {order}")));
    }
    let side = ((1u64 << order) - 1) as f64;
    Ok((0..1u64 << (2 * order))
        .map(|d| {
            let (x, y) = d2xy(order, d);
            Point2::new(x as f64 / side, y as f64 / side)
        })
        .collect())
}

/// Maps unit-square points onto the box.
pub fn fit_to_bbox(points: &[Point2], bbox: &BBox) -> Vec<Point2> {
    points
        .iter()
        .map(|p| Point2::new(bbox.min.x + p.x * bbox.width(), bbox.min.y + p.y * bbox.height()))
        .collect()
}

/// Convolves the polyline, parametrized on `[0, 1]` at uniform spacing, with
/// the bump `exp(-1/(1 - x^2))` of half-width `theta`. Parameters outside
/// `[0, 1]` are clamped to the ends.
pub fn mollify(points: &[Point2], theta: f64) -> Vec<Point2> {
    let n = points.len();
    if n < 2 || !(theta > 0.0) {
        return points.to_vec();
    }
    let dt = 1.0 / (n - 1) as f64;
    let k = (theta / dt).floor() as usize;
    if k == 0 {
        return points.to_vec();
    }
    let w: Vec<f64> = (0..=k)
        .map(|j| {
            let x = j as f64 * dt / theta;
            if x >= 1.0 { 0.0 } else { (-1.0 / (1.0 - x * x)).exp() }
        })
        .collect();
    let norm = w[0] + 2.0 * w[1..].iter().sum::<f64>();
    // offsets of n or more clamp to both ends for every i
    let reach = k.min(n - 1);
    let ends = (points[0] + points[n - 1]) * w[reach + 1..].iter().sum::<f64>();
    let last = n as isize - 1;
    (0..n as isize)
        .into_par_iter()
        .map(|i| {
            let mut acc = points[i as usize] * w[0] + ends;
            for (j, wj) in w.iter().enumerate().take(reach + 1).skip(1) {
                let j = j as isize;
                acc += (points[(i - j).clamp(0, last) as usize] + points[(i + j).clamp(0, last) as usize]) * *wj;
            }
            acc / norm
        })
        .collect()
}

/// Cover points, tree and walk of the spanning-walk construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningWalk {
    /// Every domain point lies within epsilon of some cover point.
    pub cover: Vec<Point2>,
    /// Minimum spanning tree edges as cover indices.
    pub tree: Vec<(usize, usize)>,
    /// Cover indices in visiting order.
    pub walk: Vec<usize>,
}

/// Square-grid epsilon-cover, its minimum spanning tree, and a walk that
/// traverses every tree edge twice except those on a longest path, which it
/// traverses once.
pub fn spanning_walk(domain: &Polygon, epsilon: f64) -> Result<SpanningWalk> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::arg(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon >= domain.diameter() {
        return Ok(SpanningWalk { cover: vec![domain.vertices()[0]], tree: vec![], walk: vec![0] });
    }
    let s = epsilon * std::f64::consts::SQRT_2;
    let bb = domain.bbox();
    let c = bb.center();
    let nx = (bb.width() / s).ceil().max(1.0) as usize;
    let ny = (bb.height() / s).ceil().max(1.0) as usize;
    let mut cover = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let g = Point2::new(
                c.x + (ix as f64 - (nx - 1) as f64 / 2.0) * s,
                c.y + (iy as f64 - (ny - 1) as f64 / 2.0) * s,
            );
            if domain.distance(g) <= epsilon {
                cover.push(g);
            }
        }
    }
    let m = cover.len();
    let tree = prim(&cover);
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in &tree {
        adj[a].push(b);
        adj[b].push(a);
    }
    // longest path: farthest from 0, then farthest from that
    let far = |src: usize| {
        let mut prev = vec![usize::MAX; m];
        let mut depth = vec![usize::MAX; m];
        depth[src] = 0;
        let mut stack = vec![src];
        let mut best = src;
        while let Some(v) = stack.pop() {
            if depth[v] > depth[best] {
                best = v;
            }
            for &w in &adj[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    prev[w] = v;
                    stack.push(w);
                }
            }
        }
        (best, prev)
    };
    let (a, _) = far(0);
    let (b, prev) = far(a);
    let mut on_path = vec![false; m];
    let mut v = b;
    on_path[v] = true;
    while v != a {
        v = prev[v];
        on_path[v] = true;
    }
    let mut walk = Vec::with_capacity(2 * m);
    visit(a, usize::MAX, &adj, &on_path, &mut walk);
    Ok(SpanningWalk { cover, tree, walk })
}

/// Depth-first tour from `v`; the path child goes last and is never left.
fn visit(v: usize, parent: usize, adj: &[Vec<usize>], on_path: &[bool], walk: &mut Vec<usize>) {
    walk.push(v);
    let mut path_child = None;
    for &w in &adj[v] {
        if w == parent {
            continue;
        }
        if on_path[w] {
            path_child = Some(w);
            continue;
        }
        visit(w, v, adj, on_path, walk);
        walk.push(v);
    }
    if let Some(w) = path_child {
        visit(w, v, adj, on_path, walk);
    }
}

fn prim(pts: &[Point2]) -> Vec<(usize, usize)> {
    let m = pts.len();
    if m < 2 {
        return vec![];
    }
    let mut in_tree = vec![false; m];
    let mut best = vec![(f64::INFINITY, 0usize); m];
    in_tree[0] = true;
    for j in 1..m {
        best[j] = (pts[0].dist(pts[j]), 0);
    }
    let mut edges = Vec::with_capacity(m - 1);
    for _ in 1..m {
        let (j, _) = (0..m)
            .filter(|&j| !in_tree[j])
            .map(|j| (j, best[j].0))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("vertex left");
        in_tree[j] = true;
        edges.push((best[j].1, j));
        for i in 0..m {
            if !in_tree[i] {
                let d = pts[j].dist(pts[i]);
                if d < best[i].0 {
                    best[i] = (d, j);
                }
            }
        }
    }
    edges
}

/// Smooth step `e^(-1/t) / (e^(-1/t) + e^(-1/(1-t)))`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

const STEP_SAMPLES: usize = 8;

/// Spanning walk joined by smooth steps, as a dense polyline.
pub fn spanning_walk_seed(domain: &Polygon, epsilon: f64) -> Result<Vec<Point2>> {
    let sw = spanning_walk(domain, epsilon)?;
    let mut out = Vec::with_capacity(sw.walk.len() * STEP_SAMPLES + 1);
    for w in sw.walk.windows(2) {
        let (a, b) = (sw.cover[w[0]], sw.cover[w[1]]);
        for j in 0..STEP_SAMPLES {
            out.push(a.lerp(b, smooth_step(j as f64 / STEP_SAMPLES as f64)));
        }
    }
    out.push(sw.cover[*sw.walk.last().expect("nonempty walk")]);
    Ok(out)
}

/// Hausdorff distance between a resampled image and the original: each
/// new sample against the original polyline, each original sample against
/// the new sample set.
pub fn image_hausdorff(new: &[Point2], original: &[Point2]) -> f64 {
    let to_polyline = |p: Point2| {
        if original.len() == 1 {
            return p.dist(original[0]);
        }
        original.windows(2).map(|s| point_segment_distance(p, s[0], s[1])).fold(f64::INFINITY, f64::min)
    };
    let to_set = |p: Point2| new.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min);
    let a = new.par_iter().map(|&p| to_polyline(p)).reduce(|| 0.0, f64::max);
    let b = original.par_iter().map(|&p| to_set(p)).reduce(|| 0.0, f64::max);
    a.max(b)
}

/// Relative tolerance of the bisection in [`bad_reparametrization`].
const REPARAM_TOL: f64 = 2.5e-3;

/// Resamples the natural cubic through the samples at warped parameters so
/// the Sobolev cost reaches `target_cost`.
///
/// For `k = 1` the warp oscillates, `t_i = i + a sin(2 pi m i/(N-1))` with
/// `m = floor((N-1)/4)`, and the amplitude `a` is doubled until it brackets
/// the target and then bisected. For `k >= 2` the warp is monotone,
/// `phi_s(u) = u - s sin(2 pi m u)/(2 pi m)`, which compresses samples into
/// plateaus as `s -> 1`; `m` doubles from 1 until the target is reachable.
pub fn bad_reparametrization(curve: &SampledCurve, params: &SobolevParams, target_cost: f64) -> Result<SampledCurve> {
    let pts = &curve.points;
    let n = pts.len();
    let current = sobolev_cost(pts, params)?.total;
    if !(target_cost >= current * (1.0 - 1e-12)) {
        return Err(Error::arg(format!("target cost {target_cost} is below the current cost {current}")));
    }
    if (target_cost - current).abs() <= REPARAM_TOL * target_cost {
        return Ok(curve.clone());
    }
    let cubic = fit_cubic(pts)?;
    let last = (n - 1) as f64;
    let warp = |ts: Vec<f64>| -> Vec<Point2> { ts.into_iter().map(|t| cubic.eval(t.clamp(0.0, last))).collect() };
    let cost_of = |p: &[Point2]| sobolev_cost(p, params).map(|c| c.total);
    let done = |p: Vec<Point2>| Ok(SampledCurve::from_points(p, curve.spacing));

    let bisect = |f: &dyn Fn(f64) -> Result<(f64, Vec<Point2>)>, mut lo: f64, mut hi: f64| -> Result<Option<Vec<Point2>>> {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (c, p) = f(mid)?;
            if (c - target_cost).abs() <= REPARAM_TOL * target_cost {
                return Ok(Some(p));
            }
            if c < target_cost {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(None)
    };

    if params.k == 1 {
        let m = ((n - 1) / 4).max(1) as f64;
        let f = |a: f64| -> Result<(f64, Vec<Point2>)> {
            let p = warp((0..n).map(|i| i as f64 + a * (2.0 * PI * m * i as f64 / last).sin()).collect());
            Ok((cost_of(&p)?, p))
        };
        let mut a = 0.5;
        while a <= last {
            let (c, p) = f(a)?;
            if (c - target_cost).abs() <= REPARAM_TOL * target_cost {
                return done(p);
            }
            if c > target_cost {
                if let Some(p) = bisect(&f, 0.0, a)? {
                    return done(p);
                }
                break;
            }
            a *= 2.0;
        }
    } else {
        let mut m = 1usize;
        while 4 * m <= n - 1 {
            let w = 2.0 * PI * m as f64;
            let f = |s: f64| -> Result<(f64, Vec<Point2>)> {
                let p = warp((0..n).map(|i| {
                    let u = i as f64 / last;
                    (u - s * (w * u).sin() / w) * last
                }).collect());
                Ok((cost_of(&p)?, p))
            };
            let (c, _) = f(0.999)?;
            if c >= target_cost {
                if let Some(p) = bisect(&f, 0.0, 0.999)? {
                    return done(p);
                }
            }
            m *= 2;
        }
    }
    Err(Error::Numerical(format!("could not reach Sobolev cost {target_cost} from {current}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::objective;
    use crate::spline::arclength_resample;

    #[test]
    fn hilbert_shape() {
        let h1 = hilbert_seed(1).unwrap();
        assert_eq!(h1, vec![Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 1.0), Point2::new(1.0, 0.0)]);
        for o in [2, 3, 5] {
            let h = hilbert_seed(o).unwrap();
            assert_eq!(h.len(), 1 << (2 * o));
            let step = 1.0 / ((1u32 << o) - 1) as f64;
            assert!(h.windows(2).all(|w| (w[0].dist(w[1]) - step).abs() < 1e-12));
        }
        assert!(hilbert_seed(0).is_err() && hilbert_seed(13).is_err());
    }

    #[test]
    fn finer_hilbert_fills_better() {
        let rho = TargetMeasure::uniform(Polygon::unit_square());
        let o4 = objective(&hilbert_seed(4).unwrap(), &rho, 2.0).unwrap();
        let o8 = objective(&hilbert_seed(8).unwrap(), &rho, 2.0).unwrap();
        assert!(o8 < o4);
    }

    #[test]
    fn mollify_limits_and_linearity() {
        let pts: Vec<Point2> = (0..50).map(|i| Point2::new(i as f64, (i * i % 7) as f64)).collect();
        assert_eq!(mollify(&pts, 0.0), pts);
        let wide = mollify(&pts, 1e4);
        let spread = wide.iter().map(|p| p.dist(wide[0])).fold(0.0, f64::max);
        assert!(spread < 1e-2, "{spread}");
        let shift = Point2::new(3.0, -1.0);
        let moved: Vec<Point2> = pts.iter().map(|p| *p + shift).collect();
        for (a, b) in mollify(&moved, 0.1).iter().zip(mollify(&pts, 0.1)) {
            assert!(a.dist(b + shift) < 1e-12);
        }
        let double: Vec<Point2> = pts.iter().map(|p| *p * 2.0).collect();
        for (a, b) in mollify(&double, 0.1).iter().zip(mollify(&pts, 0.1)) {
            assert!(a.dist(b * 2.0) < 1e-12);
        }
    }

    #[test]
    fn tiny_cover() {
        let sw = spanning_walk(&Polygon::unit_square(), 0.75).unwrap();
        assert!(sw.cover.len() <= 4 && sw.walk.len() <= 5);
        let one = spanning_walk(&Polygon::unit_square(), 2.0).unwrap();
        assert_eq!(one.walk.len(), 1);
        assert_eq!(spanning_walk_seed(&Polygon::unit_square(), 2.0).unwrap().len(), 1);
    }

    #[test]
    fn walk_visits_all_and_is_short() {
        for eps in [0.3, 0.2, 0.1] {
            let sw = spanning_walk(&Polygon::unit_square(), eps).unwrap();
            let m = sw.cover.len();
            let mut seen = vec![false; m];
            for &v in &sw.walk {
                seen[v] = true;
            }
            assert!(seen.iter().all(|&s| s));
            assert!(sw.walk.len() <= 2 * m - 3);
            assert!(sw.walk.windows(2).all(|w| sw.tree.contains(&(w[0], w[1])) || sw.tree.contains(&(w[1], w[0]))));
        }
    }

    #[test]
    fn walk_seed_guarantee() {
        let sq = Polygon::unit_square();
        let seed = spanning_walk_seed(&sq, 0.1).unwrap();
        assert!(objective(&seed, &TargetMeasure::uniform(sq), 2.0).unwrap() <= 0.01);
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        assert!((smooth_step(0.3) + smooth_step(0.7) - 1.0).abs() < 1e-15);
    }

    fn sinusoid_samples(delta: f64) -> SampledCurve {
        let knots: Vec<Point2> = (0..200).map(|i| {
            let t = -0.3 + 0.6 * i as f64 / 199.0;
            Point2::new(t, 0.1 * (8.0 * t).sin())
        }).collect();
        arclength_resample(&fit_cubic(&knots).unwrap(), delta).unwrap()
    }

    #[test]
    fn reparametrization_hits_targets() {
        let delta = 0.01;
        let curve = sinusoid_samples(delta);
        for k in [1, 2] {
            let params = SobolevParams::new(k, 2.0, false).unwrap();
            let c0 = sobolev_cost(&curve.points, &params).unwrap().total;
            let same = bad_reparametrization(&curve, &params, c0).unwrap();
            assert_eq!(same.points, curve.points);
            for f in [1.5, 2.0, 4.0] {
                let out = bad_reparametrization(&curve, &params, f * c0).unwrap();
                let c = sobolev_cost(&out.points, &params).unwrap().total;
                assert!((c / (f * c0) - 1.0).abs() < 0.01, "k={k} f={f}: {c} vs {}", f * c0);
                let hd = image_hausdorff(&out.points, &curve.points);
                assert!(hd < 2.0 * delta, "k={k} f={f}: hausdorff {hd}");
            }
            assert!(bad_reparametrization(&curve, &params, 0.5 * c0).is_err());
        }
    }
}
