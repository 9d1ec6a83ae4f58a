use super::arclen::segment_arclength;
use crate::error::{Error, Result};
use crate::geometry::{Point2, Vec2};
use rayon::prelude::*;

/// One cubic piece `a + b t + c t^2 + d t^3` on `t in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicSegment {
    pub a: Point2,
    pub b: Vec2,
    pub c: Vec2,
    pub d: Vec2,
}

impl CubicSegment {
    pub fn line(p: Point2, q: Point2) -> Self {
        CubicSegment { a: p, b: q - p, c: Vec2::ZERO, d: Vec2::ZERO }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Point2 {
        self.a + (self.b + (self.c + self.d * t) * t) * t
    }

    #[inline]
    pub fn deriv(&self, t: f64) -> Vec2 {
        self.b + (self.c * 2.0 + self.d * (3.0 * t)) * t
    }

    #[inline]
    pub fn second(&self, t: f64) -> Vec2 {
        self.c * 2.0 + self.d * (6.0 * t)
    }

    #[inline]
    pub fn speed(&self, t: f64) -> f64 {
        self.deriv(t).norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        CubicSegment { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }
}

/// Natural cubic spline through knots, one unit of parameter per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicCurve {
    pub knots: Vec<Point2>,
    pub segments: Vec<CubicSegment>,
}

impl CubicCurve {
    /// Evaluates at global parameter `u in [0, segments]`.
    pub fn eval(&self, u: f64) -> Point2 {
        let (j, t) = self.locate(u);
        self.segments[j].eval(t)
    }

    pub fn deriv(&self, u: f64) -> Vec2 {
        let (j, t) = self.locate(u);
        self.segments[j].deriv(t)
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let n = self.segments.len();
        let u = u.clamp(0.0, n as f64);
        let j = (u.floor() as usize).min(n - 1);
        (j, u - j as f64)
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.segments
            .par_iter()
            .map(|s| segment_arclength(s, 0.0, 1.0))
            .collect()
    }

    pub fn arclength(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }
}

/// Fits the natural cubic spline through `knots`.
pub fn fit_cubic(knots: &[Point2]) -> Result<CubicCurve> {
    let n = knots.len();
    if n < 2 {
        return Err(Error::arg(format!("need at least 2 knots, got {n}")));
    }
    if let Some(i) = knots.iter().position(|p| !p.is_finite()) {
        return Err(Error::arg(format!("knot {i} is not finite")));
    }
    // Second derivatives m with m[0] = m[n-1] = 0; tridiagonal (1, 4, 1) system.
    let mut m = vec![Vec2::ZERO; n];
    if n > 2 {
        let k = n - 2;
        let mut cp = vec![0.0; k];
        let mut dp = vec![Vec2::ZERO; k];
        for i in 0..k {
            let rhs = (knots[i + 2] - knots[i + 1] * 2.0 + knots[i]) * 6.0;
            let denom = if i == 0 { 4.0 } else { 4.0 - cp[i - 1] };
            cp[i] = 1.0 / denom;
            dp[i] = if i == 0 { rhs / denom } else { (rhs - dp[i - 1]) / denom };
        }
        m[k] = dp[k - 1];
        for i in (0..k - 1).rev() {
            m[i + 1] = dp[i] - m[i + 2] * cp[i];
        }
    }
    let segments = (0..n - 1)
        .map(|i| CubicSegment {
            a: knots[i],
            b: knots[i + 1] - knots[i] - (m[i] * 2.0 + m[i + 1]) / 6.0,
            c: m[i] * 0.5,
            d: (m[i + 1] - m[i]) / 6.0,
        })
        .collect();
    Ok(CubicCurve { knots: knots.to_vec(), segments })
}

/// Points spaced uniformly in arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub points: Vec<Point2>,
    /// Target arc-length gap.
    pub spacing: f64,
    pub total_arclength: f64,
}

impl SampledCurve {
    /// Wraps raw points; the arc length is the polyline length.
    pub fn from_points(points: Vec<Point2>, spacing: f64) -> Self {
        let total_arclength = polyline_length(&points);
        SampledCurve { points, spacing, total_arclength }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn polyline_length(p: &[Point2]) -> f64 {
    p.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Solves `len(seg, 0, t) = target` by safeguarded Newton iteration.
fn invert(seg: &CubicSegment, target: f64, seg_len: f64) -> f64 {
    if seg_len <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut t = (target / seg_len).clamp(0.0, 1.0);
    let tol = 1e-14 * seg_len.max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let g = segment_arclength(seg, 0.0, t) - target;
        if g.abs() <= tol {
            break;
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let sp = seg.speed(t);
        let next = t - g / sp;
        t = if sp < 1e-9 || !(next > lo && next < hi) { 0.5 * (lo + hi) } else { next };
        if hi - lo < 1e-16 {
            break;
        }
    }
    t
}

/// Resamples the curve at `ceil(L / delta) + 1` points equally spaced in arc length.
pub fn arclength_resample(curve: &CubicCurve, delta: f64) -> Result<SampledCurve> {
    if !(delta > 0.0) {
        return Err(Error::arg(format!("delta must be positive, got {delta}")));
    }
    let lens = curve.segment_lengths();
    let total: f64 = lens.iter().sum();
    let first = curve.knots[0];
    let last = *curve.knots.last().unwrap();
    if !(total > 0.0) {
        return Ok(SampledCurve { points: vec![first, last], spacing: delta, total_arclength: 0.0 });
    }
    let intervals = if delta >= total { 1 } else { (total / delta).ceil() as usize };
    let mut cum = Vec::with_capacity(lens.len() + 1);
    cum.push(0.0);
    for l in &lens {
        cum.push(cum.last().unwrap() + l);
    }
    let step = total / intervals as f64;
    let points = (0..=intervals)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return first;
            }
            if i == intervals {
                return last;
            }
            let s = i as f64 * step;
            let j = match cum.binary_search_by(|c| c.total_cmp(&s)) {
                Ok(j) => j.min(lens.len() - 1),
                Err(j) => j - 1,
            };
            let seg = &curve.segments[j];
            seg.eval(invert(seg, s - cum[j], lens[j]))
        })
        .collect();
    Ok(SampledCurve { points, spacing: delta, total_arclength: total })
}
