//! Speed analysis and arc length of a cubic segment.
//!
//! The squared speed factors over the complex numbers as
//! `|A|^2 |t - z1|^2 |t - z2|^2` where `z1, z2` are the roots of
//! `x'(t) + i y'(t)`. With both roots off the real line the length is an
//! elliptic integral, reduced to Carlson form.

use super::carlson::{rc, rd, rf, rj};
use super::cubic::CubicSegment;
use crate::quad::{gl32, integrate};
use nalgebra::Matrix3;
use num_complex::Complex64 as C;

/// Real roots of `d/dt |f'(t)|^2` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRoots {
    pub roots: Vec<f64>,
    /// The speed vanishes identically (constant segment).
    pub degenerate: bool,
}

/// Coefficients of `|f'(t)|^2`, lowest degree first.
fn speed_sq_coeffs(seg: &CubicSegment) -> [f64; 5] {
    let (b0, b1, b2) = (seg.b, seg.c * 2.0, seg.d * 3.0);
    [
        b0.norm2(),
        2.0 * b0.dot(b1),
        b1.norm2() + 2.0 * b0.dot(b2),
        2.0 * b1.dot(b2),
        b2.norm2(),
    ]
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * t + k)
}

fn horner_d(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &k)| acc * t + i as f64 * k)
}

pub fn speed_quartic_roots(seg: &CubicSegment) -> SpeedRoots {
    let q = speed_sq_coeffs(seg);
    let qmax = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if qmax == 0.0 {
        return SpeedRoots { roots: Vec::new(), degenerate: true };
    }
    let dq: Vec<f64> = (1..5).map(|i| i as f64 * q[i] / qmax).collect();
    let scale = dq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut deg = 3;
    while deg > 0 && dq[deg].abs() <= 1e-14 * scale.max(1.0) {
        deg -= 1;
    }
    if deg == 0 {
        return SpeedRoots { roots: Vec::new(), degenerate: false };
    }
    let c: Vec<f64> = dq[..=deg].iter().map(|v| v / dq[deg]).collect();
    let mut cand: Vec<f64> = match deg {
        1 => vec![-c[0]],
        _ => {
            let mut m = Matrix3::<f64>::zeros();
            let k = deg;
            for i in 1..k {
                m[(i, i - 1)] = 1.0;
            }
            for i in 0..k {
                m[(i, k - 1)] = -c[i];
            }
            let ev = if k == 2 {
                let m2 = m.fixed_view::<2, 2>(0, 0).into_owned();
                m2.complex_eigenvalues().iter().copied().collect::<Vec<_>>()
            } else {
                m.complex_eigenvalues().iter().copied().collect::<Vec<_>>()
            };
            ev.into_iter()
                .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
                .map(|z| z.re)
                .collect()
        }
    };
    let resid_tol = 1e-8 * c.iter().map(|v| v.abs()).sum::<f64>();
    let mut ok = true;
    for r in cand.iter_mut() {
        let d = horner_d(&c, *r);
        if d != 0.0 {
            let next = *r - horner(&c, *r) / d;
            if next.is_finite() {
                *r = next;
            }
        }
        if horner(&c, *r).abs() > resid_tol {
            ok = false;
        }
    }
    if !ok {
        cand = grid_roots(&c);
    }
    let mut roots: Vec<f64> = cand
        .into_iter()
        .filter(|r| *r >= -1e-12 && *r <= 1.0 + 1e-12)
        .map(|r| r.clamp(0.0, 1.0))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    SpeedRoots { roots, degenerate: false }
}

fn grid_roots(c: &[f64]) -> Vec<f64> {
    const N: usize = 100_000;
    let mut out = Vec::new();
    let mut prev = horner(c, 0.0);
    for i in 1..=N {
        let t = i as f64 / N as f64;
        let v = horner(c, t);
        if prev == 0.0 {
            out.push((i - 1) as f64 / N as f64);
        } else if prev * v < 0.0 {
            let (mut lo, mut hi) = ((i - 1) as f64 / N as f64, t);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if horner(c, lo) * horner(c, mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = v;
    }
    out
}

/// `int sqrt(u^2 + b^2) du`.
fn hyp_int(u: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.5 * u * u.abs()
    } else {
        let b = b.abs();
        0.5 * (u * u.hypot(b) + b * b * (u / b).asinh())
    }
}

/// `int (t - x0) |t - z| dt` for real `x0` and complex `z`.
fn lin_hyp_int(t: f64, x0: f64, z: C) -> f64 {
    let u = t - z.re;
    let r2 = u * u + z.im * z.im;
    r2 * r2.sqrt() / 3.0 + (z.re - x0) * hyp_int(u, z.im)
}

/// Bernstein-ellipse parameter of `z` relative to `[t0, t1]`.
fn ellipse_rho(z: C, t0: f64, t1: f64) -> f64 {
    let zeta = (2.0 * z - (t0 + t1)) / (t1 - t0);
    let w = (zeta * zeta - 1.0).sqrt();
    (zeta + w).norm().max((zeta - w).norm())
}

fn quad_length(seg: &CubicSegment, t0: f64, t1: f64, tol: f64) -> f64 {
    integrate(|t| seg.speed(t), t0, t1, tol, tol).value
}

/// `int_{t0}^{t1} |f'(t)| dt`.
pub fn segment_arclength(seg: &CubicSegment, t0: f64, t1: f64) -> f64 {
    if !(t1 > t0) {
        return 0.0;
    }
    let a = C::new(3.0 * seg.d.x, 3.0 * seg.d.y);
    let b = C::new(2.0 * seg.c.x, 2.0 * seg.c.y);
    let c = C::new(seg.b.x, seg.b.y);
    let scale = a.norm() + b.norm() + c.norm();
    if scale == 0.0 {
        return 0.0;
    }
    if a.norm() <= 1e-15 * scale {
        if b.norm() <= 1e-15 * scale {
            return c.norm() * (t1 - t0);
        }
        let z = -c / b;
        if ellipse_rho(z, t0, t1) >= 3.0 {
            return gl32().integrate(|t| seg.speed(t), t0, t1);
        }
        return b.norm() * (hyp_int(t1 - z.re, z.im) - hyp_int(t0 - z.re, z.im));
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    let (z1, z2) = ((-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a));
    if ellipse_rho(z1, t0, t1).min(ellipse_rho(z2, t0, t1)) >= 3.0 {
        return gl32().integrate(|t| seg.speed(t), t0, t1);
    }
    let an = a.norm();
    let zs = 1.0 + z1.norm().max(z2.norm());
    if (z1 - z2).norm() < 2e-8 * zs {
        // |t - z|^2 is a quadratic polynomial
        let z = 0.5 * (z1 + z2);
        let prim = |t: f64| {
            let u = t - z.re;
            u * u * u / 3.0 + z.im * z.im * u
        };
        return an * (prim(t1) - prim(t0));
    }
    let real_root = if z1.im.abs() < 1e-9 * zs {
        Some((z1.re, z2))
    } else if z2.im.abs() < 1e-9 * zs {
        Some((z2.re, z1))
    } else {
        None
    };
    if let Some((x0, z)) = real_root {
        let g = |t: f64| lin_hyp_int(t, x0, z);
        let v = if x0 <= t0 {
            g(t1) - g(t0)
        } else if x0 >= t1 {
            g(t0) - g(t1)
        } else {
            (g(t0) - g(x0)) + (g(t1) - g(x0))
        };
        return an * v;
    }

    // Elliptic reduction. Candidates differ in the branch of the
    // third-kind term; a loose quadrature decides, and a tight one takes
    // over when no candidate matches.
    let check = quad_length(seg, t0, t1, 1e-8);
    let tol = 1e-6 * check.abs().max(1e-300) + 1e-15;
    let mut best: Option<(f64, f64)> = None;
    for sign in [1.0, -1.0] {
        if let Some(v) = elliptic_length(seg, z1, z2, an, t0, t1, sign) {
            let dev = (v - check).abs();
            if dev <= tol && best.is_none_or(|(_, d)| dev < d) {
                best = Some((v, dev));
            }
        }
    }
    match best {
        Some((v, _)) => v,
        None => quad_length(seg, t0, t1, 1e-14),
    }
}

fn elliptic_length(
    seg: &CubicSegment,
    z1: C,
    z2: C,
    an: f64,
    y: f64,
    x: f64,
    branch: f64,
) -> Option<f64> {
    let r = [z1, z1.conj(), z2, z2.conj()];
    let xs: Vec<C> = r.iter().map(|&ri| (x - ri).sqrt()).collect();
    let ys: Vec<C> = r.iter().map(|&ri| (y - ri).sqrt()).collect();
    let d = |i: usize, j: usize| r[j] - r[i];
    let u = |i: usize, j: usize| {
        let (k, l) = match (i, j) {
            (0, 1) => (2, 3),
            (0, 2) => (1, 3),
            _ => (1, 2),
        };
        (xs[i] * xs[j] * ys[k] * ys[l] + ys[i] * ys[j] * xs[k] * xs[l]) / (x - y)
    };
    let (u12, u13, u14) = (u(0, 1), u(0, 2), u(0, 3));
    let (s12, s13, s14) = (u12 * u12, u13 * u13, u14 * u14);

    let j0 = 2.0 * rf(s12, s13, s14);
    // int (t - r1) / ((t - r4) sqrt(P))
    let i2 = 2.0 / 3.0 * d(0, 1) * d(0, 2) * rd(s12, s13, s14)
        + 2.0 * xs[0] * ys[0] / (xs[3] * ys[3] * u14);
    let k4 = (i2 - j0) / (r[3] - r[0]);

    let e1: C = r.iter().sum();
    let dp4 = (r[3] - r[0]) * (r[3] - r[1]) * (r[3] - r[2]);
    let sqrt_p = |t: f64| (t - z1).norm() * (t - z2).norm();
    let bracket = sqrt_p(x) / (x - r[3]) - sqrt_p(y) / (y - r[3]);
    // 2 J2 - e1 J1
    let comb = dp4 * k4 - r[3] * (e1 - 2.0 * r[3]) * j0 + 2.0 * bracket;

    // int (t - r1) / sqrt(P), third kind
    let w2 = s12 - d(0, 2) * d(0, 3);
    let q2 = w2 / ((x - r[0]) * (y - r[0]));
    let p2 = q2 + 1.0;
    let i3 = -2.0 / 3.0 * d(0, 1) * d(0, 2) * d(0, 3) * rj(s12, s13, s14, w2)
        + branch * 2.0 * rc(p2, q2);
    let j1 = i3 + r[0] * j0;
    let j2 = (comb + e1 * j1) * 0.5;

    let q = speed_sq_coeffs(seg);
    let lead = q[4];
    let (c3, c2, c1, c0) = (q[3] / lead, q[2] / lead, q[1] / lead, q[0] / lead);
    let sq = |t: f64| sqrt_p(t);
    let total = (x * sq(x) - y * sq(y)) / 3.0
        + c3 / 12.0 * (sq(x) - sq(y))
        + (c2 / 3.0 - c3 * c3 / 8.0) * j2
        + (c1 / 2.0 - c2 * c3 / 12.0) * j1
        + (2.0 * c0 / 3.0 - c3 * c1 / 24.0) * j0;
    let v = an * total;
    if v.re.is_finite() && v.im.abs() <= 1e-9 * v.re.abs().max(1e-300) {
        Some(v.re)
    } else {
        None
    }
}
