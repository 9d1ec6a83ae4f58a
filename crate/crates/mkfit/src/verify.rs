//! Oracle suites behind `mkfit verify`.
//!
//! Each suite compares library output against an independent computation
//! (Monte Carlo, finite differences, exhaustive transport, quadrature) and
//! reports one [`Check`] per comparison.

use crate::error::{Error, Result};
use crate::field::{discrete_field, first_variation, triangle_vector_moment, Perturbation};
use crate::functional::{objective, ot_oracle, sobolev_cost, sobolev_gradient, SobolevParams};
use crate::geometry::{voronoi_cells, Point2, Polygon, Triangle, Vec2};
use crate::measure::TargetMeasure;
use crate::presets::chevron_domain;
use crate::quad::integrate;
use crate::seeds::{spanning_walk, spanning_walk_seed};
use crate::spline::{segment_arclength, CubicSegment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const SUITES: [&str; 6] = ["moments", "fd", "ot", "arclength", "gradient", "walk"];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured error and the bound it was held to.
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Check { name: name.into(), passed, detail }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Runs a suite. `scale` multiplies instance and sample counts (1 for the
/// full suite, 0.01 in CI).
pub fn run_suite(name: &str, seed: u64, scale: f64) -> Result<Vec<Check>> {
    let n = |full: usize| ((full as f64 * scale).ceil() as usize).max(1);
    match name {
        "moments" => moments(seed, n(200), n(1_000_000).max(10_000)),
        "fd" => fd(seed, n(100)),
        "ot" => ot(seed, n(100)),
        "arclength" => arclength(seed, n(1000)),
        "gradient" => gradient(seed, n(50)),
        "walk" => walk(),
        _ => Err(Error::Argument(format!("unknown suite `{name}`; known: {}", SUITES.join(", ")))),
    }
}

fn random_point(rng: &mut ChaCha8Rng, r: f64) -> Point2 {
    Point2::new(rng.random_range(-r..r), rng.random_range(-r..r))
}

/// Uniform point of a triangle by folding the unit square.
fn triangle_point(t: &Triangle, rng: &mut ChaCha8Rng) -> Point2 {
    let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
    if a + b > 1.0 {
        a = 1.0 - a;
        b = 1.0 - b;
    }
    t.u + (t.v - t.u) * a + (t.w - t.u) * b
}

fn moments(seed: u64, pairs: usize, samples: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let unit = Triangle::new(Point2::ZERO, Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
    let m = triangle_vector_moment(&unit, Point2::ZERO, 2.0)?;
    let err = m.dist(Point2::new(1.0 / 3.0, 1.0 / 3.0));
    out.push(Check::new("closed form on the unit triangle", err <= 1e-12, format!("error {err:.2e} <= 1e-12")));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(Triangle, Point2, f64, u64)> = (0..pairs)
        .map(|i| {
            let t = Triangle::new(random_point(&mut rng, 1.0), random_point(&mut rng, 1.0), random_point(&mut rng, 1.0));
            let p = if i % 2 == 0 { 2.0 } else { 3.0 };
            (t, random_point(&mut rng, 1.5), p, rng.random())
        })
        .collect();
    let results: Vec<Result<(f64, f64)>> = cases
        .par_iter()
        .map(|(t, b, p, s)| {
            let exact = triangle_vector_moment(t, *b, *p)?;
            let mut r = ChaCha8Rng::seed_from_u64(*s);
            let (mut sum, mut sq) = (Vec2::ZERO, 0.0);
            for _ in 0..samples {
                let d = triangle_point(t, &mut r) - *b;
                let v = d * (p * d.norm().powf(p - 2.0) * t.area());
                sum += v;
                sq += v.norm2();
            }
            let mean = sum / samples as f64;
            // standard error of the vector mean, summed over components
            let se = ((sq / samples as f64 - mean.norm2()).max(0.0) / samples as f64).sqrt();
            Ok((exact.dist(mean), se))
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for r in results {
        let (e, se) = r?;
        let z = if se > 0.0 { e / se } else if e == 0.0 { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
        fails += usize::from(z > 3.0);
    }
    out.push(Check::new(
        format!("{pairs} random triangles vs {samples}-sample Monte Carlo"),
        fails == 0,
        format!("worst deviation {worst:.2} standard errors (bound 3), {fails} outside"),
    ));
    Ok(out)
}

fn fd(seed: u64, instances: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = TargetMeasure::uniform(Polygon::unit_square());
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let p = [1.5, 2.0, 3.0][i % 3];
        let n = rng.random_range(5..=30);
        let sites: Vec<Point2> = (0..n).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let xi: Vec<Vec2> = (0..n).map(|_| random_point(&mut rng, 1.0)).collect();
        let cells = voronoi_cells(&sites, &Polygon::unit_square())?;
        let field = discrete_field(&sites, &cells, &rho, p)?;
        let pred = first_variation(&field, &Perturbation { vectors: xi.clone() }, &vec![0.0; n], p)?;
        let moved = |s: f64| -> Vec<Point2> { sites.iter().zip(&xi).map(|(y, x)| *y + *x * s).collect() };
        let num = (objective(&moved(eps), &rho, p)? - objective(&moved(-eps), &rho, p)?) / (2.0 * eps);
        worst = worst.max((num - pred).abs() / pred.abs().max(1e-12));
    }
    let mut out = vec![Check::new(
        format!("{instances} random instances, central difference at 1e-5"),
        worst <= 1e-3,
        format!("worst relative error {worst:.2e} <= 1e-3"),
    )];
    // p = 1 with a site on an atom: the one-sided derivative is |xi|
    let atom = Point2::new(0.2, 0.7);
    let rho1 = TargetMeasure::empirical(vec![atom, Point2::new(0.9, 0.1)], Some(vec![0.5, 0.5]))?;
    let sites = vec![atom, Point2::new(0.8, 0.2)];
    let xi = vec![Vec2::new(0.3, -0.4), Vec2::ZERO];
    let field = discrete_field(&sites, &[], &rho1, 1.0)?;
    let pred = first_variation(&field, &Perturbation { vectors: xi.clone() }, &rho1.sites_hit_mass(&sites), 1.0)?;
    let h = 1e-7;
    let moved: Vec<Point2> = sites.iter().zip(&xi).map(|(y, x)| *y + *x * h).collect();
    let num = (objective(&moved, &rho1, 1.0)? - objective(&sites, &rho1, 1.0)?) / h;
    let err = (num - pred).abs();
    out.push(Check::new("p = 1 site on an atom", err <= 1e-9, format!("{pred} vs one-sided {num}, error {err:.2e} <= 1e-9")));
    Ok(out)
}

fn ot(seed: u64, instances: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let p = if i % 2 == 0 { 1.0 } else { 2.0 };
        let (na, ns) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let atoms: Vec<Point2> = (0..na).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let w: Vec<f64> = (0..na).map(|_| rng.random_range(0.1..1.0)).collect();
        let sites: Vec<Point2> = (0..ns).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let rho = TargetMeasure::empirical(atoms.clone(), Some(w))?;
        let TargetMeasure::Empirical { weights, .. } = &rho else { unreachable!() };
        let exact = ot_oracle(&atoms, weights, &sites, p)?;
        worst = worst.max((exact - objective(&sites, &rho, p)?).abs());
    }
    Ok(vec![Check::new(
        format!("{instances} instances up to 4 atoms x 4 sites"),
        worst <= 1e-9,
        format!("worst difference {worst:.2e} <= 1e-9"),
    )])
}

fn arclength(seed: u64, segments: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..segments {
        let seg = CubicSegment {
            a: random_point(&mut rng, 1.0),
            b: random_point(&mut rng, 2.0),
            c: random_point(&mut rng, 2.0),
            d: random_point(&mut rng, 2.0),
        };
        let exact = integrate(|t| seg.speed(t), 0.0, 1.0, 1e-14, 1e-14).value;
        worst = worst.max((segment_arclength(&seg, 0.0, 1.0) - exact).abs());
    }
    let line = segment_arclength(&CubicSegment::line(Point2::ZERO, Point2::new(3.0, 4.0)), 0.0, 1.0);
    Ok(vec![
        Check::new(format!("{segments} random segments vs adaptive quadrature"), worst <= 1e-10, format!("worst error {worst:.2e} <= 1e-10")),
        Check::new("line (0,0) to (3,4)", (line - 5.0).abs() <= 1e-14, format!("length {line}")),
    ])
}

fn gradient(seed: u64, curves: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let eps = 1e-6;
    for i in 0..curves {
        let params = SobolevParams::new(1 + i % 2, if i % 4 < 2 { 1.5 } else { 2.0 }, false)?;
        let n = rng.random_range(10..40);
        let pts: Vec<Point2> = (0..n).map(|j| Point2::new(j as f64 / n as f64, 0.0) + random_point(&mut rng, 0.05)).collect();
        let g = sobolev_gradient(&pts, &params)?;
        let scale = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for j in 0..n {
            for c in 0..2 {
                let (mut a, mut b) = (pts.clone(), pts.clone());
                let bump = if c == 0 { Vec2::new(eps, 0.0) } else { Vec2::new(0.0, eps) };
                a[j] += bump;
                b[j] -= bump;
                let num = (sobolev_cost(&a, &params)?.total - sobolev_cost(&b, &params)?.total) / (2.0 * eps);
                let an = if c == 0 { g[j].x } else { g[j].y };
                worst = worst.max((num - an).abs() / scale);
            }
        }
    }
    Ok(vec![Check::new(
        format!("{curves} random curves, k in {{1, 2}}, q in {{1.5, 2}}"),
        worst <= 1e-5,
        format!("worst error relative to max |G| {worst:.2e} <= 1e-5"),
    )])
}

fn walk() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (dname, domain) in [("square", Polygon::unit_square()), ("chevron", chevron_domain())] {
        for eps in [0.3, 0.2, 0.1] {
            let w = spanning_walk(&domain, eps)?;
            let seed = spanning_walk_seed(&domain, eps)?;
            let obj = objective(&seed, &TargetMeasure::uniform(domain.clone()), 2.0)?;
            let m = w.cover.len();
            let bound = (2 * m).saturating_sub(3);
            out.push(Check::new(
                format!("{dname}, epsilon {eps}"),
                obj <= eps * eps && w.walk.len() <= bound,
                format!("objective {obj:.4e} <= {:.4e}, {} walk vertices <= {bound}", eps * eps, w.walk.len()),
            ));
        }
    }
    Ok(out)
}
