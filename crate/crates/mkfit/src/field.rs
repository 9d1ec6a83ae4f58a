//! Discrete barycenter field and the discrete first variation.
//!
//! For a triangle `T` and base `b`, splitting `T` into the fans `(b, e0, e1)`
//! over its edges and integrating radially gives
//!
//! ```text
//! int_T (w-b)|w-b|^(p-2) dw = sum_e 2A_e/(p+1) int_0^1 (P-b)|P-b|^(p-2) dt
//! int_T |w-b|^p dw          = sum_e 2A_e/(p+2) int_0^1 |P-b|^p dt
//! ```
//!
//! with `P = e0 + t (e1 - e0)` and `A_e` the signed area of `(b, e0, e1)`.

use crate::error::{Error, Result};
use crate::geometry::{Point2, Triangle, Vec2, VoronoiCell};
use crate::measure::{nearest_sites, TargetMeasure};
use crate::quad::integrate;
use rayon::prelude::*;

const EDGE_TOL: f64 = 1e-13;

/// Per-site field vectors and cell masses.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterField {
    pub vectors: Vec<Vec2>,
    pub masses: Vec<f64>,
    pub p: f64,
}

/// Displacement of each site.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub vectors: Vec<Vec2>,
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::arg(format!("p must be >= 1, got {p}")));
    }
    Ok(())
}

/// `v |v|^(p-2)`, zero at `v = 0`.
#[inline]
pub(crate) fn pow_vec(v: Vec2, p: f64) -> Vec2 {
    let r = v.norm();
    if r == 0.0 {
        Vec2::ZERO
    } else if p == 2.0 {
        v
    } else {
        v * r.powf(p - 2.0)
    }
}

/// `p int_T (w - base)|w - base|^(p-2) dw` over Lebesgue measure.
pub fn triangle_vector_moment(tri: &Triangle, base: Point2, p: f64) -> Result<Vec2> {
    check_p(p)?;
    if p == 2.0 {
        return Ok((tri.centroid() - base) * (2.0 * tri.area()));
    }
    let orient = orientation(tri);
    let mut acc = Vec2::ZERO;
    for (e0, e1) in tri_edges(tri) {
        let (r0, d) = (e0 - base, e1 - e0);
        let twice_a = r0.cross(d);
        if twice_a == 0.0 {
            continue;
        }
        let scale = (r0.norm() + d.norm()).powf(p - 1.0);
        let comp = |k: usize| {
            integrate(
                |t| {
                    let v = pow_vec(r0 + d * t, p);
                    if k == 0 { v.x } else { v.y }
                },
                0.0,
                1.0,
                EDGE_TOL * scale,
                EDGE_TOL,
            )
            .value
        };
        acc += Vec2::new(comp(0), comp(1)) * (twice_a / (p + 1.0));
    }
    Ok(acc * (p * orient))
}

/// `int_T |w - base|^p dw`; `p = 0` gives the area.
pub fn triangle_scalar_moment(tri: &Triangle, base: Point2, p: f64) -> Result<f64> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::arg(format!("p must be >= 0, got {p}")));
    }
    let orient = orientation(tri);
    let mut acc = 0.0;
    for (e0, e1) in tri_edges(tri) {
        let (r0, d) = (e0 - base, e1 - e0);
        let twice_a = r0.cross(d);
        if twice_a == 0.0 {
            continue;
        }
        let v = if p == 0.0 {
            1.0
        } else if p == 2.0 {
            r0.norm2() + r0.dot(d) + d.norm2() / 3.0
        } else {
            let scale = (r0.norm() + d.norm()).powf(p);
            integrate(|t| (r0 + d * t).norm().powf(p), 0.0, 1.0, EDGE_TOL * scale, EDGE_TOL).value
        };
        acc += twice_a / (p + 2.0) * v;
    }
    Ok(acc * orient)
}

fn orientation(t: &Triangle) -> f64 {
    let a = t.signed_area();
    if a == 0.0 { 0.0 } else { a.signum() }
}

fn tri_edges(t: &Triangle) -> [(Point2, Point2); 3] {
    [(t.u, t.v), (t.v, t.w), (t.w, t.u)]
}

/// `F(y_j) = p * int (w - y_j)|w - y_j|^(p-2) d rho_j` with `rho_j` the
/// conditional measure on cell `j`; `F = 0` on cells of zero mass.
pub fn discrete_field(sites: &[Point2], cells: &[VoronoiCell], measure: &TargetMeasure, p: f64) -> Result<BarycenterField> {
    check_p(p)?;
    let n = sites.len();
    match measure {
        TargetMeasure::Uniform { domain } => {
            if cells.len() != n {
                return Err(Error::arg(format!("{} cells for {n} sites", cells.len())));
            }
            let total = domain.area();
            let per: Vec<(Vec2, f64)> = cells
                .par_iter()
                .map(|c| {
                    let y = sites[c.site_index];
                    let tris = c.triangles();
                    let mut m = Vec2::ZERO;
                    for t in &tris {
                        m += triangle_vector_moment(t, y, p)?;
                    }
                    let a = c.area();
                    Ok((if a > 0.0 { m / a } else { Vec2::ZERO }, a / total))
                })
                .collect::<Result<_>>()?;
            let mut vectors = vec![Vec2::ZERO; n];
            let mut masses = vec![0.0; n];
            for (c, (v, m)) in cells.iter().zip(per) {
                vectors[c.site_index] = v;
                masses[c.site_index] = m;
            }
            Ok(BarycenterField { vectors, masses, p })
        }
        TargetMeasure::Empirical { atoms, weights } => {
            let mut vectors = vec![Vec2::ZERO; n];
            let mut masses = vec![0.0; n];
            for ((j, x), w) in nearest_sites(atoms, sites).into_iter().zip(atoms).zip(weights) {
                vectors[j] += pow_vec(*x - sites[j], p) * (p * w);
                masses[j] += w;
            }
            for (v, m) in vectors.iter_mut().zip(&masses) {
                if *m > 0.0 {
                    *v = *v / *m;
                }
            }
            Ok(BarycenterField { vectors, masses, p })
        }
    }
}

/// Scales each vector by `mass^-kappa`; zero-mass sites stay zero.
pub fn kappa_rescale(field: &BarycenterField, kappa: f64) -> Result<BarycenterField> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::arg(format!("kappa must lie in [0, 1], got {kappa}")));
    }
    let vectors = field
        .vectors
        .iter()
        .zip(&field.masses)
        .map(|(v, &m)| if m > 0.0 && kappa > 0.0 { *v * m.powf(-kappa) } else { *v })
        .collect();
    Ok(BarycenterField { vectors, masses: field.masses.clone(), p: field.p })
}

/// Predicted `d/de F_p(Y + e xi)` at `e = 0`. For `p = 1` the mass sitting on
/// moved sites adds `|xi_j| rho({y_j})`.
pub fn first_variation(field: &BarycenterField, xi: &Perturbation, sites_hit_mass: &[f64], p: f64) -> Result<f64> {
    let n = field.vectors.len();
    if xi.vectors.len() != n || sites_hit_mass.len() != n || field.masses.len() != n {
        return Err(Error::arg("field, perturbation and hit masses differ in length"));
    }
    let mut d = 0.0;
    for j in 0..n {
        d -= field.vectors[j].dot(xi.vectors[j]) * field.masses[j];
        if p == 1.0 {
            d += xi.vectors[j].norm() * sites_hit_mass[j];
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{voronoi_cells, Polygon};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_tri() -> Triangle {
        Triangle::new(Point2::ZERO, Point2::new(1.0, 0.0), Point2::new(0.0, 1.0))
    }

    /// Monte-Carlo mean and standard error of `f` over the triangle.
    fn mc<F: Fn(Point2) -> [f64; 2]>(t: &Triangle, n: usize, seed: u64, f: F) -> ([f64; 2], [f64; 2]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s, mut s2) = ([0.0; 2], [0.0; 2]);
        for _ in 0..n {
            let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let v = f(t.u + (t.v - t.u) * a + (t.w - t.u) * b);
            for k in 0..2 {
                s[k] += v[k];
                s2[k] += v[k] * v[k];
            }
        }
        let area = t.area();
        let nf = n as f64;
        let mean = [s[0] / nf * area, s[1] / nf * area];
        let se = [0, 1].map(|k| ((s2[k] / nf - (s[k] / nf).powi(2)) / nf).sqrt() * area);
        (mean, se)
    }

    #[test]
    fn closed_form_examples() {
        let m = triangle_vector_moment(&unit_tri(), Point2::ZERO, 2.0).unwrap();
        assert!((m.x - 1.0 / 3.0).abs() < 1e-15 && (m.y - 1.0 / 3.0).abs() < 1e-15);
        let s = triangle_scalar_moment(&unit_tri(), Point2::ZERO, 2.0).unwrap();
        assert!((s - 1.0 / 6.0).abs() < 1e-15);
        let s0 = triangle_scalar_moment(&unit_tri(), Point2::new(3.0, 1.0), 0.0).unwrap();
        assert!((s0 - 0.5).abs() < 1e-15);
        let deg = Triangle::new(Point2::ZERO, Point2::new(1.0, 1.0), Point2::new(2.0, 2.0));
        assert_eq!(triangle_scalar_moment(&deg, Point2::new(0.3, 0.0), 3.0).unwrap(), 0.0);
        assert!(triangle_vector_moment(&unit_tri(), Point2::ZERO, 0.5).is_err());
    }

    #[test]
    fn symmetric_base_gives_zero() {
        let t = Triangle::new(
            Point2::from_polar(1.0, 0.0),
            Point2::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0),
            Point2::from_polar(1.0, 4.0 * std::f64::consts::PI / 3.0),
        );
        for p in [1.0, 1.5, 2.0, 3.0, 4.5] {
            assert!(triangle_vector_moment(&t, t.centroid(), p).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn general_p_matches_integer_closed_forms() {
        // on the unit triangle: int x^4 = int y^4 = 1/30, int 2 x^2 y^2 = 2/180
        let s = triangle_scalar_moment(&unit_tri(), Point2::ZERO, 4.0).unwrap();
        assert!((s - (1.0 / 30.0 + 1.0 / 30.0 + 2.0 / 180.0)).abs() < 1e-13);
        // the quadrature branch just off p = 2 agrees with the closed form
        let t = Triangle::new(Point2::new(0.2, -0.4), Point2::new(1.3, 0.1), Point2::new(-0.5, 0.9));
        let b = Point2::new(0.7, 0.6);
        let closed = triangle_vector_moment(&t, b, 2.0).unwrap();
        let near = triangle_vector_moment(&t, b, 2.0 + 1e-9).unwrap();
        assert!(closed.dist(near) < 1e-8);
    }

    #[test]
    fn p3_vector_moment_matches_monte_carlo() {
        let t = unit_tri();
        let b = Point2::new(2.0, 2.0);
        let m = triangle_vector_moment(&t, b, 3.0).unwrap();
        let (mean, se) = mc(&t, 2_000_000, 9, |w| {
            let v = pow_vec(w - b, 3.0) * 3.0;
            [v.x, v.y]
        });
        assert!((m.x - mean[0]).abs() < 3.0 * se[0] && (m.y - mean[1]).abs() < 3.0 * se[1]);
    }

    #[test]
    fn p1_scalar_with_interior_base_matches_monte_carlo() {
        let c = Point2::new(0.5, 0.5);
        let tris = [
            Triangle::new(Point2::ZERO, Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)),
            Triangle::new(Point2::ZERO, Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)),
        ];
        for (i, t) in tris.iter().enumerate() {
            let s = triangle_scalar_moment(t, c, 1.0).unwrap();
            let (mean, se) = mc(t, 1_000_000, 20 + i as u64, |w| [(w - c).norm(), 0.0]);
            assert!((s - mean[0]).abs() < 3.0 * se[0]);
        }
        let v = triangle_vector_moment(&tris[0], Point2::new(0.6, 0.3), 1.0).unwrap();
        let (mean, se) = mc(&tris[0], 1_000_000, 31, |w| {
            let v = pow_vec(w - Point2::new(0.6, 0.3), 1.0);
            [v.x, v.y]
        });
        assert!((v.x - mean[0]).abs() < 3.0 * se[0] && (v.y - mean[1]).abs() < 3.0 * se[1]);
    }

    #[test]
    fn field_examples() {
        let sq = Polygon::unit_square();
        let sites = [Point2::new(0.5, 0.5)];
        let cells = voronoi_cells(&sites, &sq).unwrap();
        let f = discrete_field(&sites, &cells, &TargetMeasure::uniform(sq), 2.0).unwrap();
        assert!(f.vectors[0].norm() < 1e-14 && (f.masses[0] - 1.0).abs() < 1e-14);

        let rho = TargetMeasure::empirical(vec![Point2::new(1.0, 0.0)], None).unwrap();
        let f = discrete_field(&[Point2::ZERO], &[], &rho, 2.0).unwrap();
        assert_eq!(f.vectors[0], Vec2::new(2.0, 0.0));
        assert_eq!(f.masses[0], 1.0);
        let xi = Perturbation { vectors: vec![Vec2::new(1.0, 0.0)] };
        assert_eq!(first_variation(&f, &xi, &[0.0], 2.0).unwrap(), -2.0);

        let rho = TargetMeasure::empirical(vec![Point2::ZERO], None).unwrap();
        let f = discrete_field(&[Point2::ZERO], &[], &rho, 1.0).unwrap();
        let hit = rho.sites_hit_mass(&[Point2::ZERO]);
        let xi = Perturbation { vectors: vec![Vec2::new(0.0, 3.0)] };
        assert_eq!(first_variation(&f, &xi, &hit, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn uniform_field_matches_sampled_field() {
        let sq = Polygon::unit_square();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sites: Vec<Point2> = (0..5).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let cells = voronoi_cells(&sites, &sq).unwrap();
        let rho = TargetMeasure::uniform(sq);
        let f = discrete_field(&sites, &cells, &rho, 2.0).unwrap();
        assert!((f.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let n = 1_000_000;
        let draws = rho.sample(n, 4);
        let nearest = nearest_sites(&draws, &sites);
        for j in 0..sites.len() {
            let vals: Vec<Vec2> = draws
                .iter()
                .zip(&nearest)
                .filter(|(_, &k)| k == j)
                .map(|(x, _)| (*x - sites[j]) * 2.0)
                .collect();
            let m = vals.len() as f64;
            let mean: Vec2 = vals.iter().copied().sum::<Vec2>() / m;
            let var = vals.iter().map(|v| (*v - mean).x.powi(2)).sum::<f64>() / m;
            let vary = vals.iter().map(|v| (*v - mean).y.powi(2)).sum::<f64>() / m;
            assert!((mean.x - f.vectors[j].x).abs() < 3.0 * (var / m).sqrt());
            assert!((mean.y - f.vectors[j].y).abs() < 3.0 * (vary / m).sqrt());
        }
    }

    #[test]
    fn kappa_rescale_examples() {
        let f = BarycenterField { vectors: vec![Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::ZERO], masses: vec![0.25, 0.01, 0.0], p: 2.0 };
        assert_eq!(kappa_rescale(&f, 0.0).unwrap().vectors, f.vectors);
        assert_eq!(kappa_rescale(&f, 1.0).unwrap().vectors[0], Vec2::new(4.0, 0.0));
        let r = kappa_rescale(&f, 0.85).unwrap();
        assert!((r.vectors[1].x - 0.01f64.powf(-0.85)).abs() < 1e-12);
        assert_eq!(r.vectors[2], Vec2::ZERO);
        assert!(kappa_rescale(&f, 1.5).is_err());
    }

    #[test]
    fn translation_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sq = Polygon::unit_square();
        let sites: Vec<Point2> = (0..8).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let p = 3.0;
        let base = {
            let cells = voronoi_cells(&sites, &sq).unwrap();
            discrete_field(&sites, &cells, &TargetMeasure::uniform(sq.clone()), p).unwrap()
        };
        let (s, shift) = (2.5, Vec2::new(-3.0, 7.0));
        let map = |q: Point2| q * s + shift;
        let dom = Polygon::new(sq.vertices().iter().map(|&q| map(q)).collect()).unwrap();
        let sites2: Vec<Point2> = sites.iter().map(|&q| map(q)).collect();
        let cells = voronoi_cells(&sites2, &dom).unwrap();
        let f = discrete_field(&sites2, &cells, &TargetMeasure::uniform(dom), p).unwrap();
        for j in 0..sites.len() {
            let want = base.vectors[j] * s.powf(p - 1.0);
            assert!(f.vectors[j].dist(want) < 1e-9 * (1.0 + want.norm()));
        }
    }
}
