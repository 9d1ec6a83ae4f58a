//! Fitting objective, Sobolev cost and gradient, and the transport oracle.

mod ot;
mod sobolev;

pub use ot::ot_oracle;
pub use sobolev::{sobolev_cost, sobolev_gradient, sobolev_gradient_indexed, CostBreakdown, SobolevParams};

use crate::error::{Error, Result};
use crate::field::triangle_scalar_moment;
use crate::geometry::{voronoi_cells, Point2, VoronoiCell};
use crate::measure::{nearest_sites, TargetMeasure};
use rayon::prelude::*;

/// `F_p = int min_j |w - y_j|^p d rho(w)`.
pub fn objective(sites: &[Point2], measure: &TargetMeasure, p: f64) -> Result<f64> {
    if sites.is_empty() {
        return Err(Error::arg("objective needs at least one site"));
    }
    match measure {
        TargetMeasure::Uniform { domain } => {
            let cells = voronoi_cells(sites, domain)?;
            objective_with_cells(sites, &cells, measure, p)
        }
        TargetMeasure::Empirical { .. } => objective_with_cells(sites, &[], measure, p),
    }
}

/// As [`objective`], reusing cells already computed for `sites`.
pub fn objective_with_cells(sites: &[Point2], cells: &[VoronoiCell], measure: &TargetMeasure, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::arg(format!("p must be >= 1, got {p}")));
    }
    match measure {
        TargetMeasure::Uniform { domain } => {
            let per: Vec<f64> = cells
                .par_iter()
                .map(|c| {
                    let y = sites[c.site_index];
                    c.triangles().iter().map(|t| triangle_scalar_moment(t, y, p)).sum::<Result<f64>>()
                })
                .collect::<Result<_>>()?;
            Ok(per.iter().sum::<f64>() / domain.area())
        }
        TargetMeasure::Empirical { atoms, weights } => Ok(nearest_sites(atoms, sites)
            .into_iter()
            .zip(atoms)
            .zip(weights)
            .map(|((j, x), w)| w * x.dist(sites[j]).powf(p))
            .sum()),
    }
}

/// `F_p + lambda C`.
pub fn soft_objective(
    sites: &[Point2],
    curve: &[Point2],
    measure: &TargetMeasure,
    p: f64,
    lambda: f64,
    params: &SobolevParams,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::arg(format!("lambda must be >= 0, got {lambda}")));
    }
    let f = objective(sites, measure, p)?;
    if lambda == 0.0 {
        return Ok(f);
    }
    Ok(f + lambda * sobolev_cost(curve, params)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empirical_examples() {
        let atoms = vec![Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let rho = TargetMeasure::empirical(atoms.clone(), None).unwrap();
        assert_eq!(objective(&atoms, &rho, 2.0).unwrap(), 0.0);
        assert!((objective(&[Point2::ZERO], &rho, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sites: Vec<Point2> = (0..20).map(|_| Point2::new(rng.random(), rng.random())).collect();
        let rho = TargetMeasure::uniform(Polygon::unit_square());
        let exact = objective(&sites, &rho, 2.0).unwrap();
        let n = 1_000_000;
        let d: Vec<f64> = {
            let x = rho.sample(n, 22);
            let j = nearest_sites(&x, &sites);
            x.iter().zip(j).map(|(x, j)| x.dist(sites[j]).powi(2)).collect()
        };
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((exact - mean).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn adding_sites_never_increases_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let rho = TargetMeasure::uniform(Polygon::unit_square());
        for _ in 0..20 {
            let mut sites: Vec<Point2> = (0..6).map(|_| Point2::new(rng.random(), rng.random())).collect();
            let a = objective(&sites, &rho, 1.5).unwrap();
            sites.push(Point2::new(rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)));
            assert!(objective(&sites, &rho, 1.5).unwrap() <= a + 1e-14);
        }
    }

    #[test]
    fn averaged_parametrization_is_worse() {
        // f0 and f1 traverse the same segment in opposite directions; their
        // average collapses to the midpoint.
        let rho = TargetMeasure::uniform(Polygon::unit_square());
        let f0: Vec<Point2> = (0..21).map(|i| Point2::new(i as f64 / 20.0, 0.5)).collect();
        let f1: Vec<Point2> = f0.iter().rev().copied().collect();
        let mid: Vec<Point2> = f0.iter().zip(&f1).map(|(a, b)| a.lerp(*b, 0.5)).collect();
        let (o0, o1, om) = (
            objective(&f0, &rho, 2.0).unwrap(),
            objective(&f1, &rho, 2.0).unwrap(),
            objective(&mid, &rho, 2.0).unwrap(),
        );
        assert!((o0 - o1).abs() < 1e-14);
        assert!(om > o0);
    }

    #[test]
    fn oracle_equals_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..30 {
            let atoms: Vec<Point2> = (0..4).map(|_| Point2::new(rng.random(), rng.random())).collect();
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
            let sites: Vec<Point2> = (0..3).map(|_| Point2::new(rng.random(), rng.random())).collect();
            let rho = TargetMeasure::empirical(atoms.clone(), Some(w)).unwrap();
            let TargetMeasure::Empirical { weights, .. } = &rho else { unreachable!() };
            for p in [1.0, 2.0] {
                let a = ot_oracle(&atoms, weights, &sites, p).unwrap();
                let b = objective(&sites, &rho, p).unwrap();
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn soft_objective_limits() {
        let rho = TargetMeasure::uniform(Polygon::unit_square());
        let curve: Vec<Point2> = (0..30).map(|i| Point2::new(i as f64 / 29.0, 0.5 + 0.1 * (i as f64).sin())).collect();
        let params = SobolevParams::new(2, 2.0, false).unwrap();
        let f = objective(&curve, &rho, 2.0).unwrap();
        assert_eq!(soft_objective(&curve, &curve, &rho, 2.0, 0.0, &params).unwrap(), f);
        let big = soft_objective(&curve, &curve, &rho, 2.0, 1e9, &params).unwrap();
        assert!(f / big < 1e-6);
    }
}
