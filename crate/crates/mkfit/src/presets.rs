//! Shipped parameter sets.

use crate::evolve::{CSchedule, EvolveConfig, LambdaMode, LambdaSchedule, MeasureSpec, SmoothingWidths};
use crate::functional::SobolevParams;
use crate::geometry::{Point2, Polygon};
use crate::seeds::SeedSpec;
use std::f64::consts::TAU;

pub fn triangle_domain() -> Polygon {
    Polygon::new((0..3).map(|k| Point2::from_polar(1.0, TAU * k as f64 / 3.0)).collect()).expect("valid triangle")
}

/// Six-pointed star, radii alternating 1 and 0.3.
pub fn star_domain() -> Polygon {
    Polygon::new((0..12).map(|k| Point2::from_polar(0.3 + 0.7 * ((k + 1) % 2) as f64, TAU * k as f64 / 12.0)).collect())
        .expect("valid star")
}

pub fn chevron_domain() -> Polygon {
    Polygon::new(vec![Point2::new(-1.0, -0.75), Point2::new(0.0, 0.75), Point2::new(1.0, -0.75), Point2::new(0.0, -0.25)])
        .expect("valid chevron")
}

/// Uniform measure on the triangle, short sinusoid seed, 300 iterations.
pub fn triangle() -> EvolveConfig {
    let domain = triangle_domain();
    EvolveConfig {
        p: 2.0,
        sobolev: SobolevParams { k: 2, q: 2.0, include_zeroth: false },
        delta: 3.0 / 1000.0,
        kappa: 17.0 / 20.0,
        c_schedule: CSchedule { scale: 1.0, denominator: 500.0, exponent: Some(2.0) },
        lambda_schedule: LambdaSchedule { coefficient: 0.01, mode: LambdaMode::Linear },
        smoothing_widths: SmoothingWidths { y: 1, field: 3, grad: 3 },
        iterations: 300,
        domain,
        measure: MeasureSpec::Uniform,
        seed: SeedSpec::Sinusoid { amplitude: 1.0 / 200.0, frequency: 200.0, half_width: 1.0 / 20.0, n_samples: 500 },
        rng_seed: 0,
        line_search: false,
    }
}

fn star_like(domain: Polygon) -> EvolveConfig {
    EvolveConfig {
        p: 2.0,
        sobolev: SobolevParams { k: 2, q: 2.0, include_zeroth: false },
        delta: 1.0 / 125.0,
        kappa: 0.85,
        c_schedule: CSchedule { scale: 0.9, denominator: 1000.0, exponent: Some(2.0) },
        lambda_schedule: LambdaSchedule { coefficient: 1e-4, mode: LambdaMode::Linear },
        smoothing_widths: SmoothingWidths { y: 1, field: 1, grad: 1 },
        iterations: 1000,
        domain,
        measure: MeasureSpec::Uniform,
        seed: SeedSpec::Linear { slope: 1.0 / 250.0, half_width: 0.2, n_samples: 500 },
        rng_seed: 0,
        line_search: false,
    }
}

pub fn hexagonal_star() -> EvolveConfig {
    star_like(star_domain())
}

pub fn chevron() -> EvolveConfig {
    star_like(chevron_domain())
}

/// Name and config of every shipped preset.
pub fn all() -> Vec<(&'static str, EvolveConfig)> {
    vec![("appendixA_triangle", triangle()), ("appendixA_star", hexagonal_star()), ("appendixA_chevron", chevron())]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domains() {
        assert!((triangle_domain().area() - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-14);
        assert!((star_domain().area() - 0.9).abs() < 1e-14);
        assert!((chevron_domain().area() - 1.0).abs() < 1e-14);
        for (_, c) in all() {
            c.validate().unwrap();
        }
    }
}
