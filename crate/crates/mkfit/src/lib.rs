//! Fitting curves to planar probability measures.
//!
//! A curve is represented by its samples. Each iteration moves the samples
//! along the discrete barycenter field of their Voronoi cells, minus a
//! multiple of the gradient of a discretized Sobolev cost.

pub mod error;
pub mod evolve;
pub mod field;
pub mod functional;
pub mod geometry;
pub mod measure;
pub mod presets;
pub mod quad;
pub mod seeds;
pub mod spline;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Point2, Polygon, Triangle, VoronoiCell};
