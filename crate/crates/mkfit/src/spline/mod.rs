//! Cubic curves through knots, arc length, resampling and B-spline
//! re-interpolation.

mod arclen;
mod bspline;
pub mod carlson;
mod cubic;

pub use arclen::{segment_arclength, speed_quartic_roots, SpeedRoots};
pub use bspline::{
    bspline_interpolate, bspline_interpolate_with_params, derivatives_at, BSplineCurve,
};
pub(crate) use bspline::Collocation;
pub use cubic::{arclength_resample, fit_cubic, polyline_length, CubicCurve, CubicSegment, SampledCurve};
