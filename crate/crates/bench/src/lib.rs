//! Shared fixtures for the benchmarks.

use npsense::{make_shape, BoundaryCurve, PerturbationField, ShapeSpec};

/// Kite of half size; smooth, non-convex, fits inside the unit disk.
pub fn kite(n: usize) -> BoundaryCurve {
    make_shape(&ShapeSpec::Kite { scale: 0.5 }, n).expect("kite")
}

pub fn smooth_field(curve: &BoundaryCurve) -> PerturbationField {
    PerturbationField::from_fn(curve, |t| 0.4 + (2.0 * t).cos() - 0.5 * (3.0 * t).sin())
}
