//! Shared setup for the criterion benchmarks.

use std::sync::Arc;

use bjortho::convex1d::uniform_grid;
use bjortho::extension::{build_extension, ConvexExtension, Family};
use bjortho::space::{DiscreteMetricSpace, ScalarField};

/// The shifted-absolute-value family |x + t| over an n-point grid of
/// [-1, 1]: the standard mid-size workload.
pub fn shifted_abs_extension(n: usize) -> (Arc<DiscreteMetricSpace>, ConvexExtension) {
    let space = DiscreteMetricSpace::interval_grid(-1.0, 1.0, n);
    let xs = uniform_grid(-1.0, 1.0, n);
    let base = ScalarField::from_fn(&space, |i| xs[i].abs()).expect("finite base");
    let family = Family::AbsAffine {
        offsets: xs,
        slopes: vec![1.0; n],
    };
    let ext = build_extension(&space, &base, family).expect("valid extension");
    (space, ext)
}
