//! Shared numerical tolerances.
//!
//! Absolute tolerances are kept small because every built-in fixture is
//! exactly convex up to rounding; relative helpers couple the threshold
//! to the scale of the data that decides a verdict.

/// Absolute midpoint-convexity slack. A curve is accepted as convex when
/// every sampled second difference is above `-TOL_CONVEX`.
pub const TOL_CONVEX: f64 = 1e-9;

/// Convergence tolerance for one-sided difference quotients.
pub const TOL_DERIV: f64 = 1e-7;

/// Absolute slack for the metric axioms (symmetry, triangle inequality).
pub const TOL_METRIC: f64 = 1e-9;

/// Relative tolerance of the power iteration used for spectral norms.
pub const POWER_ITER_REL_TOL: f64 = 1e-10;

/// Relative clustering tolerance for near-degenerate top singular values.
pub const SV_CLUSTER_REL_TOL: f64 = 1e-8;

/// Membership tolerance for sup-attaining sets, relative to the supremum.
pub fn sup_set_tol(sup: f64) -> f64 {
    1e-9 * (1.0 + sup.abs())
}

/// Sign-test tolerance. Products of field values near zero decide
/// verdicts, so the threshold couples to both field scales.
pub fn sign_test_tol(f_sup_norm: f64, g_sup_norm: f64) -> f64 {
    1e-9 * (1.0 + f_sup_norm * g_sup_norm)
}

/// Threshold below which a field counts as identically zero.
pub fn zero_field_floor(scale: f64) -> f64 {
    1e-12 * (1.0 + scale)
}
