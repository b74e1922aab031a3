//! Numerical toolkit for Birkhoff-James orthogonality of continuous
//! functions and finite-dimensional linear operators.
//!
//! The library decides whether a convex family `p(x, t)` over a finite
//! metric space keeps its supremum envelope `g(t) = sup_x p(x, t)`
//! minimized at `t = 0`, which is the envelope formulation of
//! Birkhoff-James orthogonality. Every decision procedure comes in two
//! independent flavours, a one-sided-derivative criterion and a convex
//! minimization oracle, so results can be cross-checked at runtime.
//!
//! Module map:
//!
//! * [`convex1d`]: scalar convex curves: one-sided derivatives,
//!   convexity validation, bracketed minimization.
//! * [`space`]: finite metric spaces, scalar fields, sup-attaining
//!   sets, ε-graph connectivity, sup-preserving perturbations.
//! * [`extension`]: convex families `p(x, t)`, envelopes, extension
//!   tests, witness searches, maximizing sequences.
//! * [`cx_ortho`]: orthogonality of scalar fields under the sup norm
//!   (sign test plus minimization oracle).
//! * [`operators`]: matrix pairs on sampled unit spheres: operator
//!   norm minimization and the Euclidean inner-product witness.
//! * [`io`]: JSON/CSV readers for spaces, fields, families, matrices.
//! * [`fixtures`]: deterministic generators shared by tests and benches.

pub mod convex1d;
pub mod cx_ortho;
pub mod extension;
pub mod fixtures;
pub mod io;
pub mod norms;
pub mod operators;
pub mod space;
pub mod tol;

pub use convex1d::{
    check_convex, deriv_pair, left_derivative, limsup_derivative_check, minimize_convex,
    right_derivative, ConvexCurve, ConvexError, DerivPair, DerivSchedule,
};
pub use cx_ortho::{decide, oracle, sign_test, OrthoError, OrthogonalityVerdict, SignTestReport};
pub use extension::{
    bhatia_semrl_witness, build_extension, build_extension_with, envelope,
    extract_maximizing_sequence, is_bj_extension_bruteforce, is_bj_extension_criterion,
    nc_sufficiency_check, symmetric_grid, BruteForceReport, BuildOptions, ConvexExtension,
    Envelope, ExtensionError, Family, HSpec, MaximizingSequence, Side, WitnessReport,
};
pub use norms::NormTag;
pub use operators::{
    bhatia_semrl_euclidean, bj_operator_criterion, bj_operator_oracle, sample_sphere,
    spectral_norm, MatrixPair, OperatorError, SphereSample,
};
pub use space::{
    density_perturbation, epsilon_connected, sup_attaining_set, validate_space,
    DiscreteMetricSpace, MetricViolation, ScalarField, SpaceError, SupSet,
};
