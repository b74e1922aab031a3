//! Birkhoff-James orthogonality of scalar fields under the sup norm.
//!
//! `f` is orthogonal to `g` when `||f + t g||_inf >= ||f||_inf` for
//! every scalar `t`. Three routes decide this:
//!
//! * the sign test: the norm-attaining set of `f` must carry a point
//!   where `f * g >= 0` and a point where `f * g <= 0`;
//! * the minimization oracle: minimize the convex map
//!   `t -> ||f + t g||_inf` and compare with `||f||_inf`;
//! * the section criterion on the family `p(x, t) = |f(x) + t g(x)|`
//!   over the base `|f|`, connecting back to the extension machinery.
//!
//! [`decide`] runs all three and records their agreement.

use thiserror::Error;

use crate::convex1d::{minimize_convex, ConvexCurve, ConvexError};
use crate::extension::{
    build_extension_with, is_bj_extension_criterion, BuildOptions, ExtensionError, Family,
};
use crate::space::{sup_attaining_set, ScalarField, SpaceError, SupSet};
use crate::tol::{sup_set_tol, zero_field_floor};

#[derive(Debug, Error)]
pub enum OrthoError {
    #[error("f is identically zero within tolerance; orthogonality is undefined")]
    ZeroFunction,
    #[error("fields live on different spaces")]
    SpaceMismatch,
    #[error("bracket expansion failed after {doublings} doublings")]
    BracketExpansion { doublings: u32 },
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Sign-test half of the verdict: witnesses on the norm-attaining set
/// of `f` where the product `f * g` is non-negative resp. non-positive.
#[derive(Debug, Clone)]
pub struct SignTestReport {
    pub orthogonal: bool,
    /// Point of `M_|f|` with the largest product, if `>= -tol`.
    pub pos_witness: Option<usize>,
    /// Point of `M_|f|` with the smallest product, if `<= tol`.
    pub neg_witness: Option<usize>,
    pub m_abs_f: SupSet,
}

/// Combined verdict of [`decide`].
#[derive(Debug, Clone)]
pub struct OrthogonalityVerdict {
    pub orthogonal: bool,
    pub pos_witness: Option<usize>,
    pub neg_witness: Option<usize>,
    pub oracle_min: f64,
    pub oracle_argmin: f64,
    /// Sign test agrees with `oracle_min >= ||f|| - tol`.
    pub methods_agree: bool,
    /// The section criterion on `|f(x) + t g(x)|` agrees with the sign
    /// test.
    pub criterion_agrees: bool,
}

fn require_comparable(f: &ScalarField, g: &ScalarField) -> Result<(), OrthoError> {
    if !f.same_space(g) {
        return Err(OrthoError::SpaceMismatch);
    }
    let scale = f.sup_norm().max(g.sup_norm());
    if f.sup_norm() <= zero_field_floor(scale) {
        return Err(OrthoError::ZeroFunction);
    }
    Ok(())
}

/// Sign test over the norm-attaining set `M_|f|`: orthogonal iff the
/// products `f * g` there reach both `>= -tol` and `<= tol`. The
/// extremal product points are reported as witnesses.
pub fn sign_test(f: &ScalarField, g: &ScalarField, tol: f64) -> Result<SignTestReport, OrthoError> {
    require_comparable(f, g)?;
    let abs_f = f.abs();
    let m_abs_f = sup_attaining_set(&abs_f, sup_set_tol(abs_f.sup()));

    let mut max_prod = f64::NEG_INFINITY;
    let mut min_prod = f64::INFINITY;
    let mut argmax = 0;
    let mut argmin = 0;
    for &i in &m_abs_f.indices {
        let prod = f.value(i) * g.value(i);
        if prod > max_prod {
            max_prod = prod;
            argmax = i;
        }
        if prod < min_prod {
            min_prod = prod;
            argmin = i;
        }
    }

    let pos_witness = (max_prod >= -tol).then_some(argmax);
    let neg_witness = (min_prod <= tol).then_some(argmin);
    Ok(SignTestReport {
        orthogonal: pos_witness.is_some() && neg_witness.is_some(),
        pos_witness,
        neg_witness,
        m_abs_f,
    })
}

/// Global minimum of the convex map `t -> ||f + t g||_inf`, found by
/// expanding a bracket from `[-1, 1]` until both endpoint values exceed
/// the value at 0 and then running the convex minimizer. Returns
/// `(min, argmin)`. For `g` identically zero the minimum is `||f||` at
/// an arbitrary offset, reported as 0.
pub fn oracle(f: &ScalarField, g: &ScalarField, tol_t: f64) -> Result<(f64, f64), OrthoError> {
    require_comparable(f, g)?;
    let fv = f.values().to_vec();
    let gv = g.values().to_vec();
    let phi = move |t: f64| {
        fv.iter()
            .zip(&gv)
            .fold(0.0_f64, |m, (a, b)| m.max((a + t * b).abs()))
    };

    let scale = f.sup_norm().max(g.sup_norm());
    if g.sup_norm() <= zero_field_floor(scale) {
        return Ok((f.sup_norm(), 0.0));
    }

    let phi0 = phi(0.0);
    let mut half = 1.0_f64;
    let mut doublings = 0u32;
    while phi(half) <= phi0 || phi(-half) <= phi0 {
        half *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(OrthoError::BracketExpansion { doublings });
        }
    }

    let curve = ConvexCurve::new("sup-norm(f + t g)", -half, half, phi)?;
    let (argmin, min) = minimize_convex(&curve, tol_t)?;
    Ok((min, argmin))
}

/// Default λ-resolution for the oracle, matched to the scale of the
/// minimizer `||f|| / ||g||`.
pub fn default_oracle_tol_t(f: &ScalarField, g: &ScalarField) -> f64 {
    let ratio = if g.sup_norm() > 0.0 {
        f.sup_norm() / g.sup_norm()
    } else {
        1.0
    };
    1e-9 * (1.0 + ratio)
}

/// Runs the sign test, the oracle and the section criterion on
/// `p(x, t) = |f(x) + t g(x)|`, and reports the verdict with both
/// agreement flags.
pub fn decide(
    f: &ScalarField,
    g: &ScalarField,
    tol: f64,
) -> Result<OrthogonalityVerdict, OrthoError> {
    decide_with(f, g, tol, &BuildOptions::default())
}

/// [`decide`] with explicit build options for the derived section
/// family (window, derivative tolerance, validation slack).
pub fn decide_with(
    f: &ScalarField,
    g: &ScalarField,
    tol: f64,
    opts: &BuildOptions,
) -> Result<OrthogonalityVerdict, OrthoError> {
    let sign = sign_test(f, g, tol)?;
    let (oracle_min, oracle_argmin) = oracle(f, g, default_oracle_tol_t(f, g))?;
    let oracle_orthogonal = oracle_min >= f.sup_norm() - tol;

    let family = Family::AbsAffine {
        offsets: f.values().to_vec(),
        slopes: g.values().to_vec(),
    };
    let ext = build_extension_with(f.space(), &f.abs(), family, opts)?;
    let criterion = is_bj_extension_criterion(&ext, tol)?;

    Ok(OrthogonalityVerdict {
        orthogonal: sign.orthogonal,
        pos_witness: sign.pos_witness,
        neg_witness: sign.neg_witness,
        oracle_min,
        oracle_argmin,
        methods_agree: sign.orthogonal == oracle_orthogonal,
        criterion_agrees: criterion.verdict == sign.orthogonal,
    })
}
