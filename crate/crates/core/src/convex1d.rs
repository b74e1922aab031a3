//! One-dimensional convex curves: evaluation, one-sided derivatives,
//! convexity validation and bracketed scalar minimization.
//!
//! Curves are evaluator-backed; nothing in this module stores samples.
//! For a convex curve the forward difference quotient at a fixed point
//! is non-increasing as the step shrinks and the backward quotient is
//! non-decreasing, so both one-sided derivatives are obtained as the
//! monotone limit of quotients. Quotient monotonicity doubles as a
//! built-in non-convexity detector.

use std::sync::Arc;

use thiserror::Error;

use crate::tol::{TOL_CONVEX, TOL_DERIV};

#[derive(Debug, Error)]
pub enum ConvexError {
    #[error("curve `{label}`: invalid domain [{lo}, {hi}]")]
    InvalidDomain { label: String, lo: f64, hi: f64 },
    #[error(
        "curve `{label}`: step {step:e} from t = {t} leaves the domain [{lo}, {hi}]; \
         shrink the initial step"
    )]
    StepOutOfDomain {
        label: String,
        t: f64,
        step: f64,
        lo: f64,
        hi: f64,
    },
    #[error("curve `{label}` is not convex near t = {t}: {detail}")]
    NonConvex {
        label: String,
        t: f64,
        detail: String,
    },
    #[error(
        "curve sequence does not approach the limit on the sample grid \
         (element {index}: sup error {err:e} after {prev:e})"
    )]
    NotConverging { index: usize, err: f64, prev: f64 },
}

/// A scalar function convex on a closed interval, backed by an evaluator.
#[derive(Clone)]
pub struct ConvexCurve {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
    label: String,
}

impl std::fmt::Debug for ConvexCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexCurve")
            .field("label", &self.label)
            .field("domain", &(self.lo, self.hi))
            .finish()
    }
}

impl ConvexCurve {
    pub fn new(
        label: impl Into<String>,
        lo: f64,
        hi: f64,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, ConvexError> {
        let label = label.into();
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ConvexError::InvalidDomain { label, lo, hi });
        }
        Ok(ConvexCurve {
            eval: Arc::new(eval),
            lo,
            hi,
            label,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Step schedule for one-sided difference quotients.
#[derive(Debug, Clone, Copy)]
pub struct DerivSchedule {
    /// First step size.
    pub initial_step: f64,
    /// Multiplicative shrink factor in (0, 1).
    pub shrink: f64,
    /// Maximum number of quotient evaluations.
    pub max_steps: usize,
    /// Convergence tolerance on successive quotients.
    pub tol: f64,
}

impl DerivSchedule {
    /// Default schedule for a domain of the given width: the first step is
    /// 1% of the width, halved up to 30 times, converged at `TOL_DERIV`.
    pub fn for_width(width: f64) -> Self {
        DerivSchedule {
            initial_step: 1e-2 * width,
            shrink: 0.5,
            max_steps: 30,
            tol: TOL_DERIV,
        }
    }

    pub fn for_curve(curve: &ConvexCurve) -> Self {
        Self::for_width(curve.width())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// One-sided derivatives at a point, with convergence status of the
/// quotient iteration on each side.
#[derive(Debug, Clone, Copy)]
pub struct DerivPair {
    pub right: f64,
    pub left: f64,
    pub right_converged: bool,
    pub left_converged: bool,
}

impl DerivPair {
    /// Gap between the one-sided derivatives; zero means numerically
    /// differentiable at the point.
    pub fn gap(&self) -> f64 {
        self.right - self.left
    }
}

#[derive(Clone, Copy, PartialEq)]
enum QuotientSide {
    Right,
    Left,
}

/// Rounding slack for a difference quotient with step `delta`: the two
/// evaluations carry O(eps * scale) error each, amplified by 1/delta.
fn quotient_slack(delta: f64, scale: f64) -> f64 {
    TOL_CONVEX + 16.0 * f64::EPSILON * scale.max(1.0) / delta
}

fn one_sided(
    curve: &ConvexCurve,
    t: f64,
    sched: &DerivSchedule,
    side: QuotientSide,
) -> Result<(f64, bool), ConvexError> {
    let (lo, hi) = curve.domain();
    let step0 = sched.initial_step;
    assert!(step0 > 0.0 && sched.shrink > 0.0 && sched.shrink < 1.0 && sched.max_steps >= 2);
    let in_domain = t >= lo && t <= hi;
    let fits = match side {
        QuotientSide::Right => in_domain && t + step0 <= hi,
        QuotientSide::Left => in_domain && t - step0 >= lo,
    };
    if !fits {
        return Err(ConvexError::StepOutOfDomain {
            label: curve.label.clone(),
            t,
            step: step0,
            lo,
            hi,
        });
    }

    let v_t = curve.value(t);
    let mut delta = step0;
    let mut prev: Option<f64> = None;
    let mut q = f64::NAN;
    for _ in 0..sched.max_steps {
        let v_off = match side {
            QuotientSide::Right => curve.value(t + delta),
            QuotientSide::Left => curve.value(t - delta),
        };
        q = match side {
            QuotientSide::Right => (v_off - v_t) / delta,
            QuotientSide::Left => (v_t - v_off) / delta,
        };
        if let Some(p) = prev {
            let slack = quotient_slack(delta, v_t.abs().max(v_off.abs()));
            let monotone = match side {
                QuotientSide::Right => q <= p + slack,
                QuotientSide::Left => q >= p - slack,
            };
            if !monotone {
                return Err(ConvexError::NonConvex {
                    label: curve.label.clone(),
                    t,
                    detail: format!(
                        "difference quotient moved from {p} to {q} as the step shrank to {delta:e}"
                    ),
                });
            }
            if (q - p).abs() <= sched.tol {
                return Ok((q, true));
            }
        }
        prev = Some(q);
        delta *= sched.shrink;
    }
    Ok((q, false))
}

/// Right derivative of a convex curve at `t`: the infimum of forward
/// difference quotients, reached by shrinking the step.
pub fn right_derivative(
    curve: &ConvexCurve,
    t: f64,
    sched: &DerivSchedule,
) -> Result<f64, ConvexError> {
    one_sided(curve, t, sched, QuotientSide::Right).map(|(v, _)| v)
}

/// Left derivative: the supremum of backward difference quotients.
pub fn left_derivative(
    curve: &ConvexCurve,
    t: f64,
    sched: &DerivSchedule,
) -> Result<f64, ConvexError> {
    one_sided(curve, t, sched, QuotientSide::Left).map(|(v, _)| v)
}

/// Both one-sided derivatives at an interior point. Fails if the
/// convexity ordering left <= right is violated beyond slack.
pub fn deriv_pair(
    curve: &ConvexCurve,
    t: f64,
    sched: &DerivSchedule,
) -> Result<DerivPair, ConvexError> {
    let (right, right_converged) = one_sided(curve, t, sched, QuotientSide::Right)?;
    let (left, left_converged) = one_sided(curve, t, sched, QuotientSide::Left)?;
    if left > right + 4.0 * sched.tol {
        return Err(ConvexError::NonConvex {
            label: curve.label.clone(),
            t,
            detail: format!("left derivative {left} exceeds right derivative {right}"),
        });
    }
    Ok(DerivPair {
        right,
        left,
        right_converged,
        left_converged,
    })
}

/// Uniform grid of `count` points over `[lo, hi]`, endpoints exact.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let m = (count - 1) as f64;
    (0..count)
        .map(|i| ((count - 1 - i) as f64 * lo + i as f64 * hi) / m)
        .collect()
}

/// Midpoint-convexity check on a uniform grid: true iff every second
/// difference is above `-TOL_CONVEX`.
pub fn check_convex(curve: &ConvexCurve, grid_size: usize) -> bool {
    assert!(grid_size >= 3, "convexity grid needs at least 3 points");
    let (lo, hi) = curve.domain();
    let grid = uniform_grid(lo, hi, grid_size);
    let values: Vec<f64> = grid.iter().map(|&t| curve.value(t)).collect();
    for i in 1..grid_size - 1 {
        let mid_defect = (values[i - 1] + values[i + 1]) / 2.0 - values[i];
        if !(mid_defect >= -TOL_CONVEX) {
            return false;
        }
    }
    true
}

/// Global minimum of a convex curve by golden-section shrinking of the
/// full domain bracket. Returns a point within `tol_t` of a minimizer
/// and the value there. Interior values rising above both bracket
/// endpoints signal a non-convex evaluator.
pub fn minimize_convex(curve: &ConvexCurve, tol_t: f64) -> Result<(f64, f64), ConvexError> {
    assert!(tol_t > 0.0);
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = curve.domain();
    let mut fa = curve.value(a);
    let mut fb = curve.value(b);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = curve.value(x1);
    let mut f2 = curve.value(x2);

    for _ in 0..500 {
        if b - a <= tol_t {
            break;
        }
        for (x, fx) in [(x1, f1), (x2, f2)] {
            if fx > fa.max(fb) + TOL_CONVEX {
                return Err(ConvexError::NonConvex {
                    label: curve.label.clone(),
                    t: x,
                    detail: format!(
                        "interior value {fx} exceeds both bracket endpoints ({fa}, {fb})"
                    ),
                });
            }
        }
        if f1 < f2 {
            b = x2;
            fb = f2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = curve.value(x1);
        } else {
            a = x1;
            fa = f1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = curve.value(x2);
        }
    }

    let mid = 0.5 * (a + b);
    let fmid = curve.value(mid);
    let best = [(mid, fmid), (x1, f1), (x2, f2), (a, fa), (b, fb)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap();
    Ok(best)
}

/// Checks the limsup inequality for right derivatives of a pointwise
/// convergent sequence of convex curves: true iff the tail maximum of
/// `curve_n'(t+)` stays below `limit'(t+)` within `sched.tol`.
///
/// Convergence towards the limit is spot-checked on a small sample grid
/// around `t`: the sup error over the grid must not increase along the
/// sequence. This is a test surface, not a proof.
pub fn limsup_derivative_check(
    curves: &[ConvexCurve],
    limit: &ConvexCurve,
    t: f64,
    sched: &DerivSchedule,
) -> Result<bool, ConvexError> {
    assert!(!curves.is_empty());
    let (lo, hi) = limit.domain();
    let w = 0.05 * limit.width();
    let grid = uniform_grid((t - w).max(lo), (t + w).min(hi), 9);

    let mut prev_err = f64::INFINITY;
    for (index, curve) in curves.iter().enumerate() {
        let err = grid
            .iter()
            .map(|&s| (curve.value(s) - limit.value(s)).abs())
            .fold(0.0_f64, f64::max);
        if err > prev_err + TOL_CONVEX.max(1e-12 * (1.0 + prev_err)) {
            return Err(ConvexError::NotConverging {
                index,
                err,
                prev: prev_err,
            });
        }
        prev_err = err;
    }

    let tail_start = curves.len() - curves.len().div_ceil(2);
    let mut tail_max = f64::NEG_INFINITY;
    for curve in &curves[tail_start..] {
        tail_max = tail_max.max(right_derivative(curve, t, sched)?);
    }
    let limit_deriv = right_derivative(limit, t, sched)?;
    Ok(tail_max <= limit_deriv + sched.tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn curve(
        label: &str,
        lo: f64,
        hi: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> ConvexCurve {
        ConvexCurve::new(label, lo, hi, f).unwrap()
    }

    fn sched(c: &ConvexCurve) -> DerivSchedule {
        DerivSchedule::for_curve(c)
    }

    #[test]
    fn right_derivative_of_shifted_abs() {
        let c = curve("abs(t+1)", -2.0, 2.0, |t| (t + 1.0).abs());
        let d = right_derivative(&c, 0.0, &sched(&c)).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn right_derivative_of_constant() {
        let c = curve("const", -1.0, 1.0, |_| 3.5);
        let d = right_derivative(&c, 0.3, &sched(&c)).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn right_derivative_of_hinge() {
        let c = curve("max(1,1+t)", -1.0, 1.0, |t| 1.0_f64.max(1.0 + t));
        let s = sched(&c);
        assert_abs_diff_eq!(right_derivative(&c, 0.0, &s).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(left_derivative(&c, 0.0, &s).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn left_derivative_fixtures() {
        let c = curve("abs(t-1)", -2.0, 2.0, |t| (t - 1.0).abs());
        assert_abs_diff_eq!(
            left_derivative(&c, 0.0, &sched(&c)).unwrap(),
            -1.0,
            epsilon = 1e-9
        );
        let q = curve("t^2", -2.0, 2.0, |t| t * t);
        assert_abs_diff_eq!(
            left_derivative(&q, 0.0, &sched(&q)).unwrap(),
            0.0,
            epsilon = 1e-6
        );
    }

    #[test]
    fn smooth_derivative_matches_analytic() {
        let q = curve("t^2", -2.0, 2.0, |t| t * t);
        let s = sched(&q);
        for t in [-1.0, -0.25, 0.0, 0.5, 1.5] {
            let dp = deriv_pair(&q, t, &s).unwrap();
            assert_abs_diff_eq!(dp.right, 2.0 * t, epsilon = 10.0 * TOL_DERIV);
            assert_abs_diff_eq!(dp.left, 2.0 * t, epsilon = 10.0 * TOL_DERIV);
        }
    }

    #[test]
    fn outward_step_at_endpoint_is_an_error() {
        let c = curve("abs", -1.0, 1.0, |t| t.abs());
        let s = sched(&c);
        assert!(right_derivative(&c, 1.0, &s).is_err());
        assert!(left_derivative(&c, -1.0, &s).is_err());
        // inward sides at the endpoints are fine
        assert!(right_derivative(&c, -1.0, &s).is_ok());
        assert!(left_derivative(&c, 1.0, &s).is_ok());
    }

    #[test]
    fn non_convex_quotients_detected() {
        // concave bend: forward quotients grow as the step shrinks
        let c = curve("sin", -1.0, 1.0, |t| (4.0 * t).sin());
        let err = right_derivative(&c, 0.0, &sched(&c));
        assert!(matches!(err, Err(ConvexError::NonConvex { .. })));

        // each one-sided quotient of -|t| is constant, but the
        // ordering left <= right breaks at the cap
        let c = curve("neg-abs", -1.0, 1.0, |t| -t.abs());
        let err = deriv_pair(&c, 0.0, &sched(&c));
        assert!(matches!(err, Err(ConvexError::NonConvex { .. })));
    }

    #[test]
    fn check_convex_fixtures() {
        let abs = curve("abs", -1.0, 1.0, |t| t.abs());
        assert!(check_convex(&abs, 101));
        let cap = curve("-t^2", -1.0, 1.0, |t| -t * t);
        assert!(!check_convex(&cap, 101));
        let affine = curve("affine", -1.0, 1.0, |t| 1.0 + t * (-1.0_f64).exp());
        assert!(check_convex(&affine, 101));
    }

    #[test]
    fn minimize_kink() {
        let c = curve("1+abs", -2.0, 2.0, |t| 1.0 + t.abs());
        let (t, v) = minimize_convex(&c, 1e-9).unwrap();
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn minimize_vee_of_two_kinks() {
        // max(|1-t|, |1+t|) = 1 + |t| by direct evaluation
        let c = curve("max-abs", -3.0, 3.0, |t| {
            (1.0 - t).abs().max((1.0 + t).abs())
        });
        let (t, v) = minimize_convex(&c, 1e-9).unwrap();
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn minimize_scaled_abs_with_zero() {
        let c = curve("c*abs(1+l)", -3.0, 3.0, |l| 2.5 * (1.0 + l).abs());
        let (t, v) = minimize_convex(&c, 1e-9).unwrap();
        assert_abs_diff_eq!(t, -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn minimize_detects_concave_evaluator() {
        let c = curve("-t^2", -1.0, 1.0, |t| -t * t);
        assert!(matches!(
            minimize_convex(&c, 1e-9),
            Err(ConvexError::NonConvex { .. })
        ));
    }

    #[test]
    fn limsup_smoothed_abs() {
        // f_n(t) = sqrt(t^2 + 1/n): f_n'(0) = 0 analytically, |t|'(0+) = 1
        let curves: Vec<ConvexCurve> = [10.0, 1e2, 1e3, 1e4]
            .into_iter()
            .map(|n: f64| curve("smoothed", -2.0, 2.0, move |t| (t * t + 1.0 / n).sqrt()))
            .collect();
        let limit = curve("abs", -2.0, 2.0, |t| t.abs());
        let s = DerivSchedule::for_width(4.0);
        assert!(limsup_derivative_check(&curves, &limit, 0.0, &s).unwrap());
    }

    #[test]
    fn limsup_constant_sequence() {
        let curves: Vec<ConvexCurve> = (0..4)
            .map(|_| curve("abs", -2.0, 2.0, |t| t.abs()))
            .collect();
        let limit = curve("abs", -2.0, 2.0, |t| t.abs());
        let s = DerivSchedule::for_width(4.0);
        assert!(limsup_derivative_check(&curves, &limit, 0.0, &s).unwrap());
    }

    #[test]
    fn limsup_vertical_shifts() {
        // f_n = |t| + 1/n at t = 1: derivatives all equal 1
        let curves: Vec<ConvexCurve> = (1..=4)
            .map(|n| curve("shifted", -2.0, 2.0, move |t| t.abs() + 1.0 / n as f64))
            .collect();
        let limit = curve("abs", -2.0, 2.0, |t| t.abs());
        let s = DerivSchedule::for_width(4.0);
        assert!(limsup_derivative_check(&curves, &limit, 1.0, &s).unwrap());
    }

    #[test]
    fn limsup_rejects_diverging_sequence() {
        let curves: Vec<ConvexCurve> = (1..=4)
            .map(|n| curve("diverging", -2.0, 2.0, move |t| t.abs() + n as f64))
            .collect();
        let limit = curve("abs", -2.0, 2.0, |t| t.abs());
        let s = DerivSchedule::for_width(4.0);
        assert!(matches!(
            limsup_derivative_check(&curves, &limit, 0.0, &s),
            Err(ConvexError::NotConverging { .. })
        ));
    }

    /// Random positive mixture of kinks plus an affine term, with the
    /// analytic one-sided derivatives.
    #[derive(Debug, Clone)]
    struct KinkMix {
        kinks: Vec<(f64, f64)>, // (position, positive weight)
        slope: f64,
        offset: f64,
    }

    impl KinkMix {
        fn eval(&self, t: f64) -> f64 {
            self.offset
                + self.slope * t
                + self
                    .kinks
                    .iter()
                    .map(|&(a, w)| w * (t - a).abs())
                    .sum::<f64>()
        }

        fn right_deriv(&self, t: f64) -> f64 {
            self.slope
                + self
                    .kinks
                    .iter()
                    .map(|&(a, w)| if t >= a { w } else { -w })
                    .sum::<f64>()
        }

        fn left_deriv(&self, t: f64) -> f64 {
            self.slope
                + self
                    .kinks
                    .iter()
                    .map(|&(a, w)| if t > a { w } else { -w })
                    .sum::<f64>()
        }

        fn curve(&self) -> ConvexCurve {
            let mix = self.clone();
            ConvexCurve::new("kink-mix", -4.0, 4.0, move |t| mix.eval(t)).unwrap()
        }
    }

    fn kink_mix_strategy() -> impl Strategy<Value = KinkMix> {
        (
            prop::collection::vec(((-3.0..3.0f64), (0.1..2.0f64)), 1..6),
            -2.0..2.0f64,
            -1.0..1.0f64,
        )
            .prop_map(|(kinks, slope, offset)| KinkMix {
                kinks,
                slope,
                offset,
            })
    }

    proptest! {
        #[test]
        fn quotients_monotone_and_ordered(mix in kink_mix_strategy(), t in -2.0..2.0f64) {
            let c = mix.curve();
            let s = DerivSchedule::for_curve(&c);
            let dp = deriv_pair(&c, t, &s).unwrap();
            prop_assert!(dp.left <= dp.right + TOL_DERIV);
        }

        #[test]
        fn derivatives_match_analytic_away_from_kinks(mix in kink_mix_strategy(), t in -2.0..2.0f64) {
            // keep a gap below the schedule's final step
            prop_assume!(mix.kinks.iter().all(|&(a, _)| (t - a).abs() > 1e-3));
            let c = mix.curve();
            let s = DerivSchedule::for_curve(&c);
            let dp = deriv_pair(&c, t, &s).unwrap();
            prop_assert!((dp.right - mix.right_deriv(t)).abs() <= 10.0 * TOL_DERIV);
            prop_assert!((dp.left - mix.left_deriv(t)).abs() <= 10.0 * TOL_DERIV);
        }

        #[test]
        fn minimize_agrees_with_grid(mix in kink_mix_strategy()) {
            let c = mix.curve();
            let (t_min, v_min) = minimize_convex(&c, 1e-7).unwrap();
            let grid = uniform_grid(-4.0, 4.0, 20_001);
            let (tg, vg) = grid
                .iter()
                .map(|&t| (t, c.value(t)))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            let spacing = 8.0 / 20_000.0;
            prop_assert!((t_min - tg).abs() <= spacing + 1e-7);
            // the golden result can only undercut the grid minimum
            prop_assert!(v_min <= vg + TOL_CONVEX);
        }
    }
}
