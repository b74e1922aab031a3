//! Deterministic fixture generators shared by property tests, the
//! acceptance suite and the benchmarks. Every generator takes an
//! explicit seed so failures reproduce exactly.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::extension::{Family, HSpec};
use crate::space::{DiscreteMetricSpace, ScalarField};

/// Random finite metric built by shortest-path closure of a random
/// symmetric weight matrix (Floyd-Warshall), so the triangle inequality
/// holds by construction.
pub fn random_metric_space(n: usize, seed: u64) -> Arc<DiscreteMetricSpace> {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.gen_range(0.1..2.0);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let detour = d[i][k] + d[k][j];
                if detour < d[i][j] {
                    d[i][j] = detour;
                }
            }
        }
    }
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    DiscreteMetricSpace::new(labels, d).expect("closure distances are finite")
}

/// One of three space shapes (interval grid, circle, random metric),
/// chosen and sized by the seed. `n` bounds the point count.
pub fn random_space(n_min: usize, n_max: usize, seed: u64) -> Arc<DiscreteMetricSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(n_min..=n_max);
    match rng.gen_range(0..3) {
        0 => DiscreteMetricSpace::interval_grid(-1.0, 1.0, n),
        1 => DiscreteMetricSpace::circle(n, rng.gen_range(0.5..2.0)),
        _ => random_metric_space(n.min(160), seed ^ 0x5eed),
    }
}

/// Random field with `ties` points planted at the exact maximum, so the
/// sup-attaining set has known, non-trivial membership.
pub fn field_with_ties(
    space: &Arc<DiscreteMetricSpace>,
    ties: usize,
    seed: u64,
) -> (ScalarField, Vec<usize>) {
    let n = space.len();
    let ties = ties.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let peak: f64 = rng.gen_range(0.5..1.5);
    let mut values: Vec<f64> = (0..n).map(|_| peak - rng.gen_range(0.05..1.0)).collect();
    let mut planted = Vec::with_capacity(ties);
    while planted.len() < ties {
        let i = rng.gen_range(0..n);
        if !planted.contains(&i) {
            planted.push(i);
            values[i] = peak;
        }
    }
    planted.sort_unstable();
    (
        ScalarField::new(space.clone(), values).expect("finite values"),
        planted,
    )
}

/// Random extension fixture: a base field with planted ties and one of
/// the three scalar family kinds. Returns the family together with the
/// base it extends.
pub fn random_family(space: &Arc<DiscreteMetricSpace>, seed: u64) -> (ScalarField, Family) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let ties = rng.gen_range(1..=6.min(n));
    match rng.gen_range(0..3) {
        0 => {
            let (base, _) = field_with_ties(space, ties, seed ^ 0xAFF1);
            let slopes = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            (base, Family::Affine { slopes })
        }
        1 => {
            // plant ties in |a| with mixed signs; keep the magnitudes
            // away from zero so section kinks stay away from t = 0
            let peak: f64 = rng.gen_range(0.6..1.5);
            let mut offsets: Vec<f64> = (0..n)
                .map(|_| {
                    let mag = peak - rng.gen_range(0.05..0.5);
                    mag * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
                })
                .collect();
            for _ in 0..ties {
                let i = rng.gen_range(0..n);
                offsets[i] = peak * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
            let slopes: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let base = ScalarField::new(space.clone(), offsets.iter().map(|a| a.abs()).collect())
                .expect("finite");
            (base, Family::AbsAffine { offsets, slopes })
        }
        _ => {
            let (base, _) = field_with_ties(space, ties, seed ^ 0xAFF2);
            (
                base,
                Family::Shifted {
                    shift: random_shift(&mut rng),
                },
            )
        }
    }
}

/// Random convex shift `h` with `h(0) = 0`: a positive mixture of kinks
/// plus an affine part, encoded as a max-affine envelope. Kink
/// positions stay away from 0 (or sit exactly at 0) so grid-resolution
/// artifacts cannot blur the verdict.
pub fn random_shift(rng: &mut ChaCha8Rng) -> HSpec {
    let kinks = rng.gen_range(1..4);
    let mut breaks: Vec<(f64, f64)> = (0..kinks)
        .map(|_| {
            let pos = if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.2..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            };
            (pos, rng.gen_range(0.1..1.5))
        })
        .collect();
    breaks.sort_by(|a, b| a.0.total_cmp(&b.0));

    // walk the breakpoints left to right, emitting one affine piece per
    // linear segment; the running value keeps the pieces continuous
    let mut slope: f64 = rng.gen_range(-2.0..2.0);
    let mut t_curr = breaks[0].0;
    let mut v_curr = 0.0;
    let mut pieces: Vec<(f64, f64)> = vec![(slope, v_curr - slope * t_curr)];
    for &(pos, jump) in &breaks {
        v_curr += slope * (pos - t_curr);
        t_curr = pos;
        slope += jump;
        pieces.push((slope, v_curr - slope * t_curr));
    }
    // anchor the envelope so h(0) = 0
    let h0 = pieces
        .iter()
        .map(|&(_, c)| c)
        .fold(f64::NEG_INFINITY, f64::max);
    for piece in &mut pieces {
        piece.1 -= h0;
    }
    HSpec::MaxAffine { pieces }
}

/// Random convex kink-mixture curve on `[-4, 4]` for minimizer tests:
/// positive kink weights plus an affine term.
pub fn random_kink_curve(seed: u64) -> crate::convex1d::ConvexCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinks: Vec<(f64, f64)> = (0..rng.gen_range(1..6))
        .map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(0.1..2.0)))
        .collect();
    let slope: f64 = rng.gen_range(-1.0..1.0);
    let offset: f64 = rng.gen_range(-1.0..1.0);
    crate::convex1d::ConvexCurve::new("random-kink-mix", -4.0, 4.0, move |t| {
        offset + slope * t + kinks.iter().map(|&(a, w)| w * (t - a).abs()).sum::<f64>()
    })
    .expect("fixed domain")
}
