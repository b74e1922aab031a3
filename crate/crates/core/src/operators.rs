//! Birkhoff-James orthogonality of matrix pairs: `A` is orthogonal to
//! `B` when `||A + t B|| >= ||A||` for every scalar `t`, with the
//! operator norm induced by the tagged vector norm.
//!
//! Three routes are provided:
//!
//! * a section criterion on a sampled unit sphere, through the family
//!   `p(x, t) = ||A x + t B x||` over the base `x -> ||A x||`;
//! * a minimization oracle for `t -> ||A + t B||` (power iteration on
//!   the normal matrix for the Euclidean norm, sample maxima otherwise;
//!   the latter is a lower bound on the true norm);
//! * the Euclidean inner-product witness: a unit norm-attaining vector
//!   `x` with `<A x, B x> = 0`, found through the top singular subspace
//!   of `A`.

use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::extension::{
    build_extension, is_bj_extension_criterion, ExtensionError, Family, WitnessReport,
};
use crate::norms::NormTag;
use crate::space::{DiscreteMetricSpace, ScalarField};
use crate::tol::{POWER_ITER_REL_TOL, SV_CLUSTER_REL_TOL};

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("matrix A is zero; orthogonality is undefined")]
    ZeroMatrix,
    #[error("matrix dimensions disagree: {detail}")]
    DimensionMismatch { detail: String },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("norm `{tag}` is not supported here")]
    UnsupportedNorm { tag: String },
    #[error("sphere sample needs at least {min} points (2 per coordinate direction), got {count}")]
    CountTooSmall { count: usize, min: usize },
    #[error("power iteration failed to converge after {restarts} restarts")]
    PowerIterationBreakdown { restarts: usize },
    #[error(transparent)]
    Extension(#[from] ExtensionError),
}

/// A pair of real square matrices with the norm tag that induces their
/// operator norm.
#[derive(Debug, Clone)]
pub struct MatrixPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub norm: NormTag,
}

impl MatrixPair {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, norm: NormTag) -> Result<Self, OperatorError> {
        if a.nrows() != a.ncols() || a.shape() != b.shape() {
            return Err(OperatorError::DimensionMismatch {
                detail: format!("A is {:?}, B is {:?}", a.shape(), b.shape()),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        if let NormTag::P(p) = norm {
            if !(p >= 1.0) {
                return Err(OperatorError::UnsupportedNorm {
                    tag: norm.to_string(),
                });
            }
        }
        Ok(MatrixPair { a, b, norm })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Unit vectors sampled on the sphere of the tagged norm, with a
/// derived metric space under the antipodal identification
/// `d(x, y) = min(||x - y||, ||x + y||)`.
#[derive(Debug, Clone)]
pub struct SphereSample {
    points: Vec<DVector<f64>>,
    labels: Vec<String>,
    norm: NormTag,
    seed: u64,
    space: OnceLock<Arc<DiscreteMetricSpace>>,
}

impl SphereSample {
    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn norm(&self) -> NormTag {
        self.norm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// The derived metric space; built on first use (the distance
    /// matrix is quadratic in the sample size).
    pub fn as_space(&self) -> &Arc<DiscreteMetricSpace> {
        self.space.get_or_init(|| {
            let n = self.points.len();
            let mut rows = vec![vec![0.0; n]; n];
            let mut diff = vec![0.0; self.points[0].len()];
            let mut sum = vec![0.0; self.points[0].len()];
            for i in 0..n {
                for j in i + 1..n {
                    for (k, d) in diff.iter_mut().enumerate() {
                        *d = self.points[i][k] - self.points[j][k];
                    }
                    for (k, s) in sum.iter_mut().enumerate() {
                        *s = self.points[i][k] + self.points[j][k];
                    }
                    let d = self
                        .norm
                        .vector_norm(&diff)
                        .min(self.norm.vector_norm(&sum));
                    rows[i][j] = d;
                    rows[j][i] = d;
                }
            }
            DiscreteMetricSpace::new(self.labels.clone(), rows)
                .expect("sample distances are finite")
        })
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

/// Deterministic sphere sample: both signs of every coordinate
/// direction first, then pseudo-random directions normalized under the
/// tagged norm.
pub fn sample_sphere(
    dim: usize,
    norm: NormTag,
    count: usize,
    seed: u64,
) -> Result<SphereSample, OperatorError> {
    if dim == 0 {
        return Err(OperatorError::DimensionMismatch {
            detail: "dimension must be positive".into(),
        });
    }
    if count < 2 * dim {
        return Err(OperatorError::CountTooSmall {
            count,
            min: 2 * dim,
        });
    }
    let mut points = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = DVector::zeros(dim);
            v[i] = sign;
            let scale = norm.vector_norm(v.as_slice());
            points.push(v / scale);
            labels.push(format!("{}e{i}", if sign > 0.0 { "+" } else { "-" }));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while points.len() < count {
        let v = DVector::from_fn(dim, |_, _| gaussian(&mut rng));
        let scale = norm.vector_norm(v.as_slice());
        if scale < 1e-12 {
            continue;
        }
        labels.push(format!("s{:04}", points.len()));
        points.push(v / scale);
    }
    Ok(SphereSample {
        points,
        labels,
        norm,
        seed,
        space: OnceLock::new(),
    })
}

/// Spectral norm (largest singular value) by power iteration on the
/// normal matrix `MᵀM` at relative tolerance `rel_tol`, with a small
/// Rayleigh-Ritz polish on the Krylov triple `{v, Nv, N²v}` so
/// near-degenerate top eigenvalues still converge. Stagnation restarts
/// with a perturbed vector; three restarts exhaust the budget.
pub fn spectral_norm(m: &DMatrix<f64>, rel_tol: f64) -> Result<f64, OperatorError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "spectral norm needs a square matrix");
    let fro = m.norm();
    if fro == 0.0 {
        return Ok(0.0);
    }
    let normal = m.transpose() * m;
    let scale = normal.norm();

    for attempt in 0..4usize {
        let mut v: DVector<f64> = if attempt == 0 {
            DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i as f64 + 1.0))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0xB10F + attempt as u64);
            DVector::from_fn(n, |_, _| gaussian(&mut rng))
        };
        v /= v.norm();

        let mut kernel_hit = false;
        for _round in 0..6 {
            for _ in 0..150 {
                let w = &normal * &v;
                let wn = w.norm();
                if wn <= 1e-300 {
                    kernel_hit = true; // started inside the kernel
                    break;
                }
                v = w / wn;
            }
            if kernel_hit {
                break;
            }

            // Rayleigh-Ritz on {v, Nv, N^2 v}; the candidates nearly
            // cancel against v when the top eigenvalues cluster, so
            // orthogonalize twice to keep the basis orthonormal
            let mut basis: Vec<DVector<f64>> = vec![v.clone()];
            let mut next = &normal * &v;
            for _ in 0..2 {
                let mut cand = next.clone();
                for _pass in 0..2 {
                    for q in &basis {
                        let c = q.dot(&cand);
                        cand -= q * c;
                    }
                }
                let cn = cand.norm();
                if cn > 1e-12 * next.norm().max(1e-300) {
                    basis.push(cand / cn);
                }
                next = &normal * &next;
            }
            let k = basis.len();
            let s = DMatrix::from_fn(k, k, |i, j| basis[i].dot(&(&normal * &basis[j])));
            let s = (&s + s.transpose()) * 0.5;
            let eig = SymmetricEigen::new(s);
            let (top, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty spectrum");
            let lambda = eig.eigenvalues[top];
            let mut ritz = DVector::zeros(n);
            for (j, q) in basis.iter().enumerate() {
                ritz += q * eig.eigenvectors[(j, top)];
            }
            let rn = ritz.norm();
            if rn > 0.0 {
                v = ritz / rn;
            }

            let residual = (&normal * &v - &v * lambda).norm();
            if residual <= 10.0 * rel_tol * lambda.abs().max(1e-300) + 1e-14 * scale {
                return Ok(lambda.max(0.0).sqrt());
            }
        }
    }
    Err(OperatorError::PowerIterationBreakdown { restarts: 3 })
}

/// Operator norm of `m` under the pair's norm tag: exact power
/// iteration for the Euclidean norm, maximum of `||m x||` over the
/// sample otherwise (a lower bound on the true norm).
fn operator_norm(
    m: &DMatrix<f64>,
    norm: NormTag,
    sample: Option<&SphereSample>,
) -> Result<f64, OperatorError> {
    match norm {
        NormTag::Euclidean => spectral_norm(m, POWER_ITER_REL_TOL),
        _ => {
            let sample = sample.expect("non-Euclidean operator norm needs a sphere sample");
            let mut best = 0.0_f64;
            for x in sample.points() {
                let y = m * x;
                best = best.max(norm.vector_norm(y.as_slice()));
            }
            Ok(best)
        }
    }
}

/// Section criterion on the sampled sphere: builds the family
/// `p(x, t) = ||A x + t B x||` over the base `||A x||` and applies the
/// derivative criterion; the sup-attaining set of the base approximates
/// the norm-attaining set of `A`.
pub fn bj_operator_criterion(
    pair: &MatrixPair,
    sample: &SphereSample,
    tol: f64,
) -> Result<WitnessReport, OperatorError> {
    if sample.points()[0].len() != pair.dim() {
        return Err(OperatorError::DimensionMismatch {
            detail: format!(
                "sample dimension {} vs matrix dimension {}",
                sample.points()[0].len(),
                pair.dim()
            ),
        });
    }
    if pair.a.norm() == 0.0 {
        return Err(OperatorError::ZeroMatrix);
    }
    let space = sample.as_space().clone();
    let a_vectors: Vec<Vec<f64>> = sample
        .points()
        .iter()
        .map(|x| (&pair.a * x).as_slice().to_vec())
        .collect();
    let b_vectors: Vec<Vec<f64>> = sample
        .points()
        .iter()
        .map(|x| (&pair.b * x).as_slice().to_vec())
        .collect();
    let base_values: Vec<f64> = a_vectors.iter().map(|v| pair.norm.vector_norm(v)).collect();
    let base = ScalarField::new(space.clone(), base_values).map_err(ExtensionError::from)?;
    let family = Family::NormFamily {
        a_vectors,
        b_vectors,
        norm: pair.norm,
    };
    let ext = build_extension(&space, &base, family)?;
    Ok(is_bj_extension_criterion(&ext, tol)?)
}

/// Default sample size for non-Euclidean oracles and criterion runs.
pub fn default_sample_count(dim: usize) -> usize {
    500 * dim
}

/// Minimizes the convex map `t -> ||A + t B||` and returns
/// `(min, argmin)`. The bracket starts at `[-1, 1]` and doubles until
/// both endpoint values exceed the value at 0. A zero `B` short-circuits
/// to `(||A||, 0)`.
pub fn bj_operator_oracle(pair: &MatrixPair, tol_t: f64) -> Result<(f64, f64), OperatorError> {
    match pair.norm {
        NormTag::Euclidean => oracle_impl(pair, None, tol_t),
        _ => {
            let sample = sample_sphere(pair.dim(), pair.norm, default_sample_count(pair.dim()), 0)?;
            oracle_impl(pair, Some(&sample), tol_t)
        }
    }
}

/// Oracle with a caller-supplied sphere sample (mandatory for
/// non-Euclidean norms, ignored for the Euclidean one).
pub fn bj_operator_oracle_sampled(
    pair: &MatrixPair,
    sample: &SphereSample,
    tol_t: f64,
) -> Result<(f64, f64), OperatorError> {
    match pair.norm {
        NormTag::Euclidean => oracle_impl(pair, None, tol_t),
        _ => oracle_impl(pair, Some(sample), tol_t),
    }
}

fn oracle_impl(
    pair: &MatrixPair,
    sample: Option<&SphereSample>,
    tol_t: f64,
) -> Result<(f64, f64), OperatorError> {
    if pair.a.norm() == 0.0 {
        return Err(OperatorError::ZeroMatrix);
    }
    if pair.b.norm() == 0.0 {
        return Ok((operator_norm(&pair.a, pair.norm, sample)?, 0.0));
    }

    // precompute A x / B x per sample point so each norm evaluation is
    // a single pass
    let precomputed: Option<(Vec<DVector<f64>>, Vec<DVector<f64>>)> = sample.map(|s| {
        (
            s.points().iter().map(|x| &pair.a * x).collect(),
            s.points().iter().map(|x| &pair.b * x).collect(),
        )
    });

    let failure: Arc<Mutex<Option<OperatorError>>> = Arc::new(Mutex::new(None));
    let phi: Box<dyn Fn(f64) -> f64 + Send + Sync> = match &precomputed {
        Some((ax, bx)) => {
            let norm = pair.norm;
            let ax = ax.clone();
            let bx = bx.clone();
            Box::new(move |t: f64| {
                let mut best = 0.0_f64;
                let mut buf = vec![0.0; ax[0].len()];
                for (a, b) in ax.iter().zip(&bx) {
                    for k in 0..buf.len() {
                        buf[k] = a[k] + t * b[k];
                    }
                    best = best.max(norm.vector_norm(&buf));
                }
                best
            })
        }
        None => {
            let a = pair.a.clone();
            let b = pair.b.clone();
            let failure = failure.clone();
            Box::new(move |t: f64| {
                let m = &a + &b * t;
                match spectral_norm(&m, POWER_ITER_REL_TOL) {
                    Ok(v) => v,
                    Err(e) => {
                        *failure.lock().unwrap() = Some(e);
                        f64::INFINITY
                    }
                }
            })
        }
    };

    let phi0 = phi(0.0);
    let mut half = 1.0_f64;
    for _ in 0..64 {
        if phi(half) > phi0 && phi(-half) > phi0 {
            break;
        }
        half *= 2.0;
    }

    let curve = crate::convex1d::ConvexCurve::new("operator-norm(A + t B)", -half, half, phi)
        .expect("finite bracket");
    let result = crate::convex1d::minimize_convex(&curve, tol_t);
    if let Some(err) = failure.lock().unwrap().take() {
        return Err(err);
    }
    let (argmin, min) = result.map_err(ExtensionError::from)?;
    Ok((min, argmin))
}

/// Euclidean inner-product witness: a unit vector in the top singular
/// subspace of `A` (singular values within [`SV_CLUSTER_REL_TOL`] of
/// the largest) with `|<A x, B x>| <= tol * ||A|| * ||B||`, or `None`.
///
/// On the subspace the quadratic form `x -> <A x, B x>` is represented
/// by a small symmetric matrix; a witness exists iff its eigenvalues
/// straddle zero within the threshold, in which case mixing the extreme
/// eigenvectors zeroes the form exactly.
pub fn bhatia_semrl_euclidean(
    pair: &MatrixPair,
    tol: f64,
) -> Result<Option<DVector<f64>>, OperatorError> {
    if pair.norm != NormTag::Euclidean {
        return Err(OperatorError::UnsupportedNorm {
            tag: pair.norm.to_string(),
        });
    }
    let n = pair.dim();
    let svd = pair.a.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma1 = svd.singular_values[order[0]];
    if sigma1 <= 0.0 {
        return Err(OperatorError::ZeroMatrix);
    }
    let cluster: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&i| svd.singular_values[i] >= sigma1 * (1.0 - SV_CLUSTER_REL_TOL))
        .collect();
    let k = cluster.len();

    // columns of v_top span the top singular subspace
    let v_top = DMatrix::from_fn(n, k, |r, c| v_t[(cluster[c], r)]);
    let cross = pair.a.transpose() * &pair.b;
    let projected = v_top.transpose() * &cross * &v_top;
    let form = (&projected + projected.transpose()) * 0.5;
    let eig = SymmetricEigen::new(form);

    let (min_idx, max_idx) = {
        let mut min_idx = 0;
        let mut max_idx = 0;
        for i in 1..k {
            if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
                min_idx = i;
            }
            if eig.eigenvalues[i] > eig.eigenvalues[max_idx] {
                max_idx = i;
            }
        }
        (min_idx, max_idx)
    };
    let lambda_min = eig.eigenvalues[min_idx];
    let lambda_max = eig.eigenvalues[max_idx];
    let tau = tol * sigma1 * spectral_norm(&pair.b, POWER_ITER_REL_TOL)?;
    if lambda_min > tau || lambda_max < -tau {
        return Ok(None);
    }

    let coeffs: DVector<f64> = if lambda_min >= 0.0 {
        eig.eigenvectors.column(min_idx).into_owned()
    } else if lambda_max <= 0.0 {
        eig.eigenvectors.column(max_idx).into_owned()
    } else {
        // mix the extreme eigenvectors so the form vanishes exactly
        let w_min = lambda_max / (lambda_max - lambda_min);
        let w_max = -lambda_min / (lambda_max - lambda_min);
        eig.eigenvectors.column(min_idx) * w_min.sqrt()
            + eig.eigenvectors.column(max_idx) * w_max.sqrt()
    };
    let mut x = &v_top * coeffs;
    x /= x.norm();
    Ok(Some(x))
}
