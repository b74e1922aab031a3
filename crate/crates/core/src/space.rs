//! Finite metric spaces standing in for a compact domain: validation of
//! the metric axioms, scalar fields aligned to the point order,
//! sup-attaining sets, ε-graph connectivity and the sup-preserving
//! perturbation that isolates a chosen maximizer.
//!
//! Spaces are immutable after construction and shared through `Arc`;
//! fields carry a reference to their space, never a copy.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::tol::TOL_METRIC;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("space must contain at least one point")]
    Empty,
    #[error("distance matrix is {rows}x{cols}, expected {n}x{n}")]
    DimensionMismatch { rows: usize, cols: usize, n: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: String },
    #[error("field has {got} values, space has {expected} points")]
    FieldLength { expected: usize, got: usize },
    #[error("field does not reference this space")]
    FieldSpaceMismatch,
    #[error("no point labelled `{label}`")]
    PointNotFound { label: String },
    #[error("subset of points is empty")]
    EmptySubset,
    #[error("eps must be positive, got {eps}")]
    BadEps { eps: f64 },
    #[error("perturbation requires d({x0}, {y0}) > 0, got {dist}")]
    DegeneratePair { x0: String, y0: String, dist: f64 },
    #[error("point {x} sits at zero distance from {x0}; sup cannot be isolated")]
    ZeroDistance { x: String, x0: String },
    #[error("{label} does not attain the supremum {sup} (value {value})")]
    NotSupAttaining { label: String, value: f64, sup: f64 },
}

/// A finite point set with a validated-shape distance matrix.
#[derive(Debug, Clone)]
pub struct DiscreteMetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>, // row-major n*n
}

/// Signed coordinate label used for 1-d grids: `+1.0`, `-0.25`, ...
pub fn coordinate_label(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    if x.is_sign_negative() {
        format!("{x:?}")
    } else {
        format!("+{x:?}")
    }
}

impl DiscreteMetricSpace {
    /// Builds a space from labels and a row-major distance matrix.
    /// Checks shape and finiteness only; the metric axioms are checked
    /// separately by [`validate_space`].
    pub fn new(labels: Vec<String>, dist_rows: Vec<Vec<f64>>) -> Result<Arc<Self>, SpaceError> {
        let n = labels.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        if dist_rows.len() != n || dist_rows.iter().any(|r| r.len() != n) {
            return Err(SpaceError::DimensionMismatch {
                rows: dist_rows.len(),
                cols: dist_rows.first().map_or(0, |r| r.len()),
                n,
            });
        }
        let mut dist = Vec::with_capacity(n * n);
        for row in &dist_rows {
            for &d in row {
                if !d.is_finite() {
                    return Err(SpaceError::NonFinite {
                        what: "distance matrix".into(),
                    });
                }
                dist.push(d);
            }
        }
        Ok(Arc::new(DiscreteMetricSpace { labels, dist }))
    }

    /// 1-d point set with `|x - y|` distances; labels are the signed
    /// coordinates.
    pub fn from_points_1d(xs: &[f64]) -> Result<Arc<Self>, SpaceError> {
        if xs.is_empty() {
            return Err(SpaceError::Empty);
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(SpaceError::NonFinite {
                what: "points_1d".into(),
            });
        }
        let n = xs.len();
        let labels = xs.iter().map(|&x| coordinate_label(x)).collect();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = (xs[i] - xs[j]).abs();
            }
        }
        Ok(Arc::new(DiscreteMetricSpace { labels, dist }))
    }

    /// Uniform grid of `n` points on `[lo, hi]`.
    pub fn interval_grid(lo: f64, hi: f64, n: usize) -> Arc<Self> {
        assert!(n >= 1 && lo.is_finite() && hi.is_finite() && lo <= hi);
        let xs = if n == 1 {
            vec![lo]
        } else {
            crate::convex1d::uniform_grid(lo, hi, n)
        };
        Self::from_points_1d(&xs).expect("grid points are finite")
    }

    /// `n` equally spaced points on a circle of the given radius, with
    /// arc-length distances.
    pub fn circle(n: usize, radius: f64) -> Arc<Self> {
        assert!(n >= 1 && radius > 0.0);
        let tau = std::f64::consts::TAU;
        let labels = (0..n).map(|i| format!("theta{i}")).collect();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let gap = (i as f64 - j as f64).abs() * tau / n as f64;
                dist[i * n + j] = radius * gap.min(tau - gap);
            }
        }
        Arc::new(DiscreteMetricSpace { labels, dist })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 is enforced at construction
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize, SpaceError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| SpaceError::PointNotFound {
                label: label.to_string(),
            })
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    /// Smallest strictly positive pairwise distance, if any. For a
    /// uniform grid this is the pitch.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        let n = self.len();
        for i in 0..n {
            for j in i + 1..n {
                let d = self.distance(i, j);
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        best.is_finite().then_some(best)
    }
}

/// One failed metric axiom, naming the offending points.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricViolation {
    NonzeroDiagonal {
        i: usize,
        value: f64,
    },
    Negative {
        i: usize,
        j: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        defect: f64,
    },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricViolation::NonzeroDiagonal { i, value } => {
                write!(f, "d({i}, {i}) = {value}, expected 0")
            }
            MetricViolation::Negative { i, j, value } => {
                write!(f, "d({i}, {j}) = {value} is negative")
            }
            MetricViolation::Asymmetric {
                i,
                j,
                forward,
                backward,
            } => write!(f, "d({i}, {j}) = {forward} but d({j}, {i}) = {backward}"),
            MetricViolation::Triangle { i, j, k, defect } => write!(
                f,
                "d({i}, {j}) exceeds d({i}, {k}) + d({k}, {j}) by {defect:e}"
            ),
        }
    }
}

/// Checks diagonal, positivity and symmetry in O(n^2). Used by loaders
/// that cannot afford the cubic triangle sweep.
pub fn quick_validate(space: &DiscreteMetricSpace, tol: f64) -> Vec<MetricViolation> {
    let n = space.len();
    let mut out = Vec::new();
    for i in 0..n {
        let dii = space.distance(i, i);
        if dii.abs() > tol {
            out.push(MetricViolation::NonzeroDiagonal { i, value: dii });
        }
        for j in i + 1..n {
            let dij = space.distance(i, j);
            let dji = space.distance(j, i);
            if dij < -tol {
                out.push(MetricViolation::Negative { i, j, value: dij });
            }
            if (dij - dji).abs() > tol {
                out.push(MetricViolation::Asymmetric {
                    i,
                    j,
                    forward: dij,
                    backward: dji,
                });
            }
        }
    }
    out
}

/// Full metric-axiom validation including the O(n^3) triangle sweep.
/// Returns an empty list iff all axioms hold within `tol`.
pub fn validate_space_with(space: &DiscreteMetricSpace, tol: f64) -> Vec<MetricViolation> {
    let mut out = quick_validate(space, tol);
    let n = space.len();
    for i in 0..n {
        for j in 0..n {
            let dij = space.distance(i, j);
            for k in 0..n {
                let detour = space.distance(i, k) + space.distance(k, j);
                if dij > detour + tol {
                    out.push(MetricViolation::Triangle {
                        i,
                        j,
                        k,
                        defect: dij - detour,
                    });
                }
            }
        }
    }
    out
}

pub fn validate_space(space: &DiscreteMetricSpace) -> Vec<MetricViolation> {
    validate_space_with(space, TOL_METRIC)
}

/// Values of a scalar function aligned to the point order of a space.
#[derive(Debug, Clone)]
pub struct ScalarField {
    space: Arc<DiscreteMetricSpace>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(space: Arc<DiscreteMetricSpace>, values: Vec<f64>) -> Result<Self, SpaceError> {
        if values.len() != space.len() {
            return Err(SpaceError::FieldLength {
                expected: space.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpaceError::NonFinite {
                what: "field values".into(),
            });
        }
        Ok(ScalarField { space, values })
    }

    pub fn from_fn(
        space: &Arc<DiscreteMetricSpace>,
        f: impl FnMut(usize) -> f64,
    ) -> Result<Self, SpaceError> {
        let values = (0..space.len()).map(f).collect();
        Self::new(space.clone(), values)
    }

    pub fn space(&self) -> &Arc<DiscreteMetricSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm `max |f|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise absolute value, on the same space.
    pub fn abs(&self) -> ScalarField {
        ScalarField {
            space: self.space.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Result<ScalarField, SpaceError> {
        ScalarField::new(
            self.space.clone(),
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    /// True when both fields live on the same space instance (or at
    /// least on identically labelled spaces of the same size).
    pub fn same_space(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
            || (self.space.len() == other.space.len()
                && self.space.labels() == other.space.labels())
    }
}

/// The set of points attaining the supremum of a field, up to `tol_used`.
#[derive(Debug, Clone)]
pub struct SupSet {
    pub indices: Vec<usize>,
    pub sup_value: f64,
    pub tol_used: f64,
}

impl SupSet {
    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }
}

/// All indices whose value is within `tol` of the maximum.
pub fn sup_attaining_set(field: &ScalarField, tol: f64) -> SupSet {
    assert!(tol >= 0.0);
    let sup_value = field.sup();
    let indices = (0..field.len())
        .filter(|&i| field.value(i) >= sup_value - tol)
        .collect();
    SupSet {
        indices,
        sup_value,
        tol_used: tol,
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]]; // path halving
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, i: usize, j: usize) {
        let (mut a, mut b) = (self.find(i), self.find(j));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// True iff the graph on `subset` with edges between points at distance
/// at most `eps` is a single component.
pub fn epsilon_connected(
    space: &DiscreteMetricSpace,
    subset: &[usize],
    eps: f64,
) -> Result<bool, SpaceError> {
    if subset.is_empty() {
        return Err(SpaceError::EmptySubset);
    }
    if !(eps > 0.0) {
        return Err(SpaceError::BadEps { eps });
    }
    let k = subset.len();
    let mut uf = UnionFind::new(k);
    for a in 0..k {
        for b in a + 1..k {
            if space.distance(subset[a], subset[b]) <= eps {
                uf.union(a, b);
            }
        }
    }
    let root = uf.find(0);
    Ok((1..k).all(|a| uf.find(a) == root))
}

/// Sup-preserving perturbation that pulls every point except `x0` down:
///
/// `f_eps(x) = f(x) - eps * d(x, x0) / (d(x, x0) + d(x, y0))`
///
/// For `x0` in the sup-attaining set and `d(x0, y0) > 0` the result
/// satisfies `|f - f_eps| <= eps`, `f_eps <= f`, `sup f_eps = sup f`, and
/// the sup-attaining set of the result is exactly `{x0}`.
pub fn density_perturbation(
    field: &ScalarField,
    x0: usize,
    y0: usize,
    eps: f64,
) -> Result<ScalarField, SpaceError> {
    let space = field.space();
    if eps < 0.0 {
        return Err(SpaceError::BadEps { eps });
    }
    let d00 = space.distance(x0, y0);
    if x0 == y0 || d00 <= 0.0 {
        return Err(SpaceError::DegeneratePair {
            x0: space.label(x0).to_string(),
            y0: space.label(y0).to_string(),
            dist: d00,
        });
    }
    let sup = field.sup();
    if field.value(x0) < sup - crate::tol::sup_set_tol(sup) {
        return Err(SpaceError::NotSupAttaining {
            label: space.label(x0).to_string(),
            value: field.value(x0),
            sup,
        });
    }
    if eps == 0.0 {
        return Ok(field.clone());
    }
    for x in 0..field.len() {
        if x != x0 && space.distance(x, x0) <= 0.0 {
            return Err(SpaceError::ZeroDistance {
                x: space.label(x).to_string(),
                x0: space.label(x0).to_string(),
            });
        }
    }
    let values = (0..field.len())
        .map(|x| {
            let dx0 = space.distance(x, x0);
            let dy0 = space.distance(x, y0);
            // denominator >= d(x0, y0) > 0 by the triangle inequality
            field.value(x) - eps * dx0 / (dx0 + dy0)
        })
        .collect();
    ScalarField::new(space.clone(), values)
}
