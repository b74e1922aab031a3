//! Readers for the on-disk input formats.
//!
//! * Space JSON, either explicit or a 1-d point list:
//!   `{"points": ["a", ...], "dist": [[...], ...]}` or
//!   `{"points_1d": [x, ...], "metric": "absolute"}`
//! * Field CSV: one value per line, aligned to the point order.
//! * Family JSON: `{"kind": "affine" | "abs_affine" | "shifted" |
//!   "norm_family" | "table", ...}` (see [`crate::extension::Family`]).
//! * Matrix pair JSON: `{"A": [[...]], "B": [[...]], "norm": "euclidean"}`.
//!
//! Readers reject NaN and infinite values and report the offending
//! line or field.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;
use thiserror::Error;

use crate::extension::Family;
use crate::norms::NormTag;
use crate::operators::MatrixPair;
use crate::space::{DiscreteMetricSpace, ScalarField, SpaceError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {detail}")]
    Json { path: String, detail: String },
    #[error("{path}:{line}: {detail}")]
    Csv {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("{path}: {detail}")]
    Schema { path: String, detail: String },
}

fn read_to_string(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn json_err(path: &Path, err: impl std::fmt::Display) -> LoadError {
    LoadError::Json {
        path: path.display().to_string(),
        detail: err.to_string(),
    }
}

fn schema_err(path: &Path, detail: impl Into<String>) -> LoadError {
    LoadError::Schema {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpaceFile {
    Explicit {
        points: Vec<String>,
        dist: Vec<Vec<f64>>,
    },
    Grid1d {
        points_1d: Vec<f64>,
        metric: String,
    },
}

/// Loads a space, checking shape and finiteness. The metric axioms are
/// the caller's concern (`validate_space` / `quick_validate`).
pub fn load_space(path: &Path) -> Result<Arc<DiscreteMetricSpace>, LoadError> {
    let text = read_to_string(path)?;
    let file: SpaceFile = serde_json::from_str(&text).map_err(|e| json_err(path, e))?;
    let space = match file {
        SpaceFile::Explicit { points, dist } => DiscreteMetricSpace::new(points, dist),
        SpaceFile::Grid1d { points_1d, metric } => {
            if metric != "absolute" {
                return Err(schema_err(
                    path,
                    format!("unsupported 1-d metric `{metric}` (expected \"absolute\")"),
                ));
            }
            DiscreteMetricSpace::from_points_1d(&points_1d)
        }
    };
    space.map_err(|e: SpaceError| schema_err(path, e.to_string()))
}

/// Loads a field from CSV (one value per line) aligned to the space.
pub fn load_field(path: &Path, space: &Arc<DiscreteMetricSpace>) -> Result<ScalarField, LoadError> {
    let text = read_to_string(path)?;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| LoadError::Csv {
            path: path.display().to_string(),
            line: idx + 1,
            detail: format!("cannot parse `{line}` as a number"),
        })?;
        if !v.is_finite() {
            return Err(LoadError::Csv {
                path: path.display().to_string(),
                line: idx + 1,
                detail: format!("non-finite value {v}"),
            });
        }
        values.push(v);
    }
    ScalarField::new(space.clone(), values).map_err(|e| schema_err(path, e.to_string()))
}

/// Loads a family spec; shape validation against a space happens at
/// build time.
pub fn load_family(path: &Path) -> Result<Family, LoadError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

#[derive(Deserialize)]
struct MatrixFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    norm: NormTag,
}

fn matrix_from_rows(path: &Path, name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, LoadError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(schema_err(
            path,
            format!("{name} must be square and non-empty"),
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(schema_err(path, format!("{name} has a non-finite entry")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Loads an operator pair `{"A": ..., "B": ..., "norm": ...}`.
pub fn load_matrix_pair(path: &Path) -> Result<MatrixPair, LoadError> {
    let text = read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text).map_err(|e| json_err(path, e))?;
    let a = matrix_from_rows(path, "A", &file.a)?;
    let b = matrix_from_rows(path, "B", &file.b)?;
    MatrixPair::new(a, b, file.norm).map_err(|e| schema_err(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("bjortho-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{}-{name}", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn load_explicit_space() {
        let path = temp_file(
            "explicit.json",
            r#"{"points": ["a", "b"], "dist": [[0.0, 1.0], [1.0, 0.0]]}"#,
        );
        let space = load_space(&path).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.distance(0, 1), 1.0);
    }

    #[test]
    fn load_grid_space() {
        let path = temp_file(
            "grid.json",
            r#"{"points_1d": [-1.0, 0.0, 1.0], "metric": "absolute"}"#,
        );
        let space = load_space(&path).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.label(2), "+1.0");
        assert_eq!(space.distance(0, 2), 2.0);
    }

    #[test]
    fn reject_unknown_metric() {
        let path = temp_file(
            "badmetric.json",
            r#"{"points_1d": [0.0, 1.0], "metric": "squared"}"#,
        );
        assert!(matches!(load_space(&path), Err(LoadError::Schema { .. })));
    }

    #[test]
    fn reject_infinite_distance() {
        // 1e999 overflows to infinity; the loader must reject it
        let path = temp_file(
            "inf.json",
            r#"{"points": ["a", "b"], "dist": [[0.0, 1e999], [1e999, 0.0]]}"#,
        );
        assert!(load_space(&path).is_err());
    }

    #[test]
    fn field_csv_round_trip_and_diagnostics() {
        let space = DiscreteMetricSpace::interval_grid(0.0, 1.0, 3);
        let good = temp_file("field.csv", "0.5\n-1.25\n3.0\n");
        let f = load_field(&good, &space).unwrap();
        assert_eq!(f.values(), &[0.5, -1.25, 3.0]);

        let bad = temp_file("badfield.csv", "0.5\nnot-a-number\n3.0\n");
        match load_field(&bad, &space) {
            Err(LoadError::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected CSV error, got {other:?}"),
        }

        let short = temp_file("short.csv", "0.5\n");
        assert!(matches!(
            load_field(&short, &space),
            Err(LoadError::Schema { .. })
        ));
    }

    #[test]
    fn load_matrix_pair_with_norm() {
        let path = temp_file(
            "pair.json",
            r#"{"A": [[1.0, 0.0], [0.0, 1.0]], "B": [[1.0, 0.0], [0.0, -1.0]], "norm": "euclidean"}"#,
        );
        let pair = load_matrix_pair(&path).unwrap();
        assert_eq!(pair.a.nrows(), 2);
        assert_eq!(pair.norm, NormTag::Euclidean);
    }

    #[test]
    fn reject_non_square_matrix() {
        let path = temp_file(
            "nonsquare.json",
            r#"{"A": [[1.0, 0.0]], "B": [[1.0]], "norm": "max"}"#,
        );
        assert!(matches!(
            load_matrix_pair(&path),
            Err(LoadError::Schema { .. })
        ));
    }
}
