//! End-to-end tests of the `bj-ortho` binary: fixture runs, exit
//! codes, report schemas and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bj-ortho"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn parse_report(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

struct Fixtures {
    dir: tempfile::TempDir,
}

impl Fixtures {
    fn new() -> Self {
        Fixtures {
            dir: tempfile::tempdir().expect("tempdir"),
        }
    }

    fn write(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// 201-point grid on [-1, 1] plus the family |x + t|.
    fn interval_with_shifted_abs(&self) -> (PathBuf, PathBuf) {
        let xs: Vec<f64> = (0..201)
            .map(|i| (i as f64 - (200 - i) as f64) / 200.0)
            .collect();
        let space = serde_json::json!({"points_1d": xs, "metric": "absolute"});
        let family = serde_json::json!({
            "kind": "abs_affine",
            "offsets": xs,
            "slopes": vec![1.0; 201],
        });
        (
            self.write("interval.json", &space.to_string()),
            self.write("ex23.json", &family.to_string()),
        )
    }
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bj_extension_end_to_end() {
    let fx = Fixtures::new();
    let (space, family) = fx.interval_with_shifted_abs();
    let out = run(&[
        "bj-extension",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
    ]);
    let report = parse_report(&out);

    assert_eq!(report["bj_extension"], Value::Bool(true));
    assert_eq!(report["criterion"], Value::Bool(true));
    assert_eq!(report["criterion_witnesses"][0], "+1.0");
    assert_eq!(report["criterion_witnesses"][1], "-1.0");
    assert_eq!(report["bs_witness"], Value::Null);
    assert_eq!(report["m_f_connected"], Value::Bool(false));
    assert!((report["criterion_derivatives"][0].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((report["criterion_derivatives"][1].as_f64().unwrap() + 1.0).abs() < 1e-6);
    // the effective config is embedded, defaults resolved
    assert_eq!(report["config"]["command"], "bj-extension");
    assert_eq!(report["config"]["grid_size"], 401);
    assert!((report["config"]["t_window"].as_f64().unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn reports_are_byte_identical() {
    let fx = Fixtures::new();
    let (space, family) = fx.interval_with_shifted_abs();
    let args = [
        "bj-extension",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
        "--seed",
        "7",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let fx = Fixtures::new();
    let (space, family) = fx.interval_with_shifted_abs();
    let out = run(&[
        "bj-extension",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("\"g_at_zero\":1.0000000000000000e0"),
        "expected 17-digit float serialization in {text}"
    );
}

#[test]
fn validate_space_accepts_grid_and_rejects_asymmetry() {
    let fx = Fixtures::new();
    let good = fx.write(
        "good.json",
        r#"{"points_1d": [0.0, 0.5, 1.0], "metric": "absolute"}"#,
    );
    let out = run(&["validate-space", "--space", arg(&good)]);
    let report = parse_report(&out);
    assert_eq!(report["valid"], Value::Bool(true));
    assert_eq!(report["points"], 3);

    let broken = fx.write(
        "broken.json",
        r#"{"points": ["a", "b"], "dist": [[0.0, 1.0], [2.0, 0.0]]}"#,
    );
    let out = run(&["validate-space", "--space", arg(&broken)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d(0, 1)"));
}

#[test]
fn cx_ortho_fixture() {
    let fx = Fixtures::new();
    let xs: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    let space = fx.write(
        "unit.json",
        &serde_json::json!({"points_1d": xs, "metric": "absolute"}).to_string(),
    );
    let f = fx.write("f.csv", &"1.0\n".repeat(101));
    let g_text: String = xs.iter().map(|x| format!("{}\n", 2.0 * x - 1.0)).collect();
    let g = fx.write("g.csv", &g_text);

    let out = run(&[
        "cx-ortho",
        "--space",
        arg(&space),
        "--f",
        arg(&f),
        "--g",
        arg(&g),
    ]);
    let report = parse_report(&out);
    assert_eq!(report["orthogonal"], Value::Bool(true));
    assert_eq!(report["pos_witness"], "+1.0");
    assert_eq!(report["neg_witness"], "+0.0");
    assert!((report["oracle_min"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(report["methods_agree"], Value::Bool(true));
    assert_eq!(report["criterion_agrees"], Value::Bool(true));
    // the resolved window for |f| = 1 (zero spread) is 2 * (1 + 0)
    assert!((report["config"]["t_window"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn op_ortho_fixture() {
    let fx = Fixtures::new();
    let pair = fx.write(
        "pair.json",
        r#"{"A": [[1.0, 0.0], [0.0, 1.0]], "B": [[1.0, 0.0], [0.0, -1.0]], "norm": "euclidean"}"#,
    );
    let out = run(&["op-ortho", "--matrices", arg(&pair), "--count", "64"]);
    let report = parse_report(&out);
    assert_eq!(report["orthogonal"], Value::Bool(true));
    assert_eq!(report["methods_agree"], Value::Bool(true));
    assert_eq!(report["approximation"], Value::Bool(false));
    let witness: Vec<f64> = report["witness_vector"]
        .as_array()
        .expect("witness for an orthogonal Euclidean pair")
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((witness[0].abs() - witness[1].abs()).abs() < 1e-9);
    assert!((report["oracle_min"].as_f64().unwrap() - 1.0).abs() < 1e-7);
}

#[test]
fn density_perturb_isolates_the_chosen_point() {
    let fx = Fixtures::new();
    let xs: Vec<f64> = (0..21)
        .map(|i| (i as f64 - (20 - i) as f64) / 20.0)
        .collect();
    let space = fx.write(
        "grid.json",
        &serde_json::json!({"points_1d": xs, "metric": "absolute"}).to_string(),
    );
    let f_text: String = xs.iter().map(|x| format!("{}\n", x.abs())).collect();
    let f = fx.write("f.csv", &f_text);
    let out = run(&[
        "density-perturb",
        "--space",
        arg(&space),
        "--f",
        arg(&f),
        "--x0",
        "+1.0",
        "--y0",
        "+0.0",
        "--eps",
        "0.1",
    ]);
    let report = parse_report(&out);
    assert_eq!(report["sup"].as_f64().unwrap(), 1.0);
    assert_eq!(report["sup_set"].as_array().unwrap().len(), 1);
    assert_eq!(report["sup_set"][0], "+1.0");
    assert!(report["max_deviation"].as_f64().unwrap() <= 0.1);
}

#[test]
fn maximizing_seq_on_truncated_model() {
    let fx = Fixtures::new();
    let n = 201;
    let r = 10.0;
    let xs: Vec<f64> = (0..n).map(|i| r * i as f64 / (n - 1) as f64).collect();
    let space = fx.write(
        "trunc.json",
        &serde_json::json!({"points_1d": xs, "metric": "absolute"}).to_string(),
    );
    let slopes: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
    let family = fx.write(
        "decay.json",
        &serde_json::json!({"kind": "affine", "slopes": slopes}).to_string(),
    );
    let f = fx.write("ones.csv", &"1.0\n".repeat(n));

    let out = run(&[
        "maximizing-seq",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
        "--f",
        arg(&f),
        "--side",
        "plus",
        "--terms",
        "6",
    ]);
    let report = parse_report(&out);
    assert!((report["limit_estimate"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    for v in report["right_derivs"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-6);
    }
    assert_eq!(report["indices"][0], "+0.0");
}

#[test]
fn maximizing_seq_exhaustion_is_a_numerical_failure() {
    // kink the shift at every candidate offset t1 * 2^-k so the
    // differentiability filter rejects them all
    let fx = Fixtures::new();
    let space = fx.write(
        "small.json",
        r#"{"points_1d": [0.0, 1.0], "metric": "absolute"}"#,
    );
    let f = fx.write("ones.csv", "1.0\n1.0\n");

    let mut breaks: Vec<f64> = (0..23).map(|k| 0.5f64.powi(k)).collect();
    breaks.sort_by(|a, b| a.total_cmp(b));
    let mut slope = -1.0;
    let mut t = breaks[0];
    let mut v = 0.0;
    let mut pieces = vec![(slope, v - slope * t)];
    for &bk in &breaks {
        v += slope * (bk - t);
        t = bk;
        slope += 0.2;
        pieces.push((slope, v - slope * t));
    }
    let h0 = pieces.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    for p in &mut pieces {
        p.1 -= h0;
    }
    let family = fx.write(
        "kinked.json",
        &serde_json::json!({"kind": "shifted", "shift": {"kind": "max_affine", "pieces": pieces}})
            .to_string(),
    );

    let out = run(&[
        "maximizing-seq",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
        "--f",
        arg(&f),
        "--side",
        "plus",
        "--terms",
        "3",
        "--t-window",
        "2.0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}

#[test]
fn envelope_dump_has_the_fixed_schema() {
    let fx = Fixtures::new();
    let (space, family) = fx.interval_with_shifted_abs();
    let csv = fx.path("envelope.csv");
    let out = run(&[
        "bj-extension",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
        "--grid-size",
        "11",
        "--dump-envelope",
        arg(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,g,argmax_index"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn malformed_inputs_exit_with_code_one() {
    let fx = Fixtures::new();
    let bad_json = fx.write("bad.json", "{not json");
    let out = run(&["validate-space", "--space", arg(&bad_json)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid JSON"));

    let out = run(&["validate-space", "--space", arg(&fx.path("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["bj-extension", "--space", arg(&bad_json)]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "missing --family is a usage error"
    );
}

#[test]
fn affine_family_without_base_field_is_rejected() {
    let fx = Fixtures::new();
    let space = fx.write(
        "s.json",
        r#"{"points_1d": [0.0, 1.0], "metric": "absolute"}"#,
    );
    let family = fx.write("aff.json", r#"{"kind": "affine", "slopes": [1.0, -1.0]}"#);
    let out = run(&[
        "bj-extension",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--f"));
}

#[test]
fn table_family_with_implied_base() {
    let fx = Fixtures::new();
    let space = fx.write(
        "abc.json",
        r#"{"points": ["a", "b", "c"], "dist": [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]}"#,
    );
    let family = fx.write(
        "table.json",
        &serde_json::json!({
            "kind": "table",
            "t_knots": [-1.0, 0.0, 1.0],
            "values": [[1.2, 1.0, 1.3], [0.9, 0.8, 0.9], [1.0, 0.5, 1.5]],
        })
        .to_string(),
    );
    let out = run(&[
        "bj-extension",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
    ]);
    let report = parse_report(&out);
    assert_eq!(report["bj_extension"], Value::Bool(true));
    assert_eq!(report["m_f"][0], "a");
    assert_eq!(report["bs_witness"], "a");
    // the window is clamped to the knot span
    assert!((report["config"]["t_window"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn p_norm_operator_pair_is_flagged_as_approximate() {
    let fx = Fixtures::new();
    let pair = fx.write(
        "pair1.json",
        r#"{"A": [[2.0, 0.0], [0.0, 1.0]], "B": [[0.0, 1.0], [0.0, 0.0]], "norm": "p:1"}"#,
    );
    let out = run(&["op-ortho", "--matrices", arg(&pair), "--count", "64"]);
    let report = parse_report(&out);
    assert_eq!(report["orthogonal"], Value::Bool(true));
    assert_eq!(report["approximation"], Value::Bool(true));
    assert_eq!(report["witness_vector"], Value::Null);
    assert_eq!(report["norm"], "p:1");
}

#[test]
fn unknown_family_kind_is_rejected() {
    let fx = Fixtures::new();
    let space = fx.write(
        "s2.json",
        r#"{"points_1d": [0.0, 1.0], "metric": "absolute"}"#,
    );
    let family = fx.write("odd.json", r#"{"kind": "wavelet", "scale": 1.0}"#);
    let out = run(&[
        "bj-extension",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown variant"));
}

#[test]
fn results_do_not_depend_on_the_thread_cap() {
    let fx = Fixtures::new();
    let (space, family) = fx.interval_with_shifted_abs();
    let args = [
        "bj-extension",
        "--space",
        arg(&space),
        "--family",
        arg(&family),
    ];
    let mut reports = Vec::new();
    for threads in ["1", "4"] {
        let out = bin()
            .args(args)
            .env("BJ_ORTHO_THREADS", threads)
            .output()
            .unwrap();
        let mut report = parse_report(&out);
        report.as_object_mut().unwrap().remove("config");
        reports.push(report);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn thread_cap_env_var_is_validated() {
    let fx = Fixtures::new();
    let good = fx.write(
        "good.json",
        r#"{"points_1d": [0.0, 1.0], "metric": "absolute"}"#,
    );
    let out = bin()
        .args(["validate-space", "--space", arg(&good)])
        .env("BJ_ORTHO_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let out = bin()
        .args(["validate-space", "--space", arg(&good)])
        .env("BJ_ORTHO_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
