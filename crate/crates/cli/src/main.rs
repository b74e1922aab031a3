//! `bj-ortho`: load spaces, fields, section families and matrix pairs,
//! run the orthogonality and extension checks, and emit deterministic
//! JSON reports (plus optional CSV envelope dumps).
//!
//! Exit codes: 0 = verdict computed (negative verdicts included),
//! 1 = input or validation error, 2 = internal numerical failure.
//! `BJ_ORTHO_THREADS` caps internal parallelism (0 or unset = auto).

mod report;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bjortho::cx_ortho::{self, OrthoError};
use bjortho::extension::{
    bhatia_semrl_witness, build_extension_with, default_t_half_width, envelope,
    extract_maximizing_sequence, is_bj_extension_bruteforce, is_bj_extension_criterion,
    symmetric_grid, BuildOptions, ConvexExtension, Envelope, ExtensionError, Family, Side,
};
use bjortho::io as bio;
use bjortho::norms::NormTag;
use bjortho::operators::{
    bhatia_semrl_euclidean, bj_operator_oracle_sampled, sample_sphere, spectral_norm, OperatorError,
};
use bjortho::space::{
    density_perturbation, epsilon_connected, quick_validate, sup_attaining_set,
    validate_space_with, DiscreteMetricSpace, ScalarField,
};
use bjortho::tol::{sup_set_tol, POWER_ITER_REL_TOL, TOL_CONVEX, TOL_DERIV, TOL_METRIC};

use report::{opt_path_string, path_string, write_envelope_csv, write_report, EffectiveConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad inputs or failed validation: exit code 1.
    Input(String),
    /// Numerical breakdown inside a computation: exit code 2.
    Numerical(String),
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn classify_extension(e: ExtensionError) -> CliError {
    match e {
        ExtensionError::Convex(_)
        | ExtensionError::AllCandidatesRejected { .. }
        | ExtensionError::ConvergenceFailed { .. } => CliError::Numerical(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

fn classify_ortho(e: OrthoError) -> CliError {
    match e {
        OrthoError::Convex(_) | OrthoError::BracketExpansion { .. } => {
            CliError::Numerical(e.to_string())
        }
        OrthoError::Extension(inner) => classify_extension(inner),
        _ => CliError::Input(e.to_string()),
    }
}

fn classify_operator(e: OperatorError) -> CliError {
    match e {
        OperatorError::PowerIterationBreakdown { .. } => CliError::Numerical(e.to_string()),
        OperatorError::Extension(inner) => classify_extension(inner),
        _ => CliError::Input(e.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "bj-ortho",
    version,
    about = "Birkhoff-James orthogonality and convex-extension checks on finite metric spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the metric axioms of a space file (full O(n^3) sweep).
    ValidateSpace(ValidateSpaceArgs),
    /// Decide whether a section family keeps its envelope minimized at
    /// t = 0 (brute force + derivative criterion + single witness).
    BjExtension(ExtensionArgs),
    /// Search the sup-attaining set for a single witness point.
    BsWitness(ExtensionArgs),
    /// Decide sup-norm orthogonality of two fields (sign test, oracle
    /// and section criterion).
    CxOrtho(CxOrthoArgs),
    /// Decide operator orthogonality of a matrix pair on a sampled
    /// unit sphere.
    OpOrtho(OpOrthoArgs),
    /// Apply the sup-preserving perturbation that isolates one
    /// maximizer.
    DensityPerturb(DensityPerturbArgs),
    /// Extract a maximizing sequence along one side of t = 0.
    MaximizingSeq(MaximizingSeqArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Metric-axiom slack.
    #[arg(long, default_value_t = TOL_METRIC)]
    tol_metric: f64,
    /// Derivative-quotient convergence tolerance.
    #[arg(long, default_value_t = TOL_DERIV)]
    tol_deriv: f64,
    /// Convexity slack for build-time validation.
    #[arg(long, default_value_t = TOL_CONVEX)]
    tol_convex: f64,
    /// Verdict tolerance; default couples to the input scale.
    #[arg(long)]
    tol_verdict: Option<f64>,
    /// Section window half-width T; default 2 * (1 + spread of base).
    #[arg(long)]
    t_window: Option<f64>,
    /// Envelope grid size (odd, so 0 is a grid point).
    #[arg(long, default_value_t = bjortho::extension::DEFAULT_T_GRID_LEN)]
    grid_size: usize,
    /// Seed for randomized components.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dump the sampled envelope as CSV (t, g, argmax_index).
    #[arg(long)]
    dump_envelope: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateSpaceArgs {
    /// Space JSON file.
    #[arg(long)]
    space: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ExtensionArgs {
    /// Space JSON file.
    #[arg(long)]
    space: PathBuf,
    /// Family JSON file.
    #[arg(long)]
    family: PathBuf,
    /// Base field CSV; omit when the family implies it.
    #[arg(long)]
    f: Option<PathBuf>,
    /// Edge length for the sup-set connectivity check; default 1.5x
    /// the smallest positive distance.
    #[arg(long)]
    eps: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CxOrthoArgs {
    /// Space JSON file.
    #[arg(long)]
    space: PathBuf,
    /// Field f, one CSV value per point.
    #[arg(long)]
    f: PathBuf,
    /// Field g, one CSV value per point.
    #[arg(long)]
    g: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OpOrthoArgs {
    /// Matrix pair JSON ({"A": ..., "B": ..., "norm": ...}).
    #[arg(long)]
    matrices: PathBuf,
    /// Sphere sample size; default 500 per dimension.
    #[arg(long)]
    count: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DensityPerturbArgs {
    /// Space JSON file.
    #[arg(long)]
    space: PathBuf,
    /// Field CSV.
    #[arg(long)]
    f: PathBuf,
    /// Label of the maximizer to isolate.
    #[arg(long)]
    x0: String,
    /// Label of the reference point (distinct from x0).
    #[arg(long)]
    y0: String,
    /// Perturbation size.
    #[arg(long)]
    eps: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliSide {
    Plus,
    Minus,
}

#[derive(Args)]
struct MaximizingSeqArgs {
    /// Space JSON file.
    #[arg(long)]
    space: PathBuf,
    /// Family JSON file.
    #[arg(long)]
    family: PathBuf,
    /// Base field CSV; omit when the family implies it.
    #[arg(long)]
    f: Option<PathBuf>,
    /// Side of 0 to approach from.
    #[arg(long, value_enum)]
    side: CliSide,
    /// Number of sequence terms.
    #[arg(long, default_value_t = 8)]
    terms: usize,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> std::process::ExitCode {
    match run() {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            std::process::ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            std::process::ExitCode::from(2)
        }
    }
}

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            e.print().ok();
            return Ok(());
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };

    let threads = configure_threads()?;
    match cli.command {
        Command::ValidateSpace(args) => cmd_validate_space(args, threads),
        Command::BjExtension(args) => cmd_bj_extension(args, threads, true),
        Command::BsWitness(args) => cmd_bj_extension(args, threads, false),
        Command::CxOrtho(args) => cmd_cx_ortho(args, threads),
        Command::OpOrtho(args) => cmd_op_ortho(args, threads),
        Command::DensityPerturb(args) => cmd_density_perturb(args, threads),
        Command::MaximizingSeq(args) => cmd_maximizing_seq(args, threads),
    }
}

fn configure_threads() -> Result<usize, CliError> {
    let threads = match std::env::var("BJ_ORTHO_THREADS") {
        Ok(raw) => raw.parse::<usize>().map_err(|_| {
            CliError::Input(format!("BJ_ORTHO_THREADS must be an integer, got `{raw}`"))
        })?,
        Err(_) => 0,
    };
    if threads > 0 {
        // ignore AlreadyInitialized: tests may run several commands in
        // one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(threads)
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Input(format!(
            "{}: file does not exist",
            path.display()
        )));
    }
    Ok(())
}

fn validate_common(common: &CommonArgs) -> Result<(), CliError> {
    for (name, v) in [
        ("--tol-metric", common.tol_metric),
        ("--tol-deriv", common.tol_deriv),
        ("--tol-convex", common.tol_convex),
    ] {
        if !(v > 0.0) {
            return Err(CliError::Input(format!("{name} must be positive, got {v}")));
        }
    }
    if let Some(v) = common.tol_verdict {
        if !(v > 0.0) {
            return Err(CliError::Input(format!(
                "--tol-verdict must be positive, got {v}"
            )));
        }
    }
    if let Some(t) = common.t_window {
        if !(t > 0.0) {
            return Err(CliError::Input(format!(
                "--t-window must be positive, got {t}"
            )));
        }
    }
    if common.grid_size < 3 || common.grid_size % 2 == 0 {
        return Err(CliError::Input(format!(
            "--grid-size must be odd and at least 3, got {}",
            common.grid_size
        )));
    }
    Ok(())
}

fn fill_common(config: &mut EffectiveConfig, common: &CommonArgs) {
    config.tol_metric = common.tol_metric;
    config.tol_deriv = common.tol_deriv;
    config.tol_convex = common.tol_convex;
    config.grid_size = common.grid_size;
    config.seed = common.seed;
    config.dump_envelope = opt_path_string(common.dump_envelope.as_ref());
    config.output = opt_path_string(common.output.as_ref());
}

/// Loads a space and rejects it unless the O(n^2) axioms hold; the full
/// triangle sweep is reserved for `validate-space`.
fn load_checked_space(path: &Path, tol_metric: f64) -> Result<Arc<DiscreteMetricSpace>, CliError> {
    require_file(path)?;
    let space = bio::load_space(path).map_err(input_err)?;
    let violations = quick_validate(&space, tol_metric);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{}: {v}", path.display());
        }
        return Err(CliError::Input(format!(
            "{}: {} metric violations",
            path.display(),
            violations.len()
        )));
    }
    Ok(space)
}

fn cmd_validate_space(args: ValidateSpaceArgs, threads: usize) -> Result<(), CliError> {
    validate_common(&args.common)?;
    require_file(&args.space)?;
    let space = bio::load_space(&args.space).map_err(input_err)?;
    let violations = validate_space_with(&space, args.common.tol_metric);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{}: {v}", args.space.display());
        }
        return Err(CliError::Input(format!(
            "{}: {} metric violations",
            args.space.display(),
            violations.len()
        )));
    }

    let mut config = EffectiveConfig::new("validate-space", threads);
    fill_common(&mut config, &args.common);
    config.space = Some(path_string(&args.space));

    #[derive(Serialize)]
    struct Report {
        valid: bool,
        points: usize,
        violations: Vec<String>,
        config: EffectiveConfig,
    }
    write_report(
        &Report {
            valid: true,
            points: space.len(),
            violations: Vec::new(),
            config,
        },
        args.common.output.as_deref(),
    )
}

struct LoadedExtension {
    space: Arc<DiscreteMetricSpace>,
    ext: ConvexExtension,
    grid: Vec<f64>,
}

fn load_extension(
    space_path: &Path,
    family_path: &Path,
    field_path: Option<&Path>,
    common: &CommonArgs,
) -> Result<LoadedExtension, CliError> {
    let space = load_checked_space(space_path, common.tol_metric)?;
    require_file(family_path)?;
    let family = bio::load_family(family_path).map_err(input_err)?;
    let base = match field_path {
        Some(p) => {
            require_file(p)?;
            bio::load_field(p, &space).map_err(input_err)?
        }
        None => {
            let values = family.implied_base().ok_or_else(|| {
                CliError::Input(
                    "this family kind does not determine the base field; pass --f".into(),
                )
            })?;
            ScalarField::new(space.clone(), values).map_err(input_err)?
        }
    };
    let opts = BuildOptions {
        t_half_width: common.t_window,
        deriv_tol: Some(common.tol_deriv),
        convexity_tol: Some(common.tol_convex),
        ..BuildOptions::default()
    };
    let ext = build_extension_with(&space, &base, family, &opts).map_err(classify_extension)?;
    let grid = symmetric_grid(ext.t_half_width(), common.grid_size);
    Ok(LoadedExtension { space, ext, grid })
}

fn dump_envelope_if_asked(env: &Envelope, common: &CommonArgs) -> Result<(), CliError> {
    if let Some(path) = &common.dump_envelope {
        write_envelope_csv(env, path)?;
    }
    Ok(())
}

fn cmd_bj_extension(args: ExtensionArgs, threads: usize, full: bool) -> Result<(), CliError> {
    validate_common(&args.common)?;
    if let Some(e) = args.eps {
        if !(e > 0.0) {
            return Err(CliError::Input(format!("--eps must be positive, got {e}")));
        }
    }
    let loaded = load_extension(&args.space, &args.family, args.f.as_deref(), &args.common)?;
    let LoadedExtension { space, ext, grid } = &loaded;
    let tol = args
        .common
        .tol_verdict
        .unwrap_or_else(|| sup_set_tol(ext.base().sup()));

    let env = envelope(ext, grid);
    dump_envelope_if_asked(&env, &args.common)?;

    let bs_witness = bhatia_semrl_witness(ext, grid, tol).map_err(classify_extension)?;
    let m_f = ext.sup_set();
    let eps = args
        .eps
        .or_else(|| space.min_positive_distance().map(|p| 1.5 * p));
    let m_f_connected = match eps {
        Some(e) if e > 0.0 => Some(epsilon_connected(space, &m_f.indices, e).map_err(input_err)?),
        _ => None,
    };

    let mut config =
        EffectiveConfig::new(if full { "bj-extension" } else { "bs-witness" }, threads);
    fill_common(&mut config, &args.common);
    config.space = Some(path_string(&args.space));
    config.family = Some(path_string(&args.family));
    config.f = opt_path_string(args.f.as_ref());
    config.tol_verdict = Some(tol);
    config.t_window = Some(ext.t_half_width());
    config.connectivity_eps = eps;

    let label = |i: usize| space.label(i).to_string();
    let m_f_labels: Vec<String> = m_f.indices.iter().map(|&i| label(i)).collect();

    if !full {
        #[derive(Serialize)]
        struct Report {
            bs_witness: Option<String>,
            m_f: Vec<String>,
            m_f_connected: Option<bool>,
            config: EffectiveConfig,
        }
        return write_report(
            &Report {
                bs_witness: bs_witness.map(label),
                m_f: m_f_labels,
                m_f_connected,
                config,
            },
            args.common.output.as_deref(),
        );
    }

    let brute = is_bj_extension_bruteforce(ext, grid, tol).map_err(classify_extension)?;
    let criterion = is_bj_extension_criterion(ext, tol).map_err(classify_extension)?;

    #[derive(Serialize)]
    struct Report {
        bj_extension: bool,
        criterion: bool,
        criterion_witnesses: [Option<String>; 2],
        criterion_derivatives: [Option<f64>; 2],
        bs_witness: Option<String>,
        methods_agree: bool,
        g_at_zero: f64,
        grid_min: f64,
        refined_min: f64,
        grid_resolution_bound: f64,
        m_f: Vec<String>,
        m_f_connected: Option<bool>,
        config: EffectiveConfig,
    }
    write_report(
        &Report {
            bj_extension: brute.verdict,
            criterion: criterion.verdict,
            criterion_witnesses: [
                criterion.right_witness.map(|(i, _)| label(i)),
                criterion.left_witness.map(|(i, _)| label(i)),
            ],
            criterion_derivatives: [
                criterion.right_witness.map(|(_, d)| d),
                criterion.left_witness.map(|(_, d)| d),
            ],
            bs_witness: bs_witness.map(label),
            methods_agree: brute.verdict == criterion.verdict,
            g_at_zero: brute.g_at_zero,
            grid_min: brute.grid_min,
            refined_min: brute.refined_min,
            grid_resolution_bound: brute.grid_resolution_bound,
            m_f: m_f_labels,
            m_f_connected,
            config,
        },
        args.common.output.as_deref(),
    )
}

fn cmd_cx_ortho(args: CxOrthoArgs, threads: usize) -> Result<(), CliError> {
    validate_common(&args.common)?;
    let space = load_checked_space(&args.space, args.common.tol_metric)?;
    require_file(&args.f)?;
    require_file(&args.g)?;
    let f = bio::load_field(&args.f, &space).map_err(input_err)?;
    let g = bio::load_field(&args.g, &space).map_err(input_err)?;
    let tol = args
        .common
        .tol_verdict
        .unwrap_or_else(|| bjortho::tol::sign_test_tol(f.sup_norm(), g.sup_norm()));

    let opts = BuildOptions {
        t_half_width: args.common.t_window,
        deriv_tol: Some(args.common.tol_deriv),
        convexity_tol: Some(args.common.tol_convex),
        ..BuildOptions::default()
    };
    let verdict = cx_ortho::decide_with(&f, &g, tol, &opts).map_err(classify_ortho)?;

    let t_window = args
        .common
        .t_window
        .unwrap_or_else(|| default_t_half_width(&f.abs()));
    if args.common.dump_envelope.is_some() {
        let family = Family::AbsAffine {
            offsets: f.values().to_vec(),
            slopes: g.values().to_vec(),
        };
        let ext =
            build_extension_with(&space, &f.abs(), family, &opts).map_err(classify_extension)?;
        let grid = symmetric_grid(ext.t_half_width(), args.common.grid_size);
        dump_envelope_if_asked(&envelope(&ext, &grid), &args.common)?;
    }

    let mut config = EffectiveConfig::new("cx-ortho", threads);
    fill_common(&mut config, &args.common);
    config.space = Some(path_string(&args.space));
    config.f = Some(path_string(&args.f));
    config.g = Some(path_string(&args.g));
    config.tol_verdict = Some(tol);
    config.t_window = Some(t_window);

    #[derive(Serialize)]
    struct Report {
        orthogonal: bool,
        pos_witness: Option<String>,
        neg_witness: Option<String>,
        oracle_min: f64,
        oracle_argmin: f64,
        methods_agree: bool,
        criterion_agrees: bool,
        config: EffectiveConfig,
    }
    write_report(
        &Report {
            orthogonal: verdict.orthogonal,
            pos_witness: verdict.pos_witness.map(|i| space.label(i).to_string()),
            neg_witness: verdict.neg_witness.map(|i| space.label(i).to_string()),
            oracle_min: verdict.oracle_min,
            oracle_argmin: verdict.oracle_argmin,
            methods_agree: verdict.methods_agree,
            criterion_agrees: verdict.criterion_agrees,
            config,
        },
        args.common.output.as_deref(),
    )
}

fn cmd_op_ortho(args: OpOrthoArgs, threads: usize) -> Result<(), CliError> {
    validate_common(&args.common)?;
    require_file(&args.matrices)?;
    let pair = bio::load_matrix_pair(&args.matrices).map_err(input_err)?;
    let dim = pair.dim();
    let count = args
        .count
        .unwrap_or_else(|| bjortho::operators::default_sample_count(dim));
    let tol = args.common.tol_verdict.unwrap_or(1e-6);

    if pair.a.norm() == 0.0 {
        return Err(CliError::Input(
            "matrix A is zero; orthogonality is undefined".into(),
        ));
    }
    let sample =
        sample_sphere(dim, pair.norm, count, args.common.seed).map_err(classify_operator)?;

    // the sampled extension backs the criterion, the optional envelope
    // dump and the echoed window
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
    let space = sample.as_space().clone();
    let base = ScalarField::new(space.clone(), base_values).map_err(input_err)?;
    let family = Family::NormFamily {
        a_vectors,
        b_vectors,
        norm: pair.norm,
    };
    let opts = BuildOptions {
        t_half_width: args.common.t_window,
        deriv_tol: Some(args.common.tol_deriv),
        convexity_tol: Some(args.common.tol_convex),
        ..BuildOptions::default()
    };
    let ext = build_extension_with(&space, &base, family, &opts).map_err(classify_extension)?;
    let criterion = is_bj_extension_criterion(&ext, tol).map_err(classify_extension)?;

    let tol_t = 1e-9 * (1.0 + pair.a.norm() / pair.b.norm().max(1e-12));
    let (oracle_min, oracle_argmin) =
        bj_operator_oracle_sampled(&pair, &sample, tol_t).map_err(classify_operator)?;

    let norm_a = match pair.norm {
        NormTag::Euclidean => {
            spectral_norm(&pair.a, POWER_ITER_REL_TOL).map_err(classify_operator)?
        }
        _ => base.sup_norm(),
    };
    let oracle_orthogonal = oracle_min >= norm_a - tol.max(1e-8);

    let witness_vector = match pair.norm {
        NormTag::Euclidean => bhatia_semrl_euclidean(&pair, 1e-7)
            .map_err(classify_operator)?
            .map(|x| x.as_slice().to_vec()),
        _ => None,
    };

    if args.common.dump_envelope.is_some() {
        let grid = symmetric_grid(ext.t_half_width(), args.common.grid_size);
        dump_envelope_if_asked(&envelope(&ext, &grid), &args.common)?;
    }

    let mut config = EffectiveConfig::new("op-ortho", threads);
    fill_common(&mut config, &args.common);
    config.matrices = Some(path_string(&args.matrices));
    config.count = Some(count);
    config.tol_verdict = Some(tol);
    config.t_window = Some(ext.t_half_width());

    let sample_space = sample.as_space();
    #[derive(Serialize)]
    struct Report {
        orthogonal: bool,
        pos_witness: Option<String>,
        neg_witness: Option<String>,
        oracle_min: f64,
        oracle_argmin: f64,
        methods_agree: bool,
        witness_vector: Option<Vec<f64>>,
        approximation: bool,
        norm: String,
        config: EffectiveConfig,
    }
    write_report(
        &Report {
            orthogonal: criterion.verdict,
            pos_witness: criterion
                .right_witness
                .map(|(i, _)| sample_space.label(i).to_string()),
            neg_witness: criterion
                .left_witness
                .map(|(i, _)| sample_space.label(i).to_string()),
            oracle_min,
            oracle_argmin,
            methods_agree: criterion.verdict == oracle_orthogonal,
            witness_vector,
            approximation: pair.norm != NormTag::Euclidean,
            norm: pair.norm.to_string(),
            config,
        },
        args.common.output.as_deref(),
    )
}

fn cmd_density_perturb(args: DensityPerturbArgs, threads: usize) -> Result<(), CliError> {
    validate_common(&args.common)?;
    let space = load_checked_space(&args.space, args.common.tol_metric)?;
    require_file(&args.f)?;
    let f = bio::load_field(&args.f, &space).map_err(input_err)?;
    let x0 = space.index_of(&args.x0).map_err(input_err)?;
    let y0 = space.index_of(&args.y0).map_err(input_err)?;
    if args.eps < 0.0 {
        return Err(CliError::Input(format!(
            "--eps must be non-negative, got {}",
            args.eps
        )));
    }

    let perturbed = density_perturbation(&f, x0, y0, args.eps).map_err(input_err)?;
    let sup_set = sup_attaining_set(&perturbed, 0.0);
    let max_deviation = f
        .values()
        .iter()
        .zip(perturbed.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);

    let mut config = EffectiveConfig::new("density-perturb", threads);
    fill_common(&mut config, &args.common);
    config.space = Some(path_string(&args.space));
    config.f = Some(path_string(&args.f));
    config.x0 = Some(args.x0.clone());
    config.y0 = Some(args.y0.clone());
    config.eps = Some(args.eps);

    #[derive(Serialize)]
    struct Report {
        sup: f64,
        sup_set: Vec<String>,
        max_deviation: f64,
        values: Vec<f64>,
        config: EffectiveConfig,
    }
    write_report(
        &Report {
            sup: sup_set.sup_value,
            sup_set: sup_set
                .indices
                .iter()
                .map(|&i| space.label(i).to_string())
                .collect(),
            max_deviation,
            values: perturbed.values().to_vec(),
            config,
        },
        args.common.output.as_deref(),
    )
}

fn cmd_maximizing_seq(args: MaximizingSeqArgs, threads: usize) -> Result<(), CliError> {
    validate_common(&args.common)?;
    if args.terms < 3 {
        return Err(CliError::Input(format!(
            "--terms must be at least 3, got {}",
            args.terms
        )));
    }
    let loaded = load_extension(&args.space, &args.family, args.f.as_deref(), &args.common)?;
    let LoadedExtension { space, ext, grid } = &loaded;
    let tol = args
        .common
        .tol_verdict
        .unwrap_or_else(|| 1e-6 * (1.0 + ext.base().sup_norm()));
    let side = match args.side {
        CliSide::Plus => Side::Plus,
        CliSide::Minus => Side::Minus,
    };

    dump_envelope_if_asked(&envelope(ext, grid), &args.common)?;
    let seq =
        extract_maximizing_sequence(ext, side, args.terms, tol).map_err(classify_extension)?;

    let mut config = EffectiveConfig::new("maximizing-seq", threads);
    fill_common(&mut config, &args.common);
    config.space = Some(path_string(&args.space));
    config.family = Some(path_string(&args.family));
    config.f = opt_path_string(args.f.as_ref());
    config.side = Some(
        match args.side {
            CliSide::Plus => "plus",
            CliSide::Minus => "minus",
        }
        .to_string(),
    );
    config.terms = Some(args.terms);
    config.tol_verdict = Some(tol);
    config.t_window = Some(ext.t_half_width());

    #[derive(Serialize)]
    struct Report {
        side: String,
        indices: Vec<String>,
        t_values: Vec<f64>,
        right_derivs: Vec<f64>,
        left_derivs: Vec<f64>,
        limit_estimate: f64,
        config: EffectiveConfig,
    }
    write_report(
        &Report {
            side: config.side.clone().unwrap(),
            indices: seq
                .indices
                .iter()
                .map(|&i| space.label(i).to_string())
                .collect(),
            t_values: seq.t_values,
            right_derivs: seq.right_derivs,
            left_derivs: seq.left_derivs,
            limit_estimate: seq.limit_estimate,
            config,
        },
        args.common.output.as_deref(),
    )
}
