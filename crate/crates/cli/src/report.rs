//! Deterministic report serialization: floats are printed with 17
//! significant digits so identical runs produce byte-identical output.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::Formatter;

use bjortho::extension::Envelope;

use crate::CliError;

/// Compact JSON with every f64 rendered as `d.dddddddddddddddde<exp>`
/// (one digit before the point, sixteen after: 17 significant digits).
struct SigFigFormatter;

impl Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn render_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes the report to the output path, or stdout when none is given.
pub fn write_report<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), CliError> {
    let buf = render_json(value)?;
    match output {
        Some(path) => std::fs::write(path, &buf)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(&buf)
            .map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}

/// Envelope dump: `t,g,argmax_index` per grid point, floats at 17
/// significant digits.
pub fn write_envelope_csv(env: &Envelope, path: &Path) -> Result<(), CliError> {
    let mut text = String::from("t,g,argmax_index\n");
    for k in 0..env.len() {
        text.push_str(&format!(
            "{:.16e},{:.16e},{}\n",
            env.t_grid()[k],
            env.values()[k],
            env.argmax()[k]
        ));
    }
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// The fully resolved configuration echoed in every report. Fields that
/// do not apply to a command stay `null`.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    pub command: String,
    pub space: Option<String>,
    pub family: Option<String>,
    pub f: Option<String>,
    pub g: Option<String>,
    pub matrices: Option<String>,
    pub x0: Option<String>,
    pub y0: Option<String>,
    pub eps: Option<f64>,
    pub side: Option<String>,
    pub terms: Option<usize>,
    pub count: Option<usize>,
    pub tol_metric: f64,
    pub tol_deriv: f64,
    pub tol_convex: f64,
    pub tol_verdict: Option<f64>,
    pub t_window: Option<f64>,
    pub grid_size: usize,
    pub seed: u64,
    pub connectivity_eps: Option<f64>,
    pub dump_envelope: Option<String>,
    pub output: Option<String>,
    pub threads: usize,
}

impl EffectiveConfig {
    pub fn new(command: &str, threads: usize) -> Self {
        EffectiveConfig {
            command: command.to_string(),
            space: None,
            family: None,
            f: None,
            g: None,
            matrices: None,
            x0: None,
            y0: None,
            eps: None,
            side: None,
            terms: None,
            count: None,
            tol_metric: bjortho::tol::TOL_METRIC,
            tol_deriv: bjortho::tol::TOL_DERIV,
            tol_convex: bjortho::tol::TOL_CONVEX,
            tol_verdict: None,
            t_window: None,
            grid_size: bjortho::extension::DEFAULT_T_GRID_LEN,
            seed: 0,
            connectivity_eps: None,
            dump_envelope: None,
            output: None,
            threads,
        }
    }
}

pub fn path_string(p: &Path) -> String {
    p.display().to_string()
}

pub fn opt_path_string(p: Option<&PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}
