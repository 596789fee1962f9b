//! CSV and JSON writers. Floats are written so that they round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use doublewell::evolution::Trajectory;
use doublewell::stochastic::EnsembleResult;
use serde::Serialize;

use crate::config::{LoadedConfig, RunConfig};
use crate::CliError;

pub const TRAJECTORY_HEADER: &str = "t,J,trace_dev,min_eig,leakage";
pub const ENSEMBLE_HEADER: &str = "t,J,J_stderr,trace_dev,min_eig,leakage";

#[derive(Debug, Clone, Serialize)]
pub struct BuildInfo {
    pub package: &'static str,
    pub version: &'static str,
    pub build_id: &'static str,
}

pub const BUILD: BuildInfo = BuildInfo {
    package: env!("CARGO_PKG_NAME"),
    version: env!("CARGO_PKG_VERSION"),
    build_id: env!("DOUBLEWELL_BUILD_ID"),
};

/// Envelope shared by every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub build: BuildInfo,
    pub config: &'a RunConfig,
    pub config_text: &'a str,
    pub result: &'a T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, loaded: &'a LoadedConfig, result: &'a T) -> Self {
        Self {
            command,
            build: BUILD,
            config: &loaded.config,
            config_text: &loaded.text,
            result,
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for ((t, j), d) in traj.times.iter().zip(traj.current()).zip(&traj.diagnostics) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(j),
            fmt_f64(d.trace_dev),
            fmt_f64(d.min_eig),
            fmt_f64(d.leakage)
        );
    }
    out
}

pub fn ensemble_csv(ensemble: &EnsembleResult) -> String {
    let traj = &ensemble.trajectory;
    let mut out = String::from(ENSEMBLE_HEADER);
    out.push('\n');
    for (((t, j), se), d) in traj
        .times
        .iter()
        .zip(ensemble.j_mean())
        .zip(&ensemble.j_stderr)
        .zip(&traj.diagnostics)
    {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(j),
            fmt_f64(*se),
            fmt_f64(d.trace_dev),
            fmt_f64(d.min_eig),
            fmt_f64(d.leakage)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.0357102751e-3, 1e-300, 0.0, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }
}
