//! Batch front end for the `doublewell` simulator.
//!
//! Each subcommand reads one TOML run configuration, performs a computation
//! and writes CSV time series and JSON reports into an output directory.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};

use config::{LoadedConfig, Scenario};
use output::{ensemble_csv, trajectory_csv, write_json, write_text, Report};
use scenarios::Limit;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("tolerance not met: {0}")]
    Tolerance(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Tolerance(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<doublewell::Error> for CliError {
    fn from(e: doublewell::Error) -> Self {
        use doublewell::Error as E;
        match e {
            E::InvalidArgument(_)
            | E::DimensionMismatch { .. }
            | E::AsymmetricTrap { .. }
            | E::NotPositive { .. }
            | E::GuardExceeded { .. } => CliError::Validation(e.to_string()),
            E::IntegrationFailure { .. } | E::StepSize { .. } | E::FitFailure(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Slope,
    Evolve,
    Unravel,
    Compare,
    /// Whatever the config's `scenario` names.
    Run,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

pub const DEFAULT_OUT_DIR: &str = "out";

/// Loads the config, applies overrides and runs the command.
pub fn execute(inv: &Invocation) -> Result<(), CliError> {
    let mut loaded = LoadedConfig::read(&inv.config)?;
    if let Some(seed) = inv.seed {
        loaded.config.seed = seed;
    }
    let out = inv
        .out
        .clone()
        .or_else(|| loaded.config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let limit = Limit::from_kind(loaded.config.environment.kind);
    match inv.command {
        Command::Slope => slope(&loaded, limit, &out, inv.quiet),
        Command::Evolve => evolve(&loaded, limit, &out, inv.quiet),
        Command::Unravel => unravel(&loaded, &out, inv.quiet),
        Command::Compare => compare(&loaded, &out, inv.quiet),
        Command::Run => match loaded.config.scenario {
            Scenario::SlopeWeak => slope(&loaded, Limit::Weak, &out, inv.quiet),
            Scenario::SlopeSingular => slope(&loaded, Limit::Singular, &out, inv.quiet),
            Scenario::EvolveWeak => evolve(&loaded, Limit::Weak, &out, inv.quiet),
            Scenario::EvolveSingular => evolve(&loaded, Limit::Singular, &out, inv.quiet),
            Scenario::Unravel => unravel(&loaded, &out, inv.quiet),
            Scenario::CompareAll => compare(&loaded, &out, inv.quiet),
        },
    }
}

fn note(quiet: bool, msg: String) {
    if !quiet {
        println!("{msg}");
    }
}

pub fn slope(loaded: &LoadedConfig, limit: Limit, out: &Path, quiet: bool) -> Result<(), CliError> {
    let outcome = scenarios::slope(&loaded.config, limit)?;
    write_json(&out.join("slope.json"), &Report::new("slope", loaded, &outcome))?;
    let r = &outcome.report;
    note(
        quiet,
        format!(
            "{:?} slope: numeric {:.10e}, analytic {:.10e}, rel dev {:.3e}",
            limit, r.numeric, r.analytic_exact, r.rel_dev
        ),
    );
    if !outcome.pass {
        return Err(CliError::Tolerance(format!(
            "numeric slope {:e} deviates from analytic {:e}",
            r.numeric, r.analytic_exact
        )));
    }
    Ok(())
}

pub fn evolve(loaded: &LoadedConfig, limit: Limit, out: &Path, quiet: bool) -> Result<(), CliError> {
    let (traj, summary) = scenarios::evolve_run(&loaded.config, limit)?;
    write_text(&out.join("trajectory.csv"), &trajectory_csv(&traj))?;
    write_json(&out.join("diagnostics.json"), &Report::new("evolve", loaded, &summary))?;
    note(
        quiet,
        format!(
            "{:?} evolution: {} points, max trace dev {:.2e}, min eig {:.2e}, max leakage {:.2e}",
            limit, summary.points, summary.max_trace_dev, summary.min_eigenvalue, summary.max_leakage
        ),
    );
    if !summary.flagged_times.is_empty() {
        return Err(CliError::Numerical(format!(
            "state diagnostics flagged at t = {:?}",
            summary.flagged_times
        )));
    }
    Ok(())
}

pub fn unravel(loaded: &LoadedConfig, out: &Path, quiet: bool) -> Result<(), CliError> {
    let outcome = scenarios::unravel(&loaded.config)?;
    write_text(&out.join("ensemble.csv"), &ensemble_csv(&outcome.ensemble))?;
    write_text(&out.join("reference.csv"), &trajectory_csv(&outcome.reference))?;
    write_json(&out.join("ensemble.json"), &Report::new("unravel", loaded, &outcome.summary))?;
    let s = &outcome.summary;
    note(
        quiet,
        format!(
            "{} trajectories: max |z| against Lindblad {:.3}, norm dev {:.2e}",
            s.trajectories, s.max_abs_z, s.max_norm_dev
        ),
    );
    if !s.pass {
        return Err(CliError::Tolerance(format!(
            "ensemble mean leaves the {}-sigma band (max |z| = {:.3})",
            s.within_sigmas, s.max_abs_z
        )));
    }
    Ok(())
}

pub fn compare(loaded: &LoadedConfig, out: &Path, quiet: bool) -> Result<(), CliError> {
    let summary = scenarios::compare(&loaded.config)?;
    write_json(&out.join("summary.json"), &Report::new("compare", loaded, &summary))?;
    let w = &summary.weak_slope_identity;
    let s = &summary.singular_slope_identity;
    let n = &summary.null_results;
    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    note(
        quiet,
        format!(
            "weak slope identity: {} (canonical rel dev {:.2e}, worst of {} random {:.2e})\n\
             singular slope identity: {} (rel dev {:.2e}, invariance {:.2e})\n\
             null results: {}",
            verdict(w.pass),
            w.canonical.rel_dev,
            w.random_draws,
            w.random_max_rel_dev,
            verdict(s.pass),
            s.canonical.rel_dev,
            s.invariance_max_dev,
            verdict(n.pass),
        ),
    );
    if !summary.all_pass {
        return Err(CliError::Tolerance("compare suite has failures, see summary.json".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let v: CliError = doublewell::Error::InvalidArgument("x".into()).into();
        assert_eq!(v.exit_code(), 1);
        let n: CliError = doublewell::Error::FitFailure("x".into()).into();
        assert_eq!(n.exit_code(), 3);
        assert_eq!(CliError::Tolerance("x".into()).exit_code(), 2);
    }
}
