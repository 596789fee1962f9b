//! The computations behind each subcommand.

use doublewell::analytics::{
    slope_singular, slope_weak_exact, slope_weak_large_n, SlopeReport,
};
use doublewell::environment::{
    equal_coupling_model, random_psd_strengths, CorrelationKind, CorrelationModel,
};
use doublewell::evolution::{current_slope, evolve, Trajectory};
use doublewell::generator::LindbladGenerator;
use doublewell::model::{closed_current_derivative, ModelParams};
use doublewell::stochastic::{lindblad_reference, run_ensemble, EnsembleResult};
use doublewell::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{EnvironmentKind, RunConfig};
use crate::CliError;

pub const SLOPE_REL_TOL: f64 = 1e-10;
pub const NULL_ABS_TOL: f64 = 1e-12;
pub const INVARIANCE_TOL: f64 = 1e-12;
pub const RANDOM_WEAK_DRAWS: usize = 10;
pub const RANDOM_PARAM_DRAWS: usize = 5;
/// Ensemble means must lie within this many standard errors of the
/// Lindblad reference.
pub const ENSEMBLE_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Limit {
    Weak,
    Singular,
}

impl Limit {
    pub fn from_kind(kind: EnvironmentKind) -> Self {
        match kind {
            EnvironmentKind::Exponential => Limit::Weak,
            EnvironmentKind::Delta => Limit::Singular,
        }
    }
}

pub fn build_generator(cfg: &RunConfig, limit: Limit) -> Result<LindbladGenerator, CliError> {
    let basis = cfg.basis()?;
    let p = cfg.params()?;
    Ok(match limit {
        Limit::Weak => LindbladGenerator::weak_coupling_auto(
            &basis,
            &p,
            &cfg.exponential_model()?,
            cfg.environment.lamb_shift,
        )?,
        Limit::Singular => LindbladGenerator::singular_coupling(&basis, &p, &cfg.delta_model()?)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeOutcome {
    pub limit: Limit,
    pub filling: usize,
    pub symmetric_trap: bool,
    pub report: SlopeReport,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub pass: bool,
}

pub fn slope(cfg: &RunConfig, limit: Limit) -> Result<SlopeOutcome, CliError> {
    let p = cfg.params()?;
    let n = cfg.initial.filling;
    let gen = build_generator(cfg, limit)?;
    let numeric = current_slope(&gen, &cfg.initial_state()?)?;
    let report = match limit {
        Limit::Weak if p.is_symmetric() => {
            let model = cfg.exponential_model()?;
            SlopeReport::new(numeric, slope_weak_exact(n, &p, &model)?)
                .with_large_n(slope_weak_large_n(&p, &model)?)
        }
        // Diagonal Kossakowski blocks cannot drive a current.
        Limit::Weak => SlopeReport::new(numeric, 0.0),
        Limit::Singular => SlopeReport::new(numeric, slope_singular(n, p.lambda, &cfg.strengths()?)),
    };
    Ok(SlopeOutcome {
        limit,
        filling: n,
        symmetric_trap: p.is_symmetric(),
        pass: report.passes(SLOPE_REL_TOL, NULL_ABS_TOL),
        report,
        rel_tol: SLOPE_REL_TOL,
        abs_tol: NULL_ABS_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub limit: Limit,
    pub method: doublewell::evolution::Method,
    pub points: usize,
    pub t_max: f64,
    pub numeric_slope: f64,
    pub max_trace_dev: f64,
    pub min_eigenvalue: f64,
    pub max_leakage: f64,
    pub max_hermiticity: f64,
    pub flagged_times: Vec<f64>,
}

pub fn evolve_run(cfg: &RunConfig, limit: Limit) -> Result<(Trajectory, EvolveSummary), CliError> {
    let gen = build_generator(cfg, limit)?;
    let rho0 = cfg.initial_state()?;
    let grid = cfg.grid()?;
    let traj = evolve(&gen, &rho0, &grid, cfg.time.method)?;
    let summary = EvolveSummary {
        limit,
        method: cfg.time.method,
        points: grid.len(),
        t_max: cfg.time.t_max,
        numeric_slope: current_slope(&gen, &rho0)?,
        max_trace_dev: traj.max_trace_dev(),
        min_eigenvalue: traj.min_eigenvalue(),
        max_leakage: traj.max_leakage(),
        max_hermiticity: traj.diagnostics.iter().map(|d| d.hermiticity).fold(0.0, f64::max),
        flagged_times: traj
            .times
            .iter()
            .zip(&traj.diagnostics)
            .filter(|(_, d)| d.flagged)
            .map(|(t, _)| *t)
            .collect(),
    };
    Ok((traj, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct DtCheckSummary {
    pub mean_dt: f64,
    pub mean_half_dt: f64,
    pub stderr: f64,
    pub tolerance_in_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnravelSummary {
    pub seed: u64,
    pub trajectories: usize,
    pub dt: f64,
    pub channels: [bool; 4],
    pub max_norm_dev: f64,
    pub dt_check: Option<DtCheckSummary>,
    /// Largest `|mean - reference| / stderr` over times with nonzero error.
    pub max_abs_z: f64,
    pub within_sigmas: f64,
    pub pass: bool,
}

pub struct UnravelOutcome {
    pub ensemble: EnsembleResult,
    pub reference: Trajectory,
    pub summary: UnravelSummary,
}

pub fn unravel(cfg: &RunConfig) -> Result<UnravelOutcome, CliError> {
    let basis = cfg.basis()?;
    let p = cfg.params()?;
    let noise = cfg.noise_config()?;
    let rho0 = cfg.initial_state()?;
    let grid = cfg.grid()?;
    let ensemble = run_ensemble(&basis, &p, &noise, &rho0, &grid)?;
    let reference = lindblad_reference(&basis, &p, &noise, &rho0, &grid, cfg.time.method)?;
    let (max_abs_z, pass) = ensemble_agreement(&ensemble, &reference, ENSEMBLE_SIGMAS);
    let summary = UnravelSummary {
        seed: noise.seed,
        trajectories: noise.trajectories,
        dt: noise.dt,
        channels: noise.channels,
        max_norm_dev: ensemble.max_norm_dev,
        dt_check: ensemble.dt_check.map(|c| DtCheckSummary {
            mean_dt: c.coarse,
            mean_half_dt: c.fine,
            stderr: c.stderr,
            tolerance_in_stderr: c.tolerance,
        }),
        max_abs_z,
        within_sigmas: ENSEMBLE_SIGMAS,
        pass,
    };
    Ok(UnravelOutcome {
        ensemble,
        reference,
        summary,
    })
}

/// Largest z-score of the ensemble mean against the reference and whether
/// every point lies within `sigmas` standard errors.
pub fn ensemble_agreement(ensemble: &EnsembleResult, reference: &Trajectory, sigmas: f64) -> (f64, bool) {
    let mut max_z: f64 = 0.0;
    let mut pass = true;
    for ((m, r), se) in ensemble.j_mean().iter().zip(reference.current()).zip(&ensemble.j_stderr) {
        let dev = (m - r).abs();
        if *se > 0.0 {
            max_z = max_z.max(dev / se);
        }
        pass &= dev <= sigmas * se + 1e-14;
    }
    (max_z, pass)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakIdentity {
    pub canonical: SlopeReport,
    pub random_draws: usize,
    pub random_max_rel_dev: f64,
    pub rel_tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularIdentity {
    pub canonical: SlopeReport,
    pub parameter_draws: usize,
    pub invariance_max_dev: f64,
    pub rel_tol: f64,
    pub invariance_tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NullResults {
    pub equal_coupling_weak: f64,
    pub equal_coupling_singular: f64,
    pub asymmetric_weak: f64,
    pub closed_system: f64,
    pub closed_system_asymmetric: f64,
    pub abs_tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub weak_slope_identity: WeakIdentity,
    pub singular_slope_identity: SingularIdentity,
    pub null_results: NullResults,
    pub all_pass: bool,
}

pub fn weak_identity(cfg: &RunConfig) -> Result<WeakIdentity, CliError> {
    let basis = cfg.basis()?;
    let p = cfg.params()?;
    if !p.is_symmetric() {
        return Err(CliError::Validation(
            "the weak-coupling slope identity needs eps1 == eps2".into(),
        ));
    }
    let n = cfg.initial.filling;
    let rho0 = cfg.initial_state()?;
    let mu = cfg.mu()?;
    let check = |model: &CorrelationModel| -> Result<SlopeReport, CliError> {
        let gen = LindbladGenerator::weak_coupling(&basis, &p, model, cfg.environment.lamb_shift)?;
        Ok(SlopeReport::new(current_slope(&gen, &rho0)?, slope_weak_exact(n, &p, model)?))
    };
    let model = cfg.exponential_model()?;
    let canonical = check(&model)?.with_large_n(slope_weak_large_n(&p, &model)?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    let mut pass = canonical.passes(SLOPE_REL_TOL, NULL_ABS_TOL);
    for _ in 0..RANDOM_WEAK_DRAWS {
        let model = CorrelationModel::exponential(random_psd_strengths(&mut rng), mu)?;
        let r = check(&model)?;
        worst = worst.max(r.rel_dev);
        pass &= r.passes(SLOPE_REL_TOL, NULL_ABS_TOL);
    }
    Ok(WeakIdentity {
        canonical,
        random_draws: RANDOM_WEAK_DRAWS,
        random_max_rel_dev: worst,
        rel_tol: SLOPE_REL_TOL,
        pass,
    })
}

pub fn singular_identity(cfg: &RunConfig) -> Result<SingularIdentity, CliError> {
    let basis = cfg.basis()?;
    let p = cfg.params()?;
    let n = cfg.initial.filling;
    let rho0 = cfg.initial_state()?;
    let model = cfg.delta_model()?;
    let gen = LindbladGenerator::singular_coupling(&basis, &p, &model)?;
    let numeric = current_slope(&gen, &rho0)?;
    let canonical = SlopeReport::new(numeric, slope_singular(n, p.lambda, model.strengths()));
    // Offset the stream so the draws differ from the weak-coupling ones.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut worst: f64 = 0.0;
    for _ in 0..RANDOM_PARAM_DRAWS {
        let q = ModelParams::new(
            rng.random_range(0.0..0.5),
            rng.random_range(0.5..2.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            p.lambda,
        )?;
        let gen = LindbladGenerator::singular_coupling(&basis, &q, &model)?;
        worst = worst.max((current_slope(&gen, &rho0)? - numeric).abs());
    }
    Ok(SingularIdentity {
        pass: canonical.passes(SLOPE_REL_TOL, NULL_ABS_TOL) && worst <= INVARIANCE_TOL,
        canonical,
        parameter_draws: RANDOM_PARAM_DRAWS,
        invariance_max_dev: worst,
        rel_tol: SLOPE_REL_TOL,
        invariance_tol: INVARIANCE_TOL,
    })
}

pub fn null_results(cfg: &RunConfig) -> Result<NullResults, CliError> {
    let basis = cfg.basis()?;
    let p = cfg.params()?;
    let n = cfg.initial.filling;
    let rho0 = cfg.initial_state()?;
    let g = cfg.strengths()?;
    let mu = cfg.mu()?;
    let diag = [g[(0, 0)].re, g[(1, 1)].re];
    let cross: C64 = g[(0, 1)];

    let eq_weak = equal_coupling_model(CorrelationKind::Exponential { mu }, diag, cross)?;
    let symmetric = ModelParams { eps2: p.eps1, ..p };
    let gen = LindbladGenerator::weak_coupling(&basis, &symmetric, &eq_weak, cfg.environment.lamb_shift)?;
    let equal_coupling_weak = current_slope(&gen, &rho0)?;

    let eq_delta = CorrelationModel::delta_hermitian(*eq_weak.strengths())?;
    let gen = LindbladGenerator::singular_coupling(&basis, &p, &eq_delta)?;
    let equal_coupling_singular = current_slope(&gen, &rho0)?;

    let asym = if p.is_symmetric() { ModelParams { eps2: p.eps1 + 0.3, ..p } } else { p };
    let gen = LindbladGenerator::weak_coupling_asymmetric(
        &basis,
        &asym,
        &cfg.exponential_model()?,
        cfg.environment.lamb_shift,
    )?;
    let asymmetric_weak = current_slope(&gen, &rho0)?;

    let closed_system = closed_current_derivative(&basis, &symmetric, n)?;
    let closed_system_asymmetric = closed_current_derivative(&basis, &asym, n)?;
    let values = [
        equal_coupling_weak,
        equal_coupling_singular,
        asymmetric_weak,
        closed_system,
        closed_system_asymmetric,
    ];
    Ok(NullResults {
        equal_coupling_weak,
        equal_coupling_singular,
        asymmetric_weak,
        closed_system,
        closed_system_asymmetric,
        abs_tol: NULL_ABS_TOL,
        pass: values.iter().all(|v| v.abs() < NULL_ABS_TOL),
    })
}

pub fn compare(cfg: &RunConfig) -> Result<CompareSummary, CliError> {
    let weak = weak_identity(cfg)?;
    let singular = singular_identity(cfg)?;
    let nulls = null_results(cfg)?;
    Ok(CompareSummary {
        all_pass: weak.pass && singular.pass && nulls.pass,
        weak_slope_identity: weak,
        singular_slope_identity: singular,
        null_results: nulls,
    })
}
