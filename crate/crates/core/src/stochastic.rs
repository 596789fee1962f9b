//! Gaussian white-noise unraveling of the singular-coupling dynamics.
//!
//! Each trajectory evolves under the random Hamiltonian
//! `H(t) = H_S + lambda sum_i V_i xi_i(t)` with `<xi_i(t) xi_j(s)> = G_ij delta(t - s)`
//! and `V = (a1 + a1^+, i(a1 - a1^+), a2 + a2^+, i(a2 - a2^+))`. A step of
//! length `h` is the Strang splitting
//!
//! ```text
//! psi <- exp(-i H_S h/2) exp(-i lambda sum_i dW_i V_i) exp(-i H_S h/2) psi
//! ```
//!
//! whose noise kick is the exact Stratonovich flow over the step. Averaged
//! over the noise, the evolution approaches the singular-coupling GKSL
//! semigroup with Kossakowski matrix `CALIBRATED_NOISE_FACTOR * G`.

use nalgebra::{DMatrix, DVector, Matrix4};
use nalgebra_sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::environment::CorrelationModel;
use crate::error::{Error, Result};
use crate::evolution::{evolve, validate_grid, Diagnostics, Method, Trajectory};
use crate::fockspace::{annihilator, DensityMatrix, FockBasis, OperatorMatrix, Well, C64};
use crate::generator::{LindbladGenerator, SingularRepresentation};
use crate::linalg::{self, csr_inf_norm, csr_matvec, to_csr};
use crate::model::{bose_hubbard_hamiltonian, current_operator, ModelParams};

/// Ratio between the singular-coupling Kossakowski matrix and the white-noise
/// covariance for the Stratonovich scheme above, as measured by
/// [`calibrate_noise`].
pub const CALIBRATED_NOISE_FACTOR: f64 = 1.0;

/// Master seed of the default calibration run.
pub const CALIBRATION_SEED: u64 = 0x5eed_ca1b;
pub const CALIBRATION_TRAJECTORIES: usize = 200_000;

const CHUNK: usize = 64;
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// White-noise covariance, real symmetric PSD.
    pub g: Matrix4<f64>,
    pub dt: f64,
    pub seed: u64,
    pub trajectories: usize,
    /// Which of the four couplings carry noise.
    pub channels: [bool; 4],
    /// Tolerance, in standard errors, on the change of the final mean
    /// current when `dt` is halved; `None` skips the check.
    pub dt_check: Option<f64>,
}

impl NoiseConfig {
    pub fn new(g: Matrix4<f64>, dt: f64, seed: u64, trajectories: usize) -> Self {
        Self {
            g,
            dt,
            seed,
            trajectories,
            channels: [true; 4],
            dt_check: Some(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("noise step dt must be > 0, got {}", self.dt)));
        }
        if self.trajectories < 1 {
            return Err(Error::invalid("trajectory count must be >= 1"));
        }
        if let Some(tol) = self.dt_check {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::invalid("dt_check tolerance must be > 0"));
            }
        }
        check_real_psd(&self.g)
    }

    /// `G` with the rows and columns of disabled channels zeroed.
    pub fn masked_g(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| {
            if self.channels[i] && self.channels[j] {
                self.g[(i, j)]
            } else {
                0.0
            }
        })
    }
}

fn check_real_psd(g: &Matrix4<f64>) -> Result<()> {
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("noise covariance has non-finite entries"));
    }
    let asym = (g - g.transpose()).amax();
    if asym > 1e-12 {
        return Err(Error::invalid(format!("noise covariance not symmetric ({asym:e})")));
    }
    let min_eig = nalgebra::SymmetricEigen::new(*g).eigenvalues.min();
    if min_eig < crate::environment::PSD_TOL {
        return Err(Error::NotPositive {
            what: "noise covariance G".into(),
            min_eigenvalue: min_eig,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtCheck {
    pub coarse: f64,
    pub fine: f64,
    pub stderr: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    /// Mean state trajectory; the `J` record holds the ensemble mean current.
    pub trajectory: Trajectory,
    /// Standard error of the mean current at each time.
    pub j_stderr: Vec<f64>,
    pub trajectories: usize,
    pub seed: u64,
    /// Largest `| ||psi||^2 - 1 |` seen on any trajectory.
    pub max_norm_dev: f64,
    pub dt_check: Option<DtCheck>,
}

impl EnsembleResult {
    pub fn j_mean(&self) -> Vec<f64> {
        self.trajectory.current()
    }
}

/// Hermitian couplings `V_i`.
pub fn noise_couplings(basis: &FockBasis) -> [OperatorMatrix; 4] {
    let a1 = annihilator(basis, Well::One);
    let a2 = annihilator(basis, Well::Two);
    let (a1d, a2d) = (a1.adjoint(), a2.adjoint());
    let i = C64::new(0.0, 1.0);
    [&a1 + &a1d, (&a1 - &a1d).scale(i), &a2 + &a2d, (&a2 - &a2d).scale(i)]
}

struct Engine {
    eigvecs: DMatrix<C64>,
    eigvals: DVector<f64>,
    couplings: Vec<CsrMatrix<C64>>,
    coupling_norms: Vec<f64>,
    sqrt_g: DMatrix<f64>,
    lambda: f64,
    observable: CsrMatrix<C64>,
}

struct Interval {
    steps: usize,
    h: f64,
    /// `exp(-i H h / 2)`.
    coarse: DMatrix<C64>,
    /// `exp(-i H h / 4)`.
    fine: DMatrix<C64>,
}

struct Plan {
    intervals: Vec<Interval>,
    check: bool,
    accumulate: bool,
}

struct KickScratch {
    term: DVector<C64>,
    next: DVector<C64>,
    kv: DVector<C64>,
}

struct Scratch {
    tmp: DVector<C64>,
    k: KickScratch,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            tmp: DVector::zeros(n),
            k: KickScratch {
                term: DVector::zeros(n),
                next: DVector::zeros(n),
                kv: DVector::zeros(n),
            },
        }
    }
}

/// Per-trajectory records and, optionally, the summed states.
type ChunkOutput = (Vec<Record>, Option<Vec<DMatrix<C64>>>);

struct Record {
    values: Vec<f64>,
    fine: Vec<f64>,
    norm_dev: f64,
}

impl Engine {
    fn new(
        hamiltonian: &DMatrix<C64>,
        couplings: Vec<CsrMatrix<C64>>,
        sqrt_g: DMatrix<f64>,
        lambda: f64,
        observable: CsrMatrix<C64>,
    ) -> Self {
        let eig = linalg::hermitian_eigen(hamiltonian);
        let coupling_norms = couplings.iter().map(csr_inf_norm).collect();
        Self {
            eigvecs: eig.eigenvectors,
            eigvals: eig.eigenvalues,
            couplings,
            coupling_norms,
            sqrt_g,
            lambda,
            observable,
        }
    }

    fn dim(&self) -> usize {
        self.eigvals.len()
    }

    fn channels(&self) -> usize {
        self.couplings.len()
    }

    fn free_propagator(&self, tau: f64) -> DMatrix<C64> {
        let phases = DMatrix::from_diagonal(&self.eigvals.map(|e| C64::from_polar(1.0, -e * tau)));
        &self.eigvecs * phases * self.eigvecs.adjoint()
    }

    fn plan(&self, t_grid: &[f64], dt: f64, check: bool, accumulate: bool) -> Result<Plan> {
        let mut intervals = Vec::with_capacity(t_grid.len().saturating_sub(1));
        for w in t_grid.windows(2) {
            let span = w[1] - w[0];
            let steps = (span / dt).round().max(1.0) as usize;
            if ((steps as f64 * dt - span) / span).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "grid spacing {span} is not a multiple of dt = {dt}"
                )));
            }
            let h = span / steps as f64;
            intervals.push(Interval {
                steps,
                h,
                coarse: self.free_propagator(0.5 * h),
                fine: self.free_propagator(0.25 * h),
            });
        }
        Ok(Plan {
            intervals,
            check,
            accumulate,
        })
    }

    /// `psi <- exp(-i lambda sum_i dw_i V_i) psi` by a sub-stepped Taylor series.
    fn kick(&self, psi: &mut DVector<C64>, dw: &[f64], s: &mut KickScratch) {
        let bound: f64 = self.lambda
            * dw.iter()
                .zip(&self.coupling_norms)
                .map(|(w, n)| w.abs() * n)
                .sum::<f64>();
        if bound == 0.0 {
            return;
        }
        let substeps = (bound / 0.5).ceil().max(1.0) as usize;
        let scale = self.lambda / substeps as f64;
        for _ in 0..substeps {
            s.term.copy_from(psi);
            for k in 1..=60 {
                s.next.fill(ZERO);
                for (v, &w) in self.couplings.iter().zip(dw) {
                    if w != 0.0 {
                        csr_matvec(v, s.term.as_slice(), s.kv.as_mut_slice());
                        s.next.axpy(C64::new(0.0, -w * scale / k as f64), &s.kv, ONE);
                    }
                }
                std::mem::swap(&mut s.term, &mut s.next);
                *psi += &s.term;
                if s.term.norm() <= 1e-17 * psi.norm() {
                    break;
                }
            }
        }
    }

    fn step(&self, psi: &mut DVector<C64>, u: &DMatrix<C64>, dw: &[f64], s: &mut Scratch) {
        s.tmp.gemv(ONE, u, psi, ZERO);
        self.kick(&mut s.tmp, dw, &mut s.k);
        psi.gemv(ONE, u, &s.tmp, ZERO);
    }

    fn observe(&self, components: &[(f64, DVector<C64>)], s: &mut Scratch) -> f64 {
        components
            .iter()
            .map(|(w, psi)| {
                csr_matvec(&self.observable, psi.as_slice(), s.k.kv.as_mut_slice());
                w * psi.dotc(&s.k.kv).re
            })
            .sum()
    }

    fn run_trajectory(
        &self,
        plan: &Plan,
        initial: &[(f64, DVector<C64>)],
        seed: u64,
        index: u64,
        acc: Option<&mut Vec<DMatrix<C64>>>,
    ) -> Record {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let nch = self.channels();
        let mut s = Scratch::new(self.dim());
        let mut coarse: Vec<(f64, DVector<C64>)> = initial.to_vec();
        let mut fine: Vec<(f64, DVector<C64>)> = if plan.check { initial.to_vec() } else { Vec::new() };
        let mut record = Record {
            values: Vec::with_capacity(plan.intervals.len() + 1),
            fine: Vec::new(),
            norm_dev: 0.0,
        };
        let mut acc = acc;
        let mut z = vec![0.0; 2 * nch];
        let mut dw_a = vec![0.0; nch];
        let mut dw_b = vec![0.0; nch];
        let mut dw = vec![0.0; nch];
        let mut observe = |coarse: &[(f64, DVector<C64>)], fine: &[(f64, DVector<C64>)], slot: usize, s: &mut Scratch, record: &mut Record| {
            record.values.push(self.observe(coarse, s));
            if plan.check {
                record.fine.push(self.observe(fine, s));
            }
            for (_, psi) in coarse {
                record.norm_dev = record.norm_dev.max((psi.norm_squared() - 1.0).abs());
            }
            if let Some(acc) = acc.as_deref_mut() {
                for (w, psi) in coarse {
                    acc[slot].gerc(C64::new(*w, 0.0), psi, psi, ONE);
                }
            }
        };
        observe(&coarse, &fine, 0, &mut s, &mut record);
        for (slot, interval) in plan.intervals.iter().enumerate() {
            let half = (0.5 * interval.h).sqrt();
            for _ in 0..interval.steps {
                for x in z.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                for i in 0..nch {
                    let (mut a, mut b) = (0.0, 0.0);
                    for j in 0..nch {
                        a += self.sqrt_g[(i, j)] * z[j];
                        b += self.sqrt_g[(i, j)] * z[nch + j];
                    }
                    dw_a[i] = a * half;
                    dw_b[i] = b * half;
                    dw[i] = dw_a[i] + dw_b[i];
                }
                for (_, psi) in coarse.iter_mut() {
                    self.step(psi, &interval.coarse, &dw, &mut s);
                }
                for (_, psi) in fine.iter_mut() {
                    self.step(psi, &interval.fine, &dw_a, &mut s);
                    self.step(psi, &interval.fine, &dw_b, &mut s);
                }
            }
            observe(&coarse, &fine, slot + 1, &mut s, &mut record);
        }
        record
    }

    /// Runs `trajectories` members in fixed-size chunks and reduces them in
    /// index order.
    fn ensemble(
        &self,
        plan: &Plan,
        initial: &[(f64, DVector<C64>)],
        seed: u64,
        trajectories: usize,
        points: usize,
    ) -> ChunkOutput {
        let dim = self.dim();
        let chunks: Vec<ChunkOutput> = (0..trajectories.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = plan
                    .accumulate
                    .then(|| vec![DMatrix::<C64>::zeros(dim, dim); points]);
                let records = (c * CHUNK..((c + 1) * CHUNK).min(trajectories))
                    .map(|idx| self.run_trajectory(plan, initial, seed, idx as u64, acc.as_mut()))
                    .collect();
                (records, acc)
            })
            .collect();
        let mut records = Vec::with_capacity(trajectories);
        let mut total: Option<Vec<DMatrix<C64>>> = None;
        for (r, acc) in chunks {
            records.extend(r);
            if let Some(acc) = acc {
                match total.as_mut() {
                    None => total = Some(acc),
                    Some(t) => {
                        for (x, y) in t.iter_mut().zip(acc) {
                            *x += y;
                        }
                    }
                }
            }
        }
        (records, total)
    }
}

fn mean_and_stderr(records: &[Record], pick: impl Fn(&Record) -> &[f64], points: usize) -> (Vec<f64>, Vec<f64>) {
    let m = records.len() as f64;
    let mut mean = vec![0.0; points];
    for r in records {
        for (acc, v) in mean.iter_mut().zip(pick(r)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|x| *x /= m);
    let mut var = vec![0.0; points];
    for r in records {
        for ((acc, v), mu) in var.iter_mut().zip(pick(r)).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let stderr = var
        .iter()
        .map(|v| {
            if records.len() > 1 {
                (v / (m - 1.0)).sqrt() / m.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    (mean, stderr)
}

fn initial_components(rho0: &DensityMatrix) -> Vec<(f64, DVector<C64>)> {
    if let Some(psi) = rho0.pure_vector() {
        return vec![(1.0, psi)];
    }
    let eig = linalg::hermitian_eigen(rho0.matrix());
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 1e-14)
        .map(|(k, &p)| (p, eig.eigenvectors.column(k).into_owned()))
        .collect()
}

fn sqrt_real_psd(g: &Matrix4<f64>) -> DMatrix<f64> {
    let s = linalg::sqrt_psd(g);
    DMatrix::from_fn(4, 4, |i, j| s[(i, j)])
}

/// Monte Carlo average of the white-noise unraveling.
pub fn run_ensemble(
    basis: &FockBasis,
    p: &ModelParams,
    noise: &NoiseConfig,
    rho0: &DensityMatrix,
    t_grid: &[f64],
) -> Result<EnsembleResult> {
    p.validate()?;
    noise.validate()?;
    validate_grid(t_grid)?;
    if rho0.basis() != *basis {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho0.operator().dim(),
        });
    }
    let h = bose_hubbard_hamiltonian(basis, p);
    let couplings = noise_couplings(basis)
        .iter()
        .map(|v| to_csr(v.matrix()))
        .collect();
    let engine = Engine::new(
        h.matrix(),
        couplings,
        sqrt_real_psd(&noise.masked_g()),
        p.lambda,
        to_csr(current_operator(basis).matrix()),
    );
    let plan = engine.plan(t_grid, noise.dt, noise.dt_check.is_some(), true)?;
    let initial = initial_components(rho0);
    let points = t_grid.len();
    let (records, acc) = engine.ensemble(&plan, &initial, noise.seed, noise.trajectories, points);
    let (mean, stderr) = mean_and_stderr(&records, |r| &r.values, points);
    let max_norm_dev = records.iter().map(|r| r.norm_dev).fold(0.0, f64::max);

    let dt_check = match noise.dt_check {
        None => None,
        Some(tol) => {
            let (fine_mean, fine_err) = mean_and_stderr(&records, |r| &r.fine, points);
            let check = DtCheck {
                coarse: mean[points - 1],
                fine: fine_mean[points - 1],
                stderr: fine_err[points - 1],
                tolerance: tol,
            };
            let shift = (check.coarse - check.fine).abs();
            if shift > tol * check.stderr && shift > 1e-14 {
                return Err(Error::StepSize {
                    shift,
                    tolerance: tol * check.stderr,
                });
            }
            Some(check)
        }
    };

    let m = C64::new(1.0 / noise.trajectories as f64, 0.0);
    let states: Vec<OperatorMatrix> = acc
        .expect("ensemble accumulates states")
        .into_iter()
        .map(|s| OperatorMatrix::from_matrix_unchecked(*basis, s * m))
        .collect();
    let diagnostics = states.iter().map(Diagnostics::of).collect();
    Ok(EnsembleResult {
        trajectory: Trajectory {
            times: t_grid.to_vec(),
            observables: vec![("J".into(), mean.iter().map(|&x| C64::new(x, 0.0)).collect())],
            diagnostics,
            states: Some(states),
        },
        j_stderr: stderr,
        trajectories: noise.trajectories,
        seed: noise.seed,
        max_norm_dev,
        dt_check,
    })
}

/// Singular-coupling Lindblad trajectory that the ensemble should reproduce.
pub fn lindblad_reference(
    basis: &FockBasis,
    p: &ModelParams,
    noise: &NoiseConfig,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    method: Method,
) -> Result<Trajectory> {
    noise.validate()?;
    let g = noise.masked_g() * CALIBRATED_NOISE_FACTOR;
    let model = CorrelationModel::delta(g.map(|x| C64::new(x, 0.0)))?;
    let gen = LindbladGenerator::singular_coupling_with(basis, p, &model, SingularRepresentation::Hermitian)?;
    evolve(&gen, rho0, t_grid, method)
}

/// Measures the factor between the noise covariance and the Kossakowski
/// normalization reproduced by the integrator.
///
/// A qubit with `H = 0` is driven through `sigma_x` by white noise of
/// strength `g`, the largest eigenvalue of `G`. The Lindblad prediction is
/// `<sigma_z>(t) = exp(-2 kappa g t)`; `kappa` is fitted by least squares on
/// `-ln <sigma_z>`. With `convention_probe` the raw fit is returned;
/// otherwise it is snapped to the nearest of 1/2, 1, 2 and rejected if no
/// candidate lies within 5 %.
pub fn calibrate_noise(g: &Matrix4<f64>, convention_probe: bool) -> Result<f64> {
    calibrate_noise_with(g, convention_probe, CALIBRATION_SEED, CALIBRATION_TRAJECTORIES)
}

pub fn calibrate_noise_with(
    g: &Matrix4<f64>,
    convention_probe: bool,
    seed: u64,
    trajectories: usize,
) -> Result<f64> {
    check_real_psd(g)?;
    let strength = nalgebra::SymmetricEigen::new(*g).eigenvalues.max();
    if strength.is_nan() || strength <= 0.0 {
        return Err(Error::invalid("calibration needs a nonzero noise covariance"));
    }
    let sigma_x = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let sigma_z = DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    let engine = Engine::new(
        &DMatrix::zeros(2, 2),
        vec![to_csr(&sigma_x)],
        DMatrix::from_element(1, 1, strength.sqrt()),
        1.0,
        to_csr(&sigma_z),
    );
    let t_max = 0.5 / strength;
    let points = 6;
    let grid: Vec<f64> = (0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect();
    let plan = engine.plan(&grid, t_max / 50.0, false, false)?;
    let up = DVector::from_column_slice(&[ONE, ZERO]);
    let (records, _) = engine.ensemble(&plan, &[(1.0, up)], seed, trajectories, points);
    let (mean, _) = mean_and_stderr(&records, |r| &r.values, points);

    let (mut num, mut den) = (0.0, 0.0);
    for (t, m) in grid.iter().zip(&mean).skip(1) {
        if m.is_nan() || *m <= 0.0 {
            return Err(Error::FitFailure(format!("<sigma_z>({t}) = {m} is not positive")));
        }
        num += t * (-m.ln());
        den += t * t;
    }
    let kappa = num / (2.0 * strength * den);
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::FitFailure(format!("fitted factor {kappa} is not positive")));
    }
    if convention_probe {
        return Ok(kappa);
    }
    [0.5, 1.0, 2.0]
        .into_iter()
        .find(|c| ((kappa - c) / c).abs() < 0.05)
        .ok_or_else(|| Error::FitFailure(format!("fitted factor {kappa} matches no known convention")))
}
