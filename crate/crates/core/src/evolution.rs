//! Time evolution of states and observables under a GKSL generator.

use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, FockBasis, OperatorMatrix, C64};
use crate::generator::{LindbladGenerator, Picture};
use crate::linalg::{self, csr_matvec, expm_multiply, vectorize};
use crate::model::current_operator;

/// Records whose trace drifts further than this are flagged.
pub const TRACE_FLAG_TOL: f64 = 1e-8;
/// Records with a smaller eigenvalue are flagged.
pub const MIN_EIGENVALUE_FLAG: f64 = -1e-8;
/// Local error tolerance of the adaptive integrator.
pub const RK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exponential of the vectorized generator applied to the state.
    #[serde(alias = "exp", alias = "exp-prop", alias = "expprop")]
    ExpProp,
    /// Adaptive Dormand-Prince 5(4).
    #[serde(alias = "RK")]
    Rk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub trace_dev: f64,
    pub min_eig: f64,
    /// Population on states with `n1 = n_max` or `n2 = n_max`.
    pub leakage: f64,
    pub hermiticity: f64,
    pub flagged: bool,
}

impl Diagnostics {
    pub fn of(state: &OperatorMatrix) -> Self {
        let basis = state.basis();
        let m = state.matrix();
        let trace_dev = (m.trace() - C64::new(1.0, 0.0)).norm();
        let min_eig = linalg::min_hermitian_eigenvalue(m);
        let leakage = basis
            .states()
            .filter(|&(_, n1, n2)| n1 == basis.n_max() || n2 == basis.n_max())
            .map(|(i, _, _)| m[(i, i)].re)
            .sum();
        Self {
            trace_dev,
            min_eig,
            leakage,
            hermiticity: state.hermiticity_error(),
            flagged: trace_dev >= TRACE_FLAG_TOL || min_eig < MIN_EIGENVALUE_FLAG,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `(name, values)` with one value per time.
    pub observables: Vec<(String, Vec<C64>)>,
    pub diagnostics: Vec<Diagnostics>,
    pub states: Option<Vec<OperatorMatrix>>,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Option<&[C64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Real part of the `J` record.
    pub fn current(&self) -> Vec<f64> {
        self.series("J")
            .map(|v| v.iter().map(|z| z.re).collect())
            .unwrap_or_default()
    }

    pub fn any_flagged(&self) -> bool {
        self.diagnostics.iter().any(|d| d.flagged)
    }

    pub fn max_trace_dev(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_dev).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min_eig).fold(f64::INFINITY, f64::min)
    }

    pub fn max_leakage(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.leakage).fold(0.0, f64::max)
    }
}

/// `points` equally spaced times from 0 to `t_max`.
pub fn uniform_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || t_max.is_nan() || t_max <= 0.0 || !t_max.is_finite() {
        return Err(Error::invalid(format!(
            "time grid needs t_max > 0 and at least 2 points (got {t_max}, {points})"
        )));
    }
    let step = t_max / (points - 1) as f64;
    Ok((0..points)
        .map(|k| if k + 1 == points { t_max } else { k as f64 * step })
        .collect())
}

pub fn validate_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        None => return Err(Error::invalid("time grid is empty")),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::invalid(format!("time grid must start at 0, got {t0}")))
        }
        _ => {}
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("time grid has non-finite entries"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

/// `tr(rho X)`.
pub fn expectation(rho: &OperatorMatrix, x: &OperatorMatrix) -> Result<C64> {
    rho.ensure_same_basis(x)?;
    let (r, m) = (rho.matrix(), x.matrix());
    let d = r.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += r[(i, j)] * m[(j, i)];
        }
    }
    Ok(acc)
}

/// `tr(rho X)` for Hermitian `X`, rejecting imaginary parts above `1e-10`.
pub fn expectation_real(rho: &OperatorMatrix, x: &OperatorMatrix) -> Result<f64> {
    let z = expectation(rho, x)?;
    if z.im.abs() > 1e-10 {
        return Err(Error::invalid(format!(
            "expectation has imaginary part {:e}; observable not Hermitian?",
            z.im
        )));
    }
    Ok(z.re)
}

/// `d<J>/dt` at `t = 0`: `tr(rho0 L*[J])`.
pub fn current_slope(gen: &LindbladGenerator, rho0: &DensityMatrix) -> Result<f64> {
    let j = current_operator(&gen.basis());
    let dj = gen.apply_dual(&j)?;
    Ok(expectation(rho0.operator(), &dj)?.re)
}

pub fn evolve(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    method: Method,
) -> Result<Trajectory> {
    let j = current_operator(&gen.basis());
    evolve_with(gen, rho0.operator(), t_grid, method, &[("J", &j)], false)
}

/// Evolves `rho0` and records `tr(rho(t) X)` for each named observable.
pub fn evolve_with(
    gen: &LindbladGenerator,
    rho0: &OperatorMatrix,
    t_grid: &[f64],
    method: Method,
    observables: &[(&str, &OperatorMatrix)],
    keep_states: bool,
) -> Result<Trajectory> {
    validate_grid(t_grid)?;
    let basis = gen.basis();
    if rho0.basis() != basis {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho0.dim(),
        });
    }
    let sup = gen.sparse_superoperator(Picture::Schrodinger);
    let vectors = propagate_vector(&sup, &vectorize(rho0.matrix()), t_grid, method)?;

    let mut records: Vec<(String, Vec<C64>)> = observables
        .iter()
        .map(|(n, _)| (n.to_string(), Vec::with_capacity(t_grid.len())))
        .collect();
    let mut diagnostics = Vec::with_capacity(t_grid.len());
    let mut states = keep_states.then(Vec::new);
    for v in vectors {
        let state = to_operator(basis, &v);
        for ((_, x), (_, out)) in observables.iter().zip(records.iter_mut()) {
            out.push(expectation(&state, x)?);
        }
        diagnostics.push(Diagnostics::of(&state));
        if let Some(s) = states.as_mut() {
            s.push(state);
        }
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        observables: records,
        diagnostics,
        states,
    })
}

/// Evolves an observable in the Heisenberg picture, `X(t) = exp(t L*) X`.
pub fn evolve_observable(
    gen: &LindbladGenerator,
    x: &OperatorMatrix,
    t_grid: &[f64],
    method: Method,
) -> Result<Vec<OperatorMatrix>> {
    validate_grid(t_grid)?;
    let basis = gen.basis();
    if x.basis() != basis {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: x.dim(),
        });
    }
    let sup = gen.sparse_superoperator(Picture::Heisenberg);
    let vectors = propagate_vector(&sup, &vectorize(x.matrix()), t_grid, method)?;
    Ok(vectors.iter().map(|v| to_operator(basis, v)).collect())
}

/// `rho(t)` for a single time.
pub fn propagate(
    gen: &LindbladGenerator,
    rho: &OperatorMatrix,
    t: f64,
    method: Method,
) -> Result<OperatorMatrix> {
    let sup = gen.sparse_superoperator(Picture::Schrodinger);
    let out = propagate_vector(&sup, &vectorize(rho.matrix()), &[0.0, t], method)?;
    Ok(to_operator(gen.basis(), &out[1]))
}

fn to_operator(basis: FockBasis, v: &DVector<C64>) -> OperatorMatrix {
    OperatorMatrix::from_matrix_unchecked(basis, linalg::unvectorize(v, basis.dim()))
}

fn propagate_vector(
    sup: &CsrMatrix<C64>,
    v0: &DVector<C64>,
    t_grid: &[f64],
    method: Method,
) -> Result<Vec<DVector<C64>>> {
    match method {
        Method::ExpProp => {
            let mut out = Vec::with_capacity(t_grid.len());
            let mut v = v0.clone();
            out.push(v.clone());
            for w in t_grid.windows(2) {
                v = expm_multiply(sup, &v, w[1] - w[0]);
                if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::IntegrationFailure {
                        time: w[1],
                        reason: "non-finite state".into(),
                    });
                }
                out.push(v.clone());
            }
            Ok(out)
        }
        Method::Rk => dopri5(
            |y, dy| csr_matvec(sup, y, dy),
            v0,
            t_grid,
            RK_TOLERANCE,
            0.5 / linalg::csr_inf_norm(sup).max(1e-12),
        ),
    }
}

// Dormand-Prince 5(4) tableau (nodes unused: the system is autonomous).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration of the autonomous system `y' = f(y)`,
/// returning the state at every grid time. Steps are clipped to land on the
/// grid exactly.
pub fn dopri5<F>(f: F, y0: &DVector<C64>, t_grid: &[f64], tol: f64, h_init: f64) -> Result<Vec<DVector<C64>>>
where
    F: Fn(&[C64], &mut [C64]),
{
    const MAX_STEPS: usize = 10_000_000;
    let n = y0.len();
    let mut y = y0.clone();
    let mut k: Vec<DVector<C64>> = (0..7).map(|_| DVector::zeros(n)).collect();
    let mut stage = DVector::<C64>::zeros(n);
    let mut y_new = DVector::<C64>::zeros(n);
    f(y.as_slice(), k[0].as_mut_slice());
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(y.clone());
    let mut t = t_grid[0];
    let mut h = h_init;
    let mut steps = 0usize;
    for &target in &t_grid[1..] {
        while t < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: "step budget exhausted".into(),
                });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            for s in 1..7 {
                stage.copy_from(&y);
                for (m, &a) in A[s][..s].iter().enumerate() {
                    if a != 0.0 {
                        stage.axpy(C64::new(step * a, 0.0), &k[m], C64::new(1.0, 0.0));
                    }
                }
                if s == 6 {
                    y_new.copy_from(&stage);
                }
                f(stage.as_slice(), k[s].as_mut_slice());
            }
            let mut acc = 0.0;
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (m, &w) in E.iter().enumerate() {
                    if w != 0.0 {
                        e += k[m][i] * w;
                    }
                }
                let scale = tol + tol * y[i].norm().max(y_new[i].norm());
                let r = (e * step).norm() / scale;
                acc += r * r;
            }
            let err = (acc / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor;
                if h < 1e-14 * target.abs().max(1.0) {
                    return Err(Error::IntegrationFailure {
                        time: t,
                        reason: format!("step size underflow ({h:e})"),
                    });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
