//! Closed-form initial slopes of the inter-well current.
//!
//! All formulas refer to the Mott state `|N,N>`. Indices of `G`, `c` and `h`
//! are written 1-based in the comments and 0-based in code.

use serde::{Deserialize, Serialize};

use crate::environment::{CorrelationModel, Matrix4c};
use crate::error::{Error, Result};
use crate::evolution::current_slope;
use crate::fockspace::{DensityMatrix, C64};
use crate::generator::LindbladGenerator;
use crate::model::{bohr_frequencies, ModelParams};

/// Comparisons with `|analytic|` below this are flagged as degenerate.
pub const DEGENERATE_SCALE: f64 = 1e-14;

const I: C64 = C64::new(0.0, 1.0);

/// `Re(G14 - G23)`.
pub fn cross_asymmetry(g: &Matrix4c) -> f64 {
    (g[(0, 3)] - g[(1, 2)]).re
}

/// `h13 = c13 + c24 + i(c23 - c14)`.
pub fn h13(c: &Matrix4c) -> C64 {
    c[(0, 2)] + c[(1, 3)] + I * (c[(1, 2)] - c[(0, 3)])
}

/// `h24 = c13 + c24 + i(c14 - c23)`.
pub fn h24(c: &Matrix4c) -> C64 {
    c[(0, 2)] + c[(1, 3)] + I * (c[(0, 3)] - c[(1, 2)])
}

/// Weak-coupling slope
/// `2 lambda^2 [ (N+1)^2 Im h31(w_N) + N^2 Im h24(-w_{N-1}) ]`
/// with `h31 = h13^*`.
pub fn slope_weak_exact(filling: usize, p: &ModelParams, model: &CorrelationModel) -> Result<f64> {
    if filling < 1 {
        return Err(Error::invalid("filling N must be >= 1"));
    }
    let ladder = bohr_frequencies(p, filling + 1)?;
    let w_n = ladder[filling].omega;
    let w_below = ladder[filling - 1].omega;
    let h31 = h13(&model.fourier_c(w_n)).conj();
    let h24 = h24(&model.fourier_c(-w_below));
    let n = filling as f64;
    Ok(2.0 * p.lambda * p.lambda * ((n + 1.0).powi(2) * h31.im + n * n * h24.im))
}

fn exponential_mu(model: &CorrelationModel) -> Result<f64> {
    model
        .mu()
        .ok_or_else(|| Error::invalid("formula needs an exponential correlation model"))
}

/// Large-N, fast-bath limit `2 lambda^2 mu Re(G14 - G23) / U^2`.
pub fn slope_weak_large_n(p: &ModelParams, model: &CorrelationModel) -> Result<f64> {
    let mu = exponential_mu(model)?;
    Ok(2.0 * p.lambda * p.lambda * mu * cross_asymmetry(model.strengths())
        / (p.interaction * p.interaction))
}

/// Intermediate large-N form `8 lambda^2 N^2 mu / (mu^2 + w_N^2) Re(G14 - G23)`.
pub fn slope_weak_lorentzian(filling: usize, p: &ModelParams, model: &CorrelationModel) -> Result<f64> {
    let mu = exponential_mu(model)?;
    let w_n = bohr_frequencies(p, filling + 1)?[filling].omega;
    let n = filling as f64;
    Ok(8.0 * p.lambda * p.lambda * n * n * mu / (mu * mu + w_n * w_n) * cross_asymmetry(model.strengths()))
}

/// Singular-coupling slope `2 lambda^2 [ (2N+1) Im(G31 + G42) + Re(G14 - G23) ]`.
pub fn slope_singular(filling: usize, lambda: f64, g: &Matrix4c) -> f64 {
    let n = filling as f64;
    2.0 * lambda * lambda * ((2.0 * n + 1.0) * (g[(2, 0)] + g[(3, 1)]).im + cross_asymmetry(g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub numeric: f64,
    pub analytic_exact: f64,
    pub analytic_large_n: Option<f64>,
    pub abs_dev: f64,
    pub rel_dev: f64,
    /// The analytic slope vanishes, so only `abs_dev` is meaningful.
    pub degenerate: bool,
}

impl SlopeReport {
    pub fn new(numeric: f64, analytic: f64) -> Self {
        let abs_dev = (numeric - analytic).abs();
        Self {
            numeric,
            analytic_exact: analytic,
            analytic_large_n: None,
            abs_dev,
            rel_dev: abs_dev / analytic.abs().max(1e-300),
            degenerate: analytic.abs() < DEGENERATE_SCALE,
        }
    }

    pub fn with_large_n(mut self, large_n: f64) -> Self {
        self.analytic_large_n = Some(large_n);
        self
    }

    /// Relative agreement, or absolute agreement for a degenerate comparison.
    pub fn passes(&self, rel_tol: f64, abs_tol: f64) -> bool {
        if self.degenerate {
            self.abs_dev <= abs_tol
        } else {
            self.rel_dev <= rel_tol
        }
    }
}

pub fn compare(gen: &LindbladGenerator, rho0: &DensityMatrix, analytic: f64) -> Result<SlopeReport> {
    Ok(SlopeReport::new(current_slope(gen, rho0)?, analytic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{
        cross_coupled_strengths, equal_coupling_model, random_psd_strengths, CorrelationKind,
    };
    use crate::fockspace::{fock_state, FockBasis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams::new(0.01, 1.0, 0.5, 0.5, 0.05).unwrap()
    }

    fn swap_wells(g: &Matrix4c) -> Matrix4c {
        let perm = [2, 3, 0, 1];
        Matrix4c::from_fn(|i, j| g[(perm[i], perm[j])])
    }

    #[test]
    fn canonical_values() {
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 2.0).unwrap();
        // 2 lambda^2 * 0.2 * [9 * 4/(4 + 5.5^2) + 4 * 4/(4 + 3.5^2)]
        let expected = 0.001 * (9.0 * 4.0 / 34.25 + 4.0 * 4.0 / 16.25);
        let exact = slope_weak_exact(2, &params(), &model).unwrap();
        assert!((exact - expected).abs() < 1e-17);
        assert!((exact - 2.0357e-3).abs() < 1e-7);
        assert!((slope_weak_large_n(&params(), &model).unwrap() - 2.0e-3).abs() < 1e-17);
        assert!((slope_singular(2, 0.05, &cross_coupled_strengths(0.3, 0.1)) - 1.0e-3).abs() < 1e-17);
    }

    #[test]
    fn weak_formula_matches_generator_on_random_baths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = FockBasis::new(4).unwrap();
        for filling in 1..=3 {
            let rho0 = fock_state(&b, filling, filling).unwrap();
            for _ in 0..4 {
                let model = CorrelationModel::exponential(random_psd_strengths(&mut rng), 1.3).unwrap();
                let gen = LindbladGenerator::weak_coupling(&b, &params(), &model, true).unwrap();
                let analytic = slope_weak_exact(filling, &params(), &model).unwrap();
                let report = compare(&gen, &rho0, analytic).unwrap();
                assert!(report.rel_dev < 1e-10, "N = {filling}: {report:?}");
            }
        }
    }

    #[test]
    fn singular_formula_matches_generator_on_random_baths() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b = FockBasis::new(4).unwrap();
        for filling in 1..=3 {
            let rho0 = fock_state(&b, filling, filling).unwrap();
            for _ in 0..4 {
                let g = random_psd_strengths(&mut rng);
                let model = CorrelationModel::delta_hermitian(g).unwrap();
                let gen = LindbladGenerator::singular_coupling(&b, &params(), &model).unwrap();
                let report = compare(&gen, &rho0, slope_singular(filling, 0.05, &g)).unwrap();
                assert!(report.rel_dev < 1e-10, "N = {filling}: {report:?}");
            }
        }
    }

    #[test]
    fn slopes_are_odd_under_well_exchange() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let g = random_psd_strengths(&mut rng);
            let s = slope_singular(2, 0.05, &g);
            assert!((slope_singular(2, 0.05, &swap_wells(&g)) + s).abs() < 1e-15);
            let m = CorrelationModel::exponential(g, 2.0).unwrap();
            let ms = CorrelationModel::exponential(swap_wells(&g), 2.0).unwrap();
            let w = slope_weak_exact(2, &params(), &m).unwrap();
            let ws = slope_weak_exact(2, &params(), &ms).unwrap();
            assert!((w + ws).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_coupling_nulls() {
        let model =
            equal_coupling_model(CorrelationKind::Exponential { mu: 2.0 }, [1.0, 0.7], C64::new(0.2, 0.3)).unwrap();
        assert!(slope_weak_exact(2, &params(), &model).unwrap().abs() < 1e-15);
        assert_eq!(slope_weak_large_n(&params(), &model).unwrap(), 0.0);
        let g = *model.strengths();
        assert!(slope_singular(2, 0.05, &g).abs() < 1e-15);
    }

    #[test]
    fn lambda_squared_scaling() {
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 2.0).unwrap();
        let a = slope_weak_exact(2, &params(), &model).unwrap();
        let b = slope_weak_exact(2, &params().with_lambda(0.1), &model).unwrap();
        assert!((b / a - 4.0).abs() < 1e-13);
    }

    #[test]
    fn large_n_ratio_approaches_one() {
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 0.1).unwrap();
        let large = slope_weak_large_n(&params(), &model).unwrap();
        let ratios: Vec<f64> = [2, 8, 32, 128]
            .iter()
            .map(|&n| slope_weak_exact(n, &params(), &model).unwrap() / large)
            .collect();
        for w in ratios.windows(2) {
            assert!((w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        }
        assert!((ratios[3] - 1.0).abs() < 0.01);
        let lor = slope_weak_lorentzian(32, &params(), &model).unwrap() / large;
        assert!((lor - 1.0).abs() < 0.05);
    }

    #[test]
    fn report_fields() {
        let r = SlopeReport::new(1.0e-3 + 1e-15, 1.0e-3);
        assert!(!r.degenerate);
        assert!(r.passes(1e-10, 0.0));
        let z = SlopeReport::new(3e-16, 0.0);
        assert!(z.degenerate);
        assert!(z.passes(1e-10, 1e-12));
        assert!(slope_weak_large_n(&params(), &CorrelationModel::delta(cross_coupled_strengths(0.3, 0.1)).unwrap()).is_err());
    }
}
