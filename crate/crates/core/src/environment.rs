//! Bath correlation models and their spectral transforms.
//!
//! Two families are supported:
//!
//! * `Exponential { mu }`: `G(t) = G e^{-mu t}` for `t >= 0`, extended to
//!   negative times by `G(-t) = G(t)^dagger`.
//! * `Delta`: `G(t) = G delta(t)`.
//!
//! For each model the Fourier transform `c(w) = int dt e^{-i w t} G(t)` and
//! the Hilbert transform `s(w) = (1/2pi) P int dv c(v) / (v - w)` are
//! available in closed form, together with independent quadrature routes.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::C64;
use crate::linalg::{hermiticity_error4, min_eigenvalue4};
use crate::quadrature;

pub type Matrix4c = Matrix4<C64>;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CorrelationKind {
    Exponential { mu: f64 },
    Delta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    kind: CorrelationKind,
    g: Matrix4c,
}

/// `c(w)` and `s(w)` at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    pub omega: f64,
    pub c: Matrix4c,
    pub s: Matrix4c,
}

fn check_hermitian_psd(g: &Matrix4c) -> Result<()> {
    if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("correlation matrix has non-finite entries"));
    }
    let herm = hermiticity_error4(g);
    if herm > HERMITICITY_TOL {
        return Err(Error::invalid(format!(
            "correlation matrix not Hermitian (max |G - G^+| = {herm:e})"
        )));
    }
    let min_eig = min_eigenvalue4(g);
    if min_eig < PSD_TOL {
        return Err(Error::NotPositive {
            what: "correlation matrix G".into(),
            min_eigenvalue: min_eig,
        });
    }
    Ok(())
}

impl CorrelationModel {
    pub fn exponential(g: Matrix4c, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("decay rate mu must be > 0, got {mu}")));
        }
        check_hermitian_psd(&g)?;
        Ok(Self {
            kind: CorrelationKind::Exponential { mu },
            g,
        })
    }

    /// Delta-correlated model with a real symmetric PSD strength matrix, as
    /// produced by classical stochastic noise.
    pub fn delta(g: Matrix4c) -> Result<Self> {
        if let Some(z) = g.iter().find(|z| z.im != 0.0) {
            return Err(Error::invalid(format!(
                "delta-correlated G must be real symmetric (found imaginary part {})",
                z.im
            )));
        }
        Self::delta_hermitian(g)
    }

    /// Delta-correlated model with a complex Hermitian PSD matrix (infinite
    /// temperature bath).
    pub fn delta_hermitian(g: Matrix4c) -> Result<Self> {
        check_hermitian_psd(&g)?;
        Ok(Self {
            kind: CorrelationKind::Delta,
            g,
        })
    }

    pub fn with_kind(kind: CorrelationKind, g: Matrix4c) -> Result<Self> {
        match kind {
            CorrelationKind::Exponential { mu } => Self::exponential(g, mu),
            CorrelationKind::Delta => Self::delta(g),
        }
    }

    pub fn kind(&self) -> CorrelationKind {
        self.kind
    }

    pub fn strengths(&self) -> &Matrix4c {
        &self.g
    }

    pub fn mu(&self) -> Option<f64> {
        match self.kind {
            CorrelationKind::Exponential { mu } => Some(mu),
            CorrelationKind::Delta => None,
        }
    }

    /// `G(t)` of the exponential family; `None` for the delta family.
    pub fn time_correlation(&self, t: f64) -> Option<Matrix4c> {
        let mu = self.mu()?;
        let decay = C64::new((-mu * t.abs()).exp(), 0.0);
        Some(if t >= 0.0 {
            self.g * decay
        } else {
            self.g.adjoint() * decay
        })
    }

    /// Fourier transform `c(w)`.
    pub fn fourier_c(&self, omega: f64) -> Matrix4c {
        match self.kind {
            CorrelationKind::Delta => self.g,
            CorrelationKind::Exponential { mu } => {
                // G/(mu + i w) + G^+/(mu - i w), split into the Hermitian and
                // anti-Hermitian parts of G.
                let (herm, anti) = hermitian_split(&self.g);
                let den = mu * mu + omega * omega;
                herm * C64::new(2.0 * mu / den, 0.0) + anti * C64::new(0.0, -2.0 * omega / den)
            }
        }
    }

    /// Hilbert transform `s(w)`.
    pub fn hilbert_s(&self, omega: f64) -> Matrix4c {
        match self.kind {
            CorrelationKind::Delta => Matrix4c::zeros(),
            CorrelationKind::Exponential { mu } => {
                let (herm, anti) = hermitian_split(&self.g);
                let den = mu * mu + omega * omega;
                herm * C64::new(-omega / den, 0.0) + anti * C64::new(0.0, -mu / den)
            }
        }
    }

    pub fn spectral(&self, omega: f64) -> SpectralMatrix {
        SpectralMatrix {
            omega,
            c: self.fourier_c(omega),
            s: self.hilbert_s(omega),
        }
    }

    /// `c(w)` by direct quadrature of the time-domain correlation function.
    pub fn fourier_c_numeric(&self, omega: f64) -> Matrix4c {
        if self.kind == CorrelationKind::Delta {
            return self.g;
        }
        Matrix4c::from_fn(|i, j| {
            let entry = |t: f64, part: fn(C64) -> f64| {
                let g = self.time_correlation(t).expect("exponential kind");
                part(C64::from_polar(1.0, -omega * t) * g[(i, j)])
            };
            let re = quadrature::integrate_upper(|t| entry(t, |z| z.re), 0.0, 1e-14, 1e-13).value
                + quadrature::integrate_lower(|t| entry(t, |z| z.re), 0.0, 1e-14, 1e-13).value;
            let im = quadrature::integrate_upper(|t| entry(t, |z| z.im), 0.0, 1e-14, 1e-13).value
                + quadrature::integrate_lower(|t| entry(t, |z| z.im), 0.0, 1e-14, 1e-13).value;
            C64::new(re, im)
        })
    }

    /// `s(w)` by principal-value quadrature of `c`, with Richardson
    /// extrapolation of the excision window.
    pub fn hilbert_s_numeric(&self, omega: f64) -> Matrix4c {
        let Some(mu) = self.mu() else {
            return Matrix4c::zeros();
        };
        let h0 = mu / 8.0;
        let span = 4.0 * mu + omega.abs();
        Matrix4c::from_fn(|i, j| {
            let re = quadrature::principal_value(|w| self.fourier_c(w)[(i, j)].re, omega, h0, span);
            let im = quadrature::principal_value(|w| self.fourier_c(w)[(i, j)].im, omega, h0, span);
            C64::new(re, im) / (2.0 * PI)
        })
    }
}

fn hermitian_split(g: &Matrix4c) -> (Matrix4c, Matrix4c) {
    let gd = g.adjoint();
    let half = C64::new(0.5, 0.0);
    ((g + gd) * half, (g - gd) * half)
}

/// Model in which both wells couple to the bath through the same operators
/// (`B1 = B3`, `B2 = B4`): `G = [[A, A], [A, A]]` with
/// `A = [[g1, cross], [cross*, g2]]`.
pub fn equal_coupling_model(
    kind: CorrelationKind,
    g_diag: [f64; 2],
    cross: C64,
) -> Result<CorrelationModel> {
    if g_diag.iter().any(|&g| g.is_nan() || g <= 0.0) {
        return Err(Error::invalid("equal-coupling diagonal strengths must be > 0"));
    }
    let a = [
        [C64::new(g_diag[0], 0.0), cross],
        [cross.conj(), C64::new(g_diag[1], 0.0)],
    ];
    let g = Matrix4c::from_fn(|i, j| a[i % 2][j % 2]);
    CorrelationModel::with_kind(kind, g)
}

/// The 4x4 real symmetric matrix used throughout the examples: identity
/// plus `G14 = G41 = g14` and `G23 = G32 = g23`.
pub fn cross_coupled_strengths(g14: f64, g23: f64) -> Matrix4c {
    let mut g = Matrix4c::identity();
    g[(0, 3)] = C64::new(g14, 0.0);
    g[(3, 0)] = C64::new(g14, 0.0);
    g[(1, 2)] = C64::new(g23, 0.0);
    g[(2, 1)] = C64::new(g23, 0.0);
    g
}

/// Random Hermitian PSD strength matrix `B B^+ / 4` with complex Gaussian
/// entries in `B`.
pub fn random_psd_strengths<R: rand::Rng + ?Sized>(rng: &mut R) -> Matrix4c {
    let b = Matrix4c::from_fn(|_, _| {
        C64::new(
            rng.sample::<f64, _>(rand_distr::StandardNormal),
            rng.sample::<f64, _>(rand_distr::StandardNormal),
        )
    });
    let g = b * b.adjoint() * C64::new(0.25, 0.0);
    // Exact Hermiticity after rounding.
    (g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Random real symmetric PSD strength matrix.
pub fn random_real_psd_strengths<R: rand::Rng + ?Sized>(rng: &mut R) -> Matrix4c {
    let b = Matrix4::<f64>::from_fn(|_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let g = b * b.transpose() * 0.25;
    ((g + g.transpose()) * 0.5).map(|x| C64::new(x, 0.0))
}
