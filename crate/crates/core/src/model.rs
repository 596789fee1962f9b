//! Two-site Bose-Hubbard Hamiltonian, current and barycenter observables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{
    annihilator, creator, fock_state, number, FockBasis, OperatorMatrix, Well, C64,
};

/// Physical parameters of the trap and of its coupling to the environment.
///
/// Units: hbar = 1, every energy shares one unit and time is its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Hopping amplitude `T`.
    #[serde(rename = "T")]
    pub tunneling: f64,
    /// On-site repulsion `U`.
    #[serde(rename = "U")]
    pub interaction: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// System-environment coupling constant.
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(tunneling: f64, interaction: f64, eps1: f64, eps2: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            tunneling,
            interaction,
            eps1,
            eps2,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.tunneling, self.interaction, self.eps1, self.eps2, self.lambda]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("model parameters must be finite"));
        }
        if self.interaction <= 0.0 {
            return Err(Error::invalid(format!("U must be > 0, got {}", self.interaction)));
        }
        if self.tunneling < 0.0 {
            return Err(Error::invalid(format!("T must be >= 0, got {}", self.tunneling)));
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.eps1 == self.eps2
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn eps(&self, well: Well) -> f64 {
        match well {
            Well::One => self.eps1,
            Well::Two => self.eps2,
        }
    }

    /// Gap of the `n -> n + 1` transition of one well with hopping neglected.
    pub fn single_well_gap(&self, well: Well, n: usize) -> f64 {
        self.eps(well) + self.interaction * (2 * n + 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BohrFrequency {
    pub n: usize,
    pub omega: f64,
}

/// `H = -T (a1^+ a2 + a2^+ a1) + U (n1^2 + n2^2) + eps1 n1 + eps2 n2`.
pub fn bose_hubbard_hamiltonian(basis: &FockBasis, p: &ModelParams) -> OperatorMatrix {
    let a1 = annihilator(basis, Well::One);
    let a2 = annihilator(basis, Well::Two);
    let hop = &a1.adjoint() * &a2 + &a2.adjoint() * &a1;
    let onsite = basis.diagonal(|n1, n2| {
        let (n1, n2) = (n1 as f64, n2 as f64);
        C64::new(
            p.interaction * (n1 * n1 + n2 * n2) + p.eps1 * n1 + p.eps2 * n2,
            0.0,
        )
    });
    onsite - p.tunneling * &hop
}

/// `J = i (a1^+ a2 - a2^+ a1)`.
pub fn current_operator(basis: &FockBasis) -> OperatorMatrix {
    let a1 = annihilator(basis, Well::One);
    let a2 = annihilator(basis, Well::Two);
    let diff = &creator(basis, Well::One) * &a2 - &creator(basis, Well::Two) * &a1;
    diff.scale(C64::new(0.0, 1.0))
}

/// `Z = (n1 - n2) / (2N)` with `N` the nominal filling per well.
pub fn barycenter_operator(basis: &FockBasis, filling: usize) -> Result<OperatorMatrix> {
    if filling < 1 {
        return Err(Error::invalid("barycenter normalization N must be >= 1"));
    }
    let norm = 1.0 / (2.0 * filling as f64);
    Ok((number(basis, Well::One) - number(basis, Well::Two)).scale(C64::new(norm, 0.0)))
}

/// Transition energies `omega_n = eps + U + 2 U n`, `n = 0 .. n_max - 1`.
pub fn bohr_frequencies(p: &ModelParams, n_max: usize) -> Result<Vec<BohrFrequency>> {
    if !p.is_symmetric() {
        return Err(Error::AsymmetricTrap {
            eps1: p.eps1,
            eps2: p.eps2,
        });
    }
    if n_max < 1 {
        return Err(Error::invalid(format!("n_max must be >= 1, got {n_max}")));
    }
    Ok((0..n_max)
        .map(|n| BohrFrequency {
            n,
            omega: p.single_well_gap(Well::One, n),
        })
        .collect())
}

/// `<N,N| i[H_S, J] |N,N>` for the closed system.
pub fn closed_current_derivative(basis: &FockBasis, p: &ModelParams, filling: usize) -> Result<f64> {
    if filling + 1 > basis.n_max() {
        return Err(Error::invalid(format!(
            "filling {filling} touches the truncation edge (n_max = {})",
            basis.n_max()
        )));
    }
    let h = bose_hubbard_hamiltonian(basis, p);
    let j = current_operator(basis);
    let rate = h.commutator(&j).scale(C64::new(0.0, 1.0));
    let rho = fock_state(basis, filling, filling)?;
    Ok((rho.matrix() * rate.matrix()).trace().re)
}
