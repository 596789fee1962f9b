//! Truncated two-mode bosonic Fock space.
//!
//! Basis states `|n1, n2>` with `0 <= n_i <= n_max` are stored row-major with
//! well 1 as the slow index: `index = n1 * (n_max + 1) + n2`. Operators are
//! dense complex matrices on this space.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

pub type C64 = Complex64;

/// One of the two wells of the trap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Well {
    One,
    Two,
}

impl Well {
    pub fn from_index(well: usize) -> Result<Self> {
        match well {
            1 => Ok(Well::One),
            2 => Ok(Well::Two),
            other => Err(Error::invalid(format!("well must be 1 or 2, got {other}"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Well::One => Well::Two,
            Well::Two => Well::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockBasis {
    n_max: usize,
}

impl FockBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid(format!("n_max must be >= 1, got {n_max}")));
        }
        Ok(Self { n_max })
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of levels kept per well.
    #[inline]
    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.levels() * self.levels()
    }

    /// Flat index of `|n1, n2>`.
    pub fn index(&self, n1: usize, n2: usize) -> Result<usize> {
        if n1 > self.n_max || n2 > self.n_max {
            return Err(Error::invalid(format!(
                "occupation ({n1}, {n2}) outside 0..={}",
                self.n_max
            )));
        }
        Ok(n1 * self.levels() + n2)
    }

    /// Inverse of [`FockBasis::index`].
    #[inline]
    pub fn occupations(&self, index: usize) -> (usize, usize) {
        (index / self.levels(), index % self.levels())
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.dim()).map(move |i| {
            let (n1, n2) = self.occupations(i);
            (i, n1, n2)
        })
    }

    fn occupation(&self, index: usize, well: Well) -> usize {
        let (n1, n2) = self.occupations(index);
        match well {
            Well::One => n1,
            Well::Two => n2,
        }
    }

    /// Whether the basis state sits on the truncation edge of either well.
    pub fn on_edge(&self, index: usize) -> bool {
        let (n1, n2) = self.occupations(index);
        n1 == self.n_max || n2 == self.n_max
    }

    pub fn identity(&self) -> OperatorMatrix {
        OperatorMatrix::from_matrix_unchecked(*self, DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn zero(&self) -> OperatorMatrix {
        OperatorMatrix::from_matrix_unchecked(*self, DMatrix::zeros(self.dim(), self.dim()))
    }

    /// Builds a diagonal operator from a function of the occupations.
    pub fn diagonal<F>(&self, f: F) -> OperatorMatrix
    where
        F: Fn(usize, usize) -> C64,
    {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, n1, n2) in self.states() {
            m[(i, i)] = f(n1, n2);
        }
        OperatorMatrix::from_matrix_unchecked(*self, m)
    }
}

/// Dense operator on a [`FockBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    basis: FockBasis,
    mat: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn from_matrix(basis: FockBasis, mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != basis.dim() || mat.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: mat.nrows().max(mat.ncols()),
            });
        }
        Ok(Self { basis, mat })
    }

    pub(crate) fn from_matrix_unchecked(basis: FockBasis, mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.shape(), (basis.dim(), basis.dim()));
        Self { basis, mat }
    }

    #[inline]
    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.basis, self.mat.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::from_matrix_unchecked(self.basis, &self.mat * z)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self * other + other * self
    }

    /// Largest absolute entry of `A - A^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.mat)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.mat)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs(&(&self.mat - &other.mat))
    }

    pub fn ensure_same_basis(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.mat * v
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&OperatorMatrix> for &OperatorMatrix {
            type Output = OperatorMatrix;
            fn $method(self, rhs: &OperatorMatrix) -> OperatorMatrix {
                assert_eq!(self.basis, rhs.basis, "operators live on different bases");
                OperatorMatrix::from_matrix_unchecked(self.basis, &self.mat $op &rhs.mat)
            }
        }
        impl $tr<OperatorMatrix> for OperatorMatrix {
            type Output = OperatorMatrix;
            fn $method(self, rhs: OperatorMatrix) -> OperatorMatrix {
                &self $op &rhs
            }
        }
        impl $tr<&OperatorMatrix> for OperatorMatrix {
            type Output = OperatorMatrix;
            fn $method(self, rhs: &OperatorMatrix) -> OperatorMatrix {
                &self $op rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<&OperatorMatrix> for C64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale(self)
    }
}

impl Mul<&OperatorMatrix> for f64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale(C64::new(self, 0.0))
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix::from_matrix_unchecked(self.basis, -&self.mat)
    }
}

/// Annihilation operator of the selected well, identity on the other one.
pub fn annihilator(basis: &FockBasis, well: Well) -> OperatorMatrix {
    let mut m = DMatrix::zeros(basis.dim(), basis.dim());
    for (col, n1, n2) in basis.states() {
        let n = basis.occupation(col, well);
        if n == 0 {
            continue;
        }
        let row = match well {
            Well::One => basis.index(n1 - 1, n2),
            Well::Two => basis.index(n1, n2 - 1),
        }
        .expect("lowered state stays in range");
        m[(row, col)] = C64::new((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix::from_matrix_unchecked(*basis, m)
}

pub fn creator(basis: &FockBasis, well: Well) -> OperatorMatrix {
    annihilator(basis, well).adjoint()
}

pub fn number(basis: &FockBasis, well: Well) -> OperatorMatrix {
    basis.diagonal(|n1, n2| {
        let n = match well {
            Well::One => n1,
            Well::Two => n2,
        };
        C64::new(n as f64, 0.0)
    })
}

/// Projector onto occupation `n` of one well (identity on the other well).
pub fn number_projector(basis: &FockBasis, well: Well, n: usize) -> Result<OperatorMatrix> {
    if n > basis.n_max() {
        return Err(Error::invalid(format!(
            "projector level {n} outside 0..={}",
            basis.n_max()
        )));
    }
    Ok(basis.diagonal(|n1, n2| {
        let occ = match well {
            Well::One => n1,
            Well::Two => n2,
        };
        if occ == n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Unit basis vector `|n1, n2>`.
pub fn fock_vector(basis: &FockBasis, n1: usize, n2: usize) -> Result<DVector<C64>> {
    let idx = basis.index(n1, n2)?;
    let mut v = DVector::zeros(basis.dim());
    v[idx] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Pure Fock state `|n1, n2><n1, n2|`.
pub fn fock_state(basis: &FockBasis, n1: usize, n2: usize) -> Result<DensityMatrix> {
    let v = fock_vector(basis, n1, n2)?;
    DensityMatrix::from_pure(basis, &v)
}

fn ginibre<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    use rand_distr::StandardNormal;
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Operator with independent complex Gaussian entries.
pub fn random_operator<R: rand::Rng + ?Sized>(basis: &FockBasis, rng: &mut R) -> OperatorMatrix {
    OperatorMatrix::from_matrix_unchecked(*basis, ginibre(basis.dim(), basis.dim(), rng))
}

/// Random state `A A^+ / tr(A A^+)` with `A` a `dim x rank` Ginibre matrix.
pub fn random_state<R: rand::Rng + ?Sized>(basis: &FockBasis, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 || rank > basis.dim() {
        return Err(Error::invalid(format!("rank must lie in 1..={}", basis.dim())));
    }
    let a = ginibre(basis.dim(), rank, rng);
    let mut m = &a * a.adjoint();
    let tr = m.trace();
    m /= tr;
    DensityMatrix::new(OperatorMatrix::from_matrix_unchecked(*basis, linalg::symmetrize(&m)))
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: OperatorMatrix,
}

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const MIN_EIGENVALUE: f64 = -1e-10;

    /// Validates the state invariants.
    pub fn new(op: OperatorMatrix) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > Self::HERMITICITY_TOL {
            return Err(Error::invalid(format!(
                "density matrix not Hermitian (max |rho - rho^+| = {herm:e})"
            )));
        }
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > Self::TRACE_TOL {
            return Err(Error::invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        let min_eig = linalg::min_hermitian_eigenvalue(op.matrix());
        if min_eig < Self::MIN_EIGENVALUE {
            return Err(Error::NotPositive {
                what: "density matrix".into(),
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { op })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn from_pure(basis: &FockBasis, psi: &DVector<C64>) -> Result<Self> {
        if psi.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: psi.len(),
            });
        }
        let norm2 = psi.norm_squared();
        if norm2 == 0.0 {
            return Err(Error::invalid("zero state vector"));
        }
        let m = psi * psi.adjoint() / C64::new(norm2, 0.0);
        Self::new(OperatorMatrix::from_matrix_unchecked(*basis, m))
    }

    pub fn basis(&self) -> FockBasis {
        self.op.basis()
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    pub fn into_operator(self) -> OperatorMatrix {
        self.op
    }

    pub fn purity(&self) -> f64 {
        (self.op.matrix() * self.op.matrix()).trace().re
    }

    /// Returns the normalized state vector when the state is rank one.
    pub fn pure_vector(&self) -> Option<DVector<C64>> {
        if (self.purity() - 1.0).abs() > 1e-12 {
            return None;
        }
        let eig = linalg::hermitian_eigen(self.matrix());
        let (k, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        Some(eig.eigenvectors.column(k).into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn basis_dimensions() {
        assert_eq!(FockBasis::new(1).unwrap().dim(), 4);
        assert_eq!(FockBasis::new(6).unwrap().dim(), 49);
        assert!(matches!(FockBasis::new(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn index_map_is_bijective() {
        let b = FockBasis::new(4).unwrap();
        let mut seen = vec![false; b.dim()];
        for n1 in 0..=4 {
            for n2 in 0..=4 {
                let i = b.index(n1, n2).unwrap();
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(b.occupations(i), (n1, n2));
            }
        }
        assert!(seen.into_iter().all(|s| s));
        assert!(b.index(5, 0).is_err());
    }

    #[test]
    fn annihilator_ladder() {
        let b = FockBasis::new(2).unwrap();
        let a1 = annihilator(&b, Well::One);
        let out = a1.apply(&fock_vector(&b, 2, 0).unwrap());
        let expected = fock_vector(&b, 1, 0).unwrap() * c(2f64.sqrt());
        assert!((out - expected).norm() < 1e-15);
        for k in 0..=2 {
            let v = a1.apply(&fock_vector(&b, 0, k).unwrap());
            assert_eq!(v.norm(), 0.0);
        }
    }

    #[test]
    fn distinct_modes_commute() {
        let b = FockBasis::new(3).unwrap();
        let a1 = annihilator(&b, Well::One);
        let a2d = creator(&b, Well::Two);
        assert_eq!(a1.commutator(&a2d).max_abs(), 0.0);
        let a2 = annihilator(&b, Well::Two);
        assert_eq!(a1.commutator(&a2).max_abs(), 0.0);
    }

    #[test]
    fn canonical_commutator_with_truncation_edge() {
        let b = FockBasis::new(4).unwrap();
        for well in [Well::One, Well::Two] {
            let a = annihilator(&b, well);
            let comm = a.commutator(&a.adjoint());
            for (i, n1, n2) in b.states() {
                let occ = if well == Well::One { n1 } else { n2 };
                let expected = if occ < b.n_max() { 1.0 } else { -(b.n_max() as f64) };
                assert!((comm.matrix()[(i, i)] - c(expected)).norm() < 1e-12);
            }
            // Off-diagonal entries vanish.
            let mut off = comm.matrix().clone();
            off.fill_diagonal(c(0.0));
            assert!(linalg::max_abs(&off) < 1e-12);
        }
    }

    #[test]
    fn number_is_adag_a() {
        let b = FockBasis::new(5).unwrap();
        for well in [Well::One, Well::Two] {
            let a = annihilator(&b, well);
            let n = number(&b, well);
            assert!((a.adjoint() * &a).max_abs_diff(&n) < 1e-13);
        }
    }

    #[test]
    fn constructors_are_deterministic() {
        let b = FockBasis::new(3).unwrap();
        assert_eq!(annihilator(&b, Well::Two), annihilator(&b, Well::Two));
        assert_eq!(
            number_projector(&b, Well::One, 2).unwrap(),
            number_projector(&b, Well::One, 2).unwrap()
        );
    }

    #[test]
    fn projectors() {
        let b = FockBasis::new(3).unwrap();
        for well in [Well::One, Well::Two] {
            let mut sum = b.zero();
            for n in 0..=3 {
                let p = number_projector(&b, well, n).unwrap();
                assert!((&p * &p).max_abs_diff(&p) < 1e-15);
                assert_eq!(p.hermiticity_error(), 0.0);
                sum = sum + &p;
            }
            assert!(sum.max_abs_diff(&b.identity()) < 1e-15);
        }
        let p2 = number_projector(&b, Well::One, 2).unwrap();
        let v = fock_vector(&b, 2, 1).unwrap();
        assert!((p2.apply(&v) - &v).norm() < 1e-15);
        assert_eq!(p2.apply(&fock_vector(&b, 1, 1).unwrap()).norm(), 0.0);
        let p3 = number_projector(&b, Well::Two, 3).unwrap();
        assert!((p3.trace() - c(4.0)).norm() < 1e-15);
        assert!(number_projector(&b, Well::Two, 4).is_err());
    }

    #[test]
    fn fock_state_properties() {
        let b = FockBasis::new(3).unwrap();
        let rho = fock_state(&b, 2, 2).unwrap();
        assert!((rho.operator().trace() - c(1.0)).norm() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        let rho = fock_state(&b, 2, 1).unwrap();
        let n1 = (rho.matrix() * number(&b, Well::One).matrix()).trace();
        let n2 = (rho.matrix() * number(&b, Well::Two).matrix()).trace();
        assert!((n1 - c(2.0)).norm() < 1e-15);
        assert!((n2 - c(1.0)).norm() < 1e-15);
        assert!(fock_state(&b, 4, 0).is_err());
    }

    #[test]
    fn density_matrix_rejects_invalid() {
        let b = FockBasis::new(1).unwrap();
        let bad_trace = b.identity();
        assert!(DensityMatrix::new(bad_trace).is_err());
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.5);
        m[(1, 1)] = c(-0.5);
        let neg = OperatorMatrix::from_matrix(b, m).unwrap();
        assert!(matches!(DensityMatrix::new(neg), Err(Error::NotPositive { .. })));
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0);
        m[(0, 1)] = C64::new(0.0, 0.1);
        let non_herm = OperatorMatrix::from_matrix(b, m).unwrap();
        assert!(DensityMatrix::new(non_herm).is_err());
    }

    #[test]
    fn random_states_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let b = FockBasis::new(3).unwrap();
        for rank in [1, 4, 16] {
            let rho = random_state(&b, rank, &mut rng).unwrap();
            assert!((rho.operator().trace().re - 1.0).abs() < 1e-14);
            if rank == 1 {
                assert!(rho.pure_vector().is_some());
            }
        }
        assert!(random_state(&b, 0, &mut rng).is_err());
        assert!(random_state(&b, 17, &mut rng).is_err());
    }
}
