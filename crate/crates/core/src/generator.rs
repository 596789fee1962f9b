//! GKSL generators of the double-well trap in the weak- and singular-coupling
//! Markovian limits.
//!
//! Schrodinger picture:
//!
//! ```text
//! L[rho] = -i[H_S + H2, rho]
//!        + lambda^2 sum_blocks sum_ij h_ij ( V_j^+ rho V_i - 1/2 {V_i V_j^+, rho} )
//! ```
//!
//! and its trace dual (Heisenberg picture)
//!
//! ```text
//! L*[X] = i[H_S + H2, X]
//!       + lambda^2 sum_blocks sum_ij h_ij ( V_i X V_j^+ - 1/2 {V_i V_j^+, X} ).
//! ```
//!
//! The Kraus operators of a block are the ladder set `(a1, a1^+, a2, a2^+)`,
//! sandwiched between single-well level projectors in the weak-coupling
//! limit. The Kossakowski matrix of the ladder set is obtained from the bath
//! spectrum `c` of the Hermitian couplings `V = (a1 + a1^+, i(a1 - a1^+),
//! a2 + a2^+, i(a2 - a2^+))` by `h = M^T c M^*`, where row `i` of `M` holds
//! the ladder coefficients of `V_i`.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use crate::environment::{CorrelationKind, CorrelationModel, Matrix4c};
use crate::error::{Error, Result};
use crate::fockspace::{annihilator, number_projector, FockBasis, OperatorMatrix, Well, C64};
use crate::linalg::{self, hermiticity_error4, min_eigenvalue4, to_csr};
use crate::model::{bohr_frequencies, bose_hubbard_hamiltonian, ModelParams};

/// Default cap on the Hilbert dimension for dense superoperators.
pub const DENSE_SUPEROPERATOR_LIMIT: usize = 100;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingLimit {
    Weak,
    WeakAsymmetric,
    Singular,
}

/// Which Kraus basis carries a singular-coupling generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularRepresentation {
    /// `(a1, a1^+, a2, a2^+)` with the mapped Kossakowski matrix.
    Ladder,
    /// Hermitian couplings `V_i` with `c = G` directly.
    Hermitian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausLabel {
    pub block: usize,
    /// Component 1..=4 within the block.
    pub component: usize,
    /// Transition energy probed by this operator, absent in the singular limit.
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct KrausSet {
    entries: Vec<(KrausLabel, OperatorMatrix)>,
}

impl KrausSet {
    pub fn entries(&self) -> &[(KrausLabel, OperatorMatrix)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The four operators of one block.
    pub fn block(&self, block: usize) -> &[(KrausLabel, OperatorMatrix)] {
        &self.entries[4 * block..4 * block + 4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlockLabel {
    /// Symmetric trap, transition `n -> n + 1` at `omega` in both wells.
    Bohr { n: usize, omega: f64 },
    /// Asymmetric trap, well-resolved transition energies.
    Asymmetric { n: usize, omega1: f64, omega2: f64 },
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KossakowskiBlock {
    pub label: BlockLabel,
    pub h: Matrix4c,
}

impl KossakowskiBlock {
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue4(&self.h)
    }
}

/// Ladder coefficients of the Hermitian couplings: `V_i = sum_l M_il A_l`.
fn coupling_coefficients() -> Matrix4c {
    Matrix4c::new(
        ONE, ONE, ZERO, ZERO, //
        I, -I, ZERO, ZERO, //
        ZERO, ZERO, ONE, ONE, //
        ZERO, ZERO, I, -I,
    )
}

/// Kossakowski matrix of the ladder set `(a1, a1^+, a2, a2^+)` equivalent to
/// the coefficient matrix `c` of the Hermitian couplings.
pub fn ladder_kossakowski(c: &Matrix4c) -> Matrix4c {
    let m = coupling_coefficients();
    m.transpose() * c * m.conjugate()
}

fn check_block(block: &KossakowskiBlock) -> Result<()> {
    let herm = hermiticity_error4(&block.h);
    if herm > 1e-12 {
        return Err(Error::invalid(format!(
            "Kossakowski block {:?} is not Hermitian ({herm:e})",
            block.label
        )));
    }
    let min_eig = block.min_eigenvalue();
    if min_eig < crate::environment::PSD_TOL {
        return Err(Error::NotPositive {
            what: format!("Kossakowski block {:?}", block.label),
            min_eigenvalue: min_eig,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct SandwichTerm {
    coef: C64,
    /// Kraus index `i` (right factor in the Schrodinger picture).
    i: usize,
    /// Kraus index `j` (its adjoint is the left factor).
    j: usize,
}

/// Sparse data used by the matrix-free application routines.
#[derive(Debug, Clone)]
struct Compiled {
    hamiltonian: CsrMatrix<C64>,
    /// `lambda^2 sum h_ij V_i V_j^+`.
    anti: CsrMatrix<C64>,
    kraus: Vec<CsrMatrix<C64>>,
    kraus_adj: Vec<CsrMatrix<C64>>,
    terms: Vec<SandwichTerm>,
}

#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    basis: FockBasis,
    limit: CouplingLimit,
    lambda: f64,
    hamiltonian: OperatorMatrix,
    lamb_shift: Option<OperatorMatrix>,
    kraus: KrausSet,
    blocks: Vec<KossakowskiBlock>,
    compiled: Compiled,
}

/// Weak-coupling Kraus set of level `n`:
/// `(P_n a1, a1^+ P_n, P_n a2, a2^+ P_n)`.
fn weak_kraus(basis: &FockBasis, n: usize) -> Result<[OperatorMatrix; 4]> {
    let a1 = annihilator(basis, Well::One);
    let a2 = annihilator(basis, Well::Two);
    let p1 = number_projector(basis, Well::One, n)?;
    let p2 = number_projector(basis, Well::Two, n)?;
    Ok([
        &p1 * &a1,
        &a1.adjoint() * &p1,
        &p2 * &a2,
        &a2.adjoint() * &p2,
    ])
}

fn ladder_ops(basis: &FockBasis) -> [OperatorMatrix; 4] {
    let a1 = annihilator(basis, Well::One);
    let a2 = annihilator(basis, Well::Two);
    let a1d = a1.adjoint();
    let a2d = a2.adjoint();
    [a1, a1d, a2, a2d]
}

fn hermitian_couplings(basis: &FockBasis) -> [OperatorMatrix; 4] {
    let [a1, a1d, a2, a2d] = ladder_ops(basis);
    [
        &a1 + &a1d,
        (&a1 - &a1d).scale(I),
        &a2 + &a2d,
        (&a2 - &a2d).scale(I),
    ]
}

/// Weak-coupling block pattern: entries `{1,3}` from the spectrum at `+w`,
/// entries `{2,4}` from the spectrum at `-w`.
fn weak_pattern(plus: &Matrix4c, minus: &Matrix4c) -> Matrix4c {
    let hp = ladder_kossakowski(plus);
    let hm = ladder_kossakowski(minus);
    let mut h = Matrix4c::zeros();
    for &(r, c) in &[(0, 0), (0, 2), (2, 0), (2, 2)] {
        h[(r, c)] = hp[(r, c)];
    }
    for &(r, c) in &[(1, 1), (1, 3), (3, 1), (3, 3)] {
        h[(r, c)] = hm[(r, c)];
    }
    h
}

impl LindbladGenerator {
    /// Weak-coupling generator of the symmetric trap.
    pub fn weak_coupling(
        basis: &FockBasis,
        p: &ModelParams,
        model: &CorrelationModel,
        include_lamb: bool,
    ) -> Result<Self> {
        p.validate()?;
        let ladder = bohr_frequencies(p, basis.n_max())?;
        let mut kraus = KrausSet::default();
        let mut blocks = Vec::with_capacity(ladder.len());
        let mut lamb_coeffs = Vec::new();
        for (b, freq) in ladder.iter().enumerate() {
            let ops = weak_kraus(basis, freq.n)?;
            for (k, op) in ops.into_iter().enumerate() {
                let omega = if k % 2 == 0 { freq.omega } else { -freq.omega };
                kraus.entries.push((
                    KrausLabel {
                        block: b,
                        component: k + 1,
                        omega: Some(omega),
                    },
                    op,
                ));
            }
            let block = KossakowskiBlock {
                label: BlockLabel::Bohr {
                    n: freq.n,
                    omega: freq.omega,
                },
                h: weak_pattern(&model.fourier_c(freq.omega), &model.fourier_c(-freq.omega)),
            };
            check_block(&block)?;
            blocks.push(block);
            if include_lamb {
                lamb_coeffs.push(weak_pattern(
                    &model.hilbert_s(freq.omega),
                    &model.hilbert_s(-freq.omega),
                ));
            }
        }
        Self::assemble(basis, p, CouplingLimit::Weak, kraus, blocks, include_lamb.then_some(lamb_coeffs))
    }

    /// Weak-coupling generator of a trap with unequal well depths: the
    /// rotating-wave average leaves only the diagonal of each block.
    pub fn weak_coupling_asymmetric(
        basis: &FockBasis,
        p: &ModelParams,
        model: &CorrelationModel,
        include_lamb: bool,
    ) -> Result<Self> {
        p.validate()?;
        if p.is_symmetric() {
            return Err(Error::invalid(
                "asymmetric weak-coupling generator requires eps1 != eps2",
            ));
        }
        let diag_of = |f: &dyn Fn(f64) -> Matrix4c, w1: f64, w2: f64| {
            let mut h = Matrix4c::zeros();
            h[(0, 0)] = ladder_kossakowski(&f(w1))[(0, 0)];
            h[(1, 1)] = ladder_kossakowski(&f(-w1))[(1, 1)];
            h[(2, 2)] = ladder_kossakowski(&f(w2))[(2, 2)];
            h[(3, 3)] = ladder_kossakowski(&f(-w2))[(3, 3)];
            h
        };
        let mut kraus = KrausSet::default();
        let mut blocks = Vec::new();
        let mut lamb_coeffs = Vec::new();
        for n in 0..basis.n_max() {
            let w1 = p.single_well_gap(Well::One, n);
            let w2 = p.single_well_gap(Well::Two, n);
            let b = blocks.len();
            for (k, op) in weak_kraus(basis, n)?.into_iter().enumerate() {
                let w = if k < 2 { w1 } else { w2 };
                let omega = if k % 2 == 0 { w } else { -w };
                kraus.entries.push((
                    KrausLabel {
                        block: b,
                        component: k + 1,
                        omega: Some(omega),
                    },
                    op,
                ));
            }
            let block = KossakowskiBlock {
                label: BlockLabel::Asymmetric { n, omega1: w1, omega2: w2 },
                h: diag_of(&|w| model.fourier_c(w), w1, w2),
            };
            check_block(&block)?;
            blocks.push(block);
            if include_lamb {
                lamb_coeffs.push(diag_of(&|w| model.hilbert_s(w), w1, w2));
            }
        }
        Self::assemble(
            basis,
            p,
            CouplingLimit::WeakAsymmetric,
            kraus,
            blocks,
            include_lamb.then_some(lamb_coeffs),
        )
    }

    /// Weak-coupling generator choosing the symmetric or diagonal path from
    /// the well depths.
    pub fn weak_coupling_auto(
        basis: &FockBasis,
        p: &ModelParams,
        model: &CorrelationModel,
        include_lamb: bool,
    ) -> Result<Self> {
        if p.is_symmetric() {
            Self::weak_coupling(basis, p, model, include_lamb)
        } else {
            Self::weak_coupling_asymmetric(basis, p, model, include_lamb)
        }
    }

    /// Singular-coupling generator in the ladder representation.
    pub fn singular_coupling(basis: &FockBasis, p: &ModelParams, model: &CorrelationModel) -> Result<Self> {
        Self::singular_coupling_with(basis, p, model, SingularRepresentation::Ladder)
    }

    pub fn singular_coupling_with(
        basis: &FockBasis,
        p: &ModelParams,
        model: &CorrelationModel,
        repr: SingularRepresentation,
    ) -> Result<Self> {
        p.validate()?;
        if model.kind() != CorrelationKind::Delta {
            return Err(Error::invalid(
                "singular-coupling generator needs a delta-correlated model",
            ));
        }
        let g = *model.strengths();
        let (ops, h) = match repr {
            SingularRepresentation::Ladder => (ladder_ops(basis), ladder_kossakowski(&g)),
            SingularRepresentation::Hermitian => (hermitian_couplings(basis), g),
        };
        let mut kraus = KrausSet::default();
        for (k, op) in ops.into_iter().enumerate() {
            kraus.entries.push((
                KrausLabel {
                    block: 0,
                    component: k + 1,
                    omega: None,
                },
                op,
            ));
        }
        let block = KossakowskiBlock {
            label: BlockLabel::Singular,
            h,
        };
        check_block(&block)?;
        Self::assemble(basis, p, CouplingLimit::Singular, kraus, vec![block], None)
    }

    fn assemble(
        basis: &FockBasis,
        p: &ModelParams,
        limit: CouplingLimit,
        kraus: KrausSet,
        blocks: Vec<KossakowskiBlock>,
        lamb_coeffs: Option<Vec<Matrix4c>>,
    ) -> Result<Self> {
        let lambda2 = p.lambda * p.lambda;
        let hamiltonian = bose_hubbard_hamiltonian(basis, p);
        let quadratic_form = |coeffs: &[Matrix4c]| {
            let mut acc = basis.zero();
            for (b, k) in coeffs.iter().enumerate() {
                let ops = kraus.block(b);
                for i in 0..4 {
                    for j in 0..4 {
                        if k[(i, j)] != ZERO {
                            let vv = &ops[i].1 * &ops[j].1.adjoint();
                            acc = acc + vv.scale(k[(i, j)] * lambda2);
                        }
                    }
                }
            }
            acc
        };
        let lamb_shift = lamb_coeffs.map(|k| quadratic_form(&k));
        let h_total = match &lamb_shift {
            Some(h2) => &hamiltonian + h2,
            None => hamiltonian.clone(),
        };
        let h_blocks: Vec<Matrix4c> = blocks.iter().map(|b| b.h).collect();
        let anti = quadratic_form(&h_blocks);

        let mut terms = Vec::new();
        for (b, block) in blocks.iter().enumerate() {
            for i in 0..4 {
                for j in 0..4 {
                    let h = block.h[(i, j)];
                    if h != ZERO {
                        terms.push(SandwichTerm {
                            coef: h * lambda2,
                            i: 4 * b + i,
                            j: 4 * b + j,
                        });
                    }
                }
            }
        }
        let compiled = Compiled {
            hamiltonian: to_csr(h_total.matrix()),
            anti: to_csr(anti.matrix()),
            kraus: kraus.entries.iter().map(|(_, op)| to_csr(op.matrix())).collect(),
            kraus_adj: kraus
                .entries
                .iter()
                .map(|(_, op)| to_csr(&op.matrix().adjoint()))
                .collect(),
            terms,
        };
        Ok(Self {
            basis: *basis,
            limit,
            lambda: p.lambda,
            hamiltonian,
            lamb_shift,
            kraus,
            blocks,
            compiled,
        })
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn limit(&self) -> CouplingLimit {
        self.limit
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn lamb_shift(&self) -> Option<&OperatorMatrix> {
        self.lamb_shift.as_ref()
    }

    pub fn kraus_set(&self) -> &KrausSet {
        &self.kraus
    }

    pub fn blocks(&self) -> &[KossakowskiBlock] {
        &self.blocks
    }

    fn check_dim(&self, x: &OperatorMatrix) -> Result<()> {
        if x.basis() != self.basis {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// `L[rho]`.
    pub fn apply_schrodinger(&self, rho: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_dim(rho)?;
        let r = rho.matrix();
        let c = &self.compiled;
        let h_r = csr_mul_dense(&c.hamiltonian, r);
        let r_h = dense_mul_csr(r, &c.hamiltonian);
        let mut out = (h_r - r_h) * (-I);
        let a_r = csr_mul_dense(&c.anti, r);
        let r_a = dense_mul_csr(r, &c.anti);
        out -= (a_r + r_a) * C64::new(0.5, 0.0);
        for t in &c.terms {
            let left = csr_mul_dense(&c.kraus_adj[t.j], r);
            out += dense_mul_csr(&left, &c.kraus[t.i]) * t.coef;
        }
        Ok(OperatorMatrix::from_matrix_unchecked(self.basis, out))
    }

    /// `L*[X]`.
    pub fn apply_dual(&self, x: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_dim(x)?;
        let m = x.matrix();
        let c = &self.compiled;
        let h_x = csr_mul_dense(&c.hamiltonian, m);
        let x_h = dense_mul_csr(m, &c.hamiltonian);
        let mut out = (h_x - x_h) * I;
        let a_x = csr_mul_dense(&c.anti, m);
        let x_a = dense_mul_csr(m, &c.anti);
        out -= (a_x + x_a) * C64::new(0.5, 0.0);
        for t in &c.terms {
            let left = csr_mul_dense(&c.kraus[t.i], m);
            out += dense_mul_csr(&left, &c.kraus_adj[t.j]) * t.coef;
        }
        Ok(OperatorMatrix::from_matrix_unchecked(self.basis, out))
    }

    /// Column-stacked sparse superoperator of the chosen picture.
    pub fn sparse_superoperator(&self, picture: Picture) -> CsrMatrix<C64> {
        let d = self.basis.dim();
        let c = &self.compiled;
        let mut coo = CooMatrix::new(d * d, d * d);
        let id = identity_csr(d);
        let (hsign, ..) = match picture {
            Picture::Schrodinger => (-I, ()),
            Picture::Heisenberg => (I, ()),
        };
        // sign * (H X - X H)
        push_sandwich(&mut coo, d, &c.hamiltonian, &id, hsign);
        push_sandwich(&mut coo, d, &id, &c.hamiltonian, -hsign);
        // -1/2 (A X + X A)
        push_sandwich(&mut coo, d, &c.anti, &id, C64::new(-0.5, 0.0));
        push_sandwich(&mut coo, d, &id, &c.anti, C64::new(-0.5, 0.0));
        for t in &c.terms {
            match picture {
                Picture::Schrodinger => push_sandwich(&mut coo, d, &c.kraus_adj[t.j], &c.kraus[t.i], t.coef),
                Picture::Heisenberg => push_sandwich(&mut coo, d, &c.kraus[t.i], &c.kraus_adj[t.j], t.coef),
            }
        }
        CsrMatrix::from(&coo)
    }

    /// Dense `dim^2 x dim^2` matrix of `L` acting on column-stacked states.
    pub fn superoperator_matrix(&self) -> Result<DMatrix<C64>> {
        self.superoperator_matrix_with_limit(DENSE_SUPEROPERATOR_LIMIT)
    }

    pub fn superoperator_matrix_with_limit(&self, max_dim: usize) -> Result<DMatrix<C64>> {
        let dim = self.basis.dim();
        if dim > max_dim {
            return Err(Error::GuardExceeded { dim, limit: max_dim });
        }
        Ok(linalg::csr_to_dense(&self.sparse_superoperator(Picture::Schrodinger)))
    }

    /// Applies the vectorized generator to a column-stacked state.
    pub fn apply_vectorized(&self, sup: &CsrMatrix<C64>, rho: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(rho.len());
        linalg::csr_matvec(sup, rho.as_slice(), out.as_mut_slice());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Schrodinger,
    Heisenberg,
}

fn identity_csr(d: usize) -> CsrMatrix<C64> {
    CsrMatrix::identity(d)
}

/// Adds `coef * vec(A X B)` = `coef * (B^T kron A) vec(X)`.
fn push_sandwich(coo: &mut CooMatrix<C64>, d: usize, a: &CsrMatrix<C64>, b: &CsrMatrix<C64>, coef: C64) {
    for (l, k, bv) in b.triplet_iter() {
        // B^T[k, l] = B[l, k]
        let w = coef * *bv;
        for (r, s, av) in a.triplet_iter() {
            coo.push(k * d + r, l * d + s, w * *av);
        }
    }
}

/// `A X` for sparse `A`, dense `X`.
fn csr_mul_dense(a: &CsrMatrix<C64>, x: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(a.nrows(), x.ncols());
    let offsets = a.row_offsets();
    let cols = a.col_indices();
    let vals = a.values();
    for k in 0..x.ncols() {
        let xc = x.column(k);
        let mut oc = out.column_mut(k);
        for r in 0..a.nrows() {
            let mut acc = ZERO;
            for idx in offsets[r]..offsets[r + 1] {
                acc += vals[idx] * xc[cols[idx]];
            }
            oc[r] = acc;
        }
    }
    out
}

/// `X B` for dense `X`, sparse `B`.
fn dense_mul_csr(x: &DMatrix<C64>, b: &CsrMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(x.nrows(), b.ncols());
    for (j, k, v) in b.triplet_iter() {
        // out[:, k] += X[:, j] * B[j, k]
        let xc = x.column(j);
        let mut oc = out.column_mut(k);
        oc.axpy(*v, &xc, ONE);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::cross_coupled_strengths;
    use crate::fockspace::{creator, fock_state};
    use crate::model::current_operator;

    fn canonical_params() -> ModelParams {
        ModelParams::new(0.01, 1.0, 0.5, 0.5, 0.05).unwrap()
    }

    #[test]
    fn ladder_map_reproduces_linear_relations() {
        let c = Matrix4c::from_fn(|i, j| C64::new((i * 4 + j) as f64 * 0.1, (j as f64 - i as f64) * 0.07));
        let h = ladder_kossakowski(&c);
        let at = |i: usize, j: usize| c[(i - 1, j - 1)];
        let h11 = at(1, 1) + at(2, 2) + I * (at(2, 1) - at(1, 2));
        let h13 = at(1, 3) + at(2, 4) + I * (at(2, 3) - at(1, 4));
        let h22 = at(1, 1) + at(2, 2) + I * (at(1, 2) - at(2, 1));
        let h24 = at(1, 3) + at(2, 4) + I * (at(1, 4) - at(2, 3));
        let h33 = at(3, 3) + at(4, 4) + I * (at(4, 3) - at(3, 4));
        let h44 = at(3, 3) + at(4, 4) + I * (at(3, 4) - at(4, 3));
        for (got, want) in [
            (h[(0, 0)], h11),
            (h[(0, 2)], h13),
            (h[(1, 1)], h22),
            (h[(1, 3)], h24),
            (h[(2, 2)], h33),
            (h[(3, 3)], h44),
        ] {
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn weak_kraus_are_single_ladder_steps() {
        let b = FockBasis::new(4).unwrap();
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 2.0).unwrap();
        let gen = LindbladGenerator::weak_coupling(&b, &canonical_params(), &model, false).unwrap();
        assert_eq!(gen.blocks().len(), 4);
        assert_eq!(gen.kraus_set().len(), 16);
        for (_, op) in gen.kraus_set().entries() {
            for col in 0..b.dim() {
                let nnz = op.matrix().column(col).iter().filter(|z| z.norm() > 0.0).count();
                assert!(nnz <= 1);
            }
        }
        for block in 0..4 {
            let ops = gen.kraus_set().block(block);
            assert_eq!(ops[0].1.adjoint(), ops[1].1);
            assert_eq!(ops[2].1.adjoint(), ops[3].1);
        }
    }

    #[test]
    fn weak_block_sparsity_and_frequencies() {
        let b = FockBasis::new(3).unwrap();
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 2.0).unwrap();
        let gen = LindbladGenerator::weak_coupling(&b, &canonical_params(), &model, false).unwrap();
        for block in gen.blocks() {
            let BlockLabel::Bohr { n, omega } = block.label else {
                panic!("unexpected label")
            };
            assert_eq!(omega, 0.5 + 1.0 + 2.0 * n as f64);
            for (r, c) in [(0, 1), (0, 3), (1, 0), (1, 2), (2, 1), (2, 3), (3, 0), (3, 2)] {
                assert_eq!(block.h[(r, c)], ZERO);
            }
            let hp = ladder_kossakowski(&model.fourier_c(omega));
            let hm = ladder_kossakowski(&model.fourier_c(-omega));
            assert_eq!(block.h[(0, 2)], hp[(0, 2)]);
            assert_eq!(block.h[(1, 3)], hm[(1, 3)]);
            assert!(block.min_eigenvalue() >= -1e-10);
        }
    }

    #[test]
    fn zero_bath_is_pure_commutator() {
        let b = FockBasis::new(3).unwrap();
        let p = canonical_params();
        let model = CorrelationModel::exponential(Matrix4c::zeros(), 2.0).unwrap();
        let gen = LindbladGenerator::weak_coupling(&b, &p, &model, true).unwrap();
        let rho = fock_state(&b, 1, 2).unwrap();
        let mix = (rho.operator() + &creator(&b, Well::One)).scale(C64::new(0.5, 0.0));
        let expected = gen.hamiltonian().commutator(&mix).scale(-I);
        assert_eq!(gen.apply_schrodinger(&mix).unwrap(), expected);
        let delta = CorrelationModel::delta(Matrix4c::zeros()).unwrap();
        let gen = LindbladGenerator::singular_coupling(&b, &p, &delta).unwrap();
        assert_eq!(gen.apply_schrodinger(&mix).unwrap(), expected);
    }

    #[test]
    fn singular_requires_delta_model() {
        let b = FockBasis::new(2).unwrap();
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 2.0).unwrap();
        assert!(LindbladGenerator::singular_coupling(&b, &canonical_params(), &model).is_err());
    }

    #[test]
    fn asymmetric_requires_unequal_depths() {
        let b = FockBasis::new(2).unwrap();
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 2.0).unwrap();
        assert!(LindbladGenerator::weak_coupling_asymmetric(&b, &canonical_params(), &model, false).is_err());
        assert!(matches!(
            LindbladGenerator::weak_coupling(
                &b,
                &ModelParams::new(0.01, 1.0, 0.5, 0.7, 0.05).unwrap(),
                &model,
                false
            ),
            Err(Error::AsymmetricTrap { .. })
        ));
    }

    #[test]
    fn asymmetric_blocks_are_real_nonnegative_diagonals() {
        let b = FockBasis::new(3).unwrap();
        let p = ModelParams::new(0.01, 1.0, 0.5, 0.9, 0.05).unwrap();
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 2.0).unwrap();
        let gen = LindbladGenerator::weak_coupling_asymmetric(&b, &p, &model, false).unwrap();
        for block in gen.blocks() {
            for r in 0..4 {
                for c in 0..4 {
                    if r == c {
                        assert_eq!(block.h[(r, c)].im, 0.0);
                        assert!(block.h[(r, c)].re >= 0.0);
                    } else {
                        assert_eq!(block.h[(r, c)], ZERO);
                    }
                }
            }
        }
    }

    #[test]
    fn singular_representations_agree() {
        let b = FockBasis::new(3).unwrap();
        let mut g = cross_coupled_strengths(0.3, 0.1);
        g[(0, 2)] = C64::new(0.1, 0.2);
        g[(2, 0)] = C64::new(0.1, -0.2);
        let model = CorrelationModel::delta_hermitian(g).unwrap();
        let p = canonical_params();
        let ladder =
            LindbladGenerator::singular_coupling_with(&b, &p, &model, SingularRepresentation::Ladder).unwrap();
        let herm =
            LindbladGenerator::singular_coupling_with(&b, &p, &model, SingularRepresentation::Hermitian).unwrap();
        for (_, op) in herm.kraus_set().entries() {
            assert!(op.hermiticity_error() < 1e-15);
        }
        let s1 = ladder.superoperator_matrix().unwrap();
        let s2 = herm.superoperator_matrix().unwrap();
        assert!(linalg::max_abs(&(s1 - s2)) < 1e-10);
    }

    #[test]
    fn superoperator_matches_matrix_free_application() {
        let b = FockBasis::new(2).unwrap();
        let model = CorrelationModel::exponential(cross_coupled_strengths(0.3, 0.1), 2.0).unwrap();
        let gen = LindbladGenerator::weak_coupling(&b, &canonical_params(), &model, true).unwrap();
        let sup = gen.superoperator_matrix().unwrap();
        let rho = fock_state(&b, 1, 1).unwrap();
        let x = rho.operator() + &current_operator(&b);
        let direct = gen.apply_schrodinger(&x).unwrap();
        let vec = &sup * linalg::vectorize(x.matrix());
        assert!(linalg::max_abs(&(linalg::unvectorize(&vec, b.dim()) - direct.matrix())) < 1e-13);
    }

    #[test]
    fn dense_guard() {
        let b = FockBasis::new(10).unwrap();
        let model = CorrelationModel::delta(cross_coupled_strengths(0.3, 0.1)).unwrap();
        let gen = LindbladGenerator::singular_coupling(&b, &canonical_params(), &model).unwrap();
        assert!(matches!(gen.superoperator_matrix(), Err(Error::GuardExceeded { dim: 121, limit: 100 })));
    }

    #[test]
    fn lamb_shift_is_hermitian() {
        let b = FockBasis::new(3).unwrap();
        let mut g = cross_coupled_strengths(0.3, 0.1);
        g[(1, 3)] = C64::new(0.05, 0.1);
        g[(3, 1)] = C64::new(0.05, -0.1);
        let model = CorrelationModel::exponential(g, 2.0).unwrap();
        let gen = LindbladGenerator::weak_coupling(&b, &canonical_params(), &model, true).unwrap();
        let h2 = gen.lamb_shift().unwrap();
        assert!(h2.hermiticity_error() < 1e-15);
        assert!(h2.max_abs() > 0.0);
    }
}
