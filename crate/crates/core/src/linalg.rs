//! Small dense/sparse helpers shared by the physics modules.

use nalgebra::{DMatrix, DVector, Dyn, Matrix4, SymmetricEigen};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64 as C64;

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let mut err: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..=j.min(m.nrows().saturating_sub(1)) {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

/// `(m + m^dagger) / 2`.
pub fn symmetrize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> SymmetricEigen<C64, Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

pub fn min_hermitian_eigenvalue(m: &DMatrix<C64>) -> f64 {
    hermitian_eigen(m).eigenvalues.min()
}

pub fn hermiticity_error4(m: &Matrix4<C64>) -> f64 {
    let d = m - m.adjoint();
    d.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn min_eigenvalue4(m: &Matrix4<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.min()
}

/// Symmetric square root of a real symmetric PSD matrix; tiny negative
/// eigenvalues are clamped to zero.
pub fn sqrt_psd(m: &Matrix4<f64>) -> Matrix4<f64> {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let q = eig.eigenvectors;
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    q * d * q.transpose()
}

/// `exp(-i h tau)` for Hermitian `h`.
pub fn unitary_propagator(h: &DMatrix<C64>, tau: f64) -> DMatrix<C64> {
    let eig = hermitian_eigen(h);
    let q = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|e| C64::from_polar(1.0, -e * tau)),
    );
    q * phases * q.adjoint()
}

/// CSR copy of a dense matrix, dropping exact zeros.
pub fn to_csr(m: &DMatrix<C64>) -> CsrMatrix<C64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z != C64::new(0.0, 0.0) {
                coo.push(i, j, z);
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn csr_to_dense(m: &CsrMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.triplet_iter() {
        out[(i, j)] += *v;
    }
    out
}

/// `y = m x` for a CSR matrix and a dense vector.
pub fn csr_matvec(m: &CsrMatrix<C64>, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(m.ncols(), x.len());
    debug_assert_eq!(m.nrows(), y.len());
    let offsets = m.row_offsets();
    let cols = m.col_indices();
    let vals = m.values();
    for (row, out) in y.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for k in offsets[row]..offsets[row + 1] {
            acc += vals[k] * x[cols[k]];
        }
        *out = acc;
    }
}

/// Maximum absolute row sum.
pub fn csr_inf_norm(m: &CsrMatrix<C64>) -> f64 {
    let offsets = m.row_offsets();
    let vals = m.values();
    (0..m.nrows())
        .map(|r| vals[offsets[r]..offsets[r + 1]].iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Truncated-Taylor action of the matrix exponential, `exp(t A) v`.
///
/// The interval is split into substeps with `||A||_inf * tau <= 4`; each
/// substep sums the series until the term norm drops below `1e-17` relative
/// to the partial sum.
pub fn expm_multiply(a: &CsrMatrix<C64>, v: &DVector<C64>, t: f64) -> DVector<C64> {
    const THETA: f64 = 4.0;
    const MAX_TERMS: usize = 200;
    let norm = csr_inf_norm(a) * t.abs();
    if norm == 0.0 {
        return v.clone();
    }
    let substeps = (norm / THETA).ceil().max(1.0) as usize;
    let tau = t / substeps as f64;
    let n = v.len();
    let mut out = v.clone();
    let mut term = DVector::zeros(n);
    let mut next = DVector::zeros(n);
    for _ in 0..substeps {
        term.copy_from(&out);
        for k in 1..=MAX_TERMS {
            csr_matvec(a, term.as_slice(), next.as_mut_slice());
            let scale = C64::new(tau / k as f64, 0.0);
            next.iter_mut().for_each(|z| *z *= scale);
            std::mem::swap(&mut term, &mut next);
            out += &term;
            let tn = term.camax();
            // Past k = THETA the induced norm bound makes later terms shrink.
            if k >= THETA as usize && tn <= 1e-17 * out.camax().max(1e-300) {
                break;
            }
        }
    }
    out
}

/// Column-stacking vectorization.
pub fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_multiply_matches_dense_exponential() {
        let mut m = DMatrix::<C64>::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                m[(i, j)] = C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0);
            }
        }
        let v = DVector::from_fn(6, |i, _| C64::new(1.0 + i as f64, -(i as f64)));
        let t = 0.9;
        let dense = (&m * C64::new(t, 0.0)).exp() * &v;
        let sparse = expm_multiply(&to_csr(&m), &v, t);
        assert!((dense - sparse).camax() < 1e-10);
    }

    #[test]
    fn unitary_propagator_is_unitary() {
        let mut h = DMatrix::<C64>::zeros(4, 4);
        h[(0, 1)] = C64::new(0.3, 0.2);
        h[(1, 0)] = C64::new(0.3, -0.2);
        h[(2, 2)] = C64::new(1.5, 0.0);
        h[(3, 0)] = C64::new(-0.7, 0.0);
        h[(0, 3)] = C64::new(-0.7, 0.0);
        let u = unitary_propagator(&h, 1.3);
        let id = DMatrix::<C64>::identity(4, 4);
        assert!(max_abs(&(u.adjoint() * &u - id)) < 1e-14);
        let reference = (&h * C64::new(0.0, -1.3)).exp();
        assert!(max_abs(&(u - reference)) < 1e-12);
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let g = Matrix4::new(
            1.0, 0.0, 0.0, 0.3, 0.0, 1.0, 0.1, 0.0, 0.0, 0.1, 1.0, 0.0, 0.3, 0.0, 0.0, 1.0,
        );
        let s = sqrt_psd(&g);
        assert!((s * s - g).amax() < 1e-14);
        assert!((s - s.transpose()).amax() < 1e-15);
    }
}
