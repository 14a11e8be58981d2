//! Dense complex matrix helpers shared by the engine modules.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default eigen tolerance: reconstruction and orthonormality residuals.
pub const TAU_EIG: f64 = 1e-10;
/// Hermiticity tolerance per unit dimension, relative to the largest entry.
pub const TAU_HERM: f64 = 1e-12;
/// Idempotence/selfadjointness tolerance for projections.
pub const TAU_PROJ: f64 = 1e-9;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    m.ncols() == n && (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == Complex64::default()))
}

/// Largest deviation from Hermitian symmetry, `max |m_ij - conj(m_ji)|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Spectral norm of an arbitrary square complex matrix.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if is_diagonal(m) {
        return (0..m.nrows()).fold(0.0, |acc, i| acc.max(m[(i, i)].norm()));
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Spectral norm of a matrix known to be (numerically) Hermitian.
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if is_diagonal(m) {
        return (0..m.nrows()).fold(0.0, |acc, i| acc.max(m[(i, i)].re.abs()));
    }
    let sym = (m + m.adjoint()) * c(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, &l| acc.max(l.abs()))
}

/// `V diag(values) V*` without forming the diagonal matrix.
pub fn conjugate_diagonal(vectors: &CMatrix, values: &[Complex64]) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        for z in scaled.column_mut(j).iter_mut() {
            *z *= v;
        }
    }
    scaled * vectors.adjoint()
}

pub fn diagonal(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}
