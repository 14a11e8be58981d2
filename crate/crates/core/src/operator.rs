//! Finite Hermitian operators, their spectral decomposition and the
//! functional calculus built on it.

use std::fmt;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, I, TAU_HERM};
use crate::projection::Projection;
use crate::scalar::{retraction, BumpFunction, NormalizingFunction};

/// A Hermitian matrix standing in for a truncated selfadjoint operator.
///
/// The stored entries are exactly Hermitian: construction checks the input
/// against `TAU_HERM * dim` (relative to the largest entry) and then
/// symmetrizes.
#[derive(Clone, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
    diagonal: bool,
    label: Option<String>,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator")
            .field("dim", &self.dim())
            .field("label", &self.label)
            .field("entries", &self.entries)
            .finish()
    }
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 {
            return Err(Error::Validation("operator dimension must be positive".into()));
        }
        if entries.ncols() != n {
            return Err(Error::Validation(format!(
                "operator must be square, got {}x{}",
                n,
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("operator has non-finite entries".into()));
        }
        let scale = linalg::max_abs(&entries);
        let defect = linalg::hermitian_defect(&entries);
        let tol = TAU_HERM * n as f64 * scale.max(f64::MIN_POSITIVE);
        if defect > tol {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian: defect {defect:e} exceeds {tol:e}"
            )));
        }
        let entries = if defect == 0.0 {
            entries
        } else {
            (&entries + entries.adjoint()) * c(0.5)
        };
        Ok(Self::from_hermitian_unchecked(entries))
    }

    /// Wraps entries the caller guarantees to be exactly Hermitian.
    pub(crate) fn from_hermitian_unchecked(entries: CMatrix) -> Self {
        let diagonal = linalg::is_diagonal(&entries);
        Self {
            entries,
            diagonal,
            label: None,
        }
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self> {
        let d: Vec<Complex64> = values.iter().map(|&v| c(v)).collect();
        Self::new(linalg::diagonal(&d))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("rows must form a square matrix".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| c(rows[i][j])))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_hermitian_unchecked(linalg::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_hermitian_unchecked(CMatrix::zeros(dim, dim))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        linalg::hermitian_norm(&self.entries)
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        ensure_same_dim(self.dim(), other.dim())?;
        Ok(Self::from_hermitian_unchecked(
            &self.entries * c(alpha) + &other.entries * c(beta),
        ))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self::from_hermitian_unchecked(&self.entries * c(alpha))
    }

    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.entries.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        Self::from_hermitian_unchecked(m)
    }

    /// `U A U*` for a unitary `u`; the result is re-symmetrized.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        ensure_same_dim(self.dim(), u.nrows())?;
        let m = u * &self.entries * u.adjoint();
        Ok(Self::from_hermitian_unchecked((&m + m.adjoint()) * c(0.5)))
    }

    /// Operator-norm distance to `other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        ensure_same_dim(self.dim(), other.dim())?;
        Ok(linalg::hermitian_norm(&(&self.entries - &other.entries)))
    }
}

pub(crate) fn ensure_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Ascending eigenvalues with orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(Lambda) V*` for a complex-valued spectral function.
    pub fn compose(&self, values: &[Complex64]) -> CMatrix {
        linalg::conjugate_diagonal(&self.vectors, values)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let vals: Vec<Complex64> = self.eigenvalues.iter().map(|&l| c(l)).collect();
        self.compose(&vals)
    }

    /// `||V Lambda V* - A|| / ||A||` (absolute when `A = 0`).
    pub fn reconstruction_residual(&self, a: &HermitianOperator) -> f64 {
        let diff = self.reconstruct() - a.entries();
        let scale = a.norm();
        let r = linalg::operator_norm(&diff);
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    }

    /// `||V* V - I||`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors - linalg::identity(self.dim());
        linalg::operator_norm(&g)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |acc, l| acc.min(l.abs()))
    }
}

/// Dense Hermitian eigendecomposition.
///
/// Eigenvalues come back ascending; each eigenvector column is rotated so its
/// first entry of largest magnitude is real and positive.
pub fn eigh(a: &HermitianOperator) -> Result<EigenDecomposition> {
    let n = a.dim();
    if a.is_diagonal() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a.entries[(i, i)].re.total_cmp(&a.entries[(j, j)].re));
        let eigenvalues = order.iter().map(|&i| a.entries[(i, i)].re).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (col, &row) in order.iter().enumerate() {
            vectors[(row, col)] = c(1.0);
        }
        return Ok(EigenDecomposition { eigenvalues, vectors });
    }

    let max_iterations = 1000 * n.max(4);
    let eig =
        SymmetricEigen::try_new(a.entries.clone(), f64::EPSILON, max_iterations).ok_or(Error::NonConvergence {
            dim: n,
            iterations: max_iterations,
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut v: CVector = eig.eigenvectors.column(src).into_owned();
        canonicalize_phase(&mut v);
        vectors.set_column(col, &v);
    }
    Ok(EigenDecomposition { eigenvalues, vectors })
}

fn canonicalize_phase(v: &mut CVector) {
    let mut pivot = 0;
    let mut best = -1.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best {
            best = m;
            pivot = i;
        }
    }
    if best > 0.0 {
        let phase = v[pivot].conj() / best;
        for z in v.iter_mut() {
            *z *= phase;
        }
        v[pivot] = c(v[pivot].re);
    }
}

fn spectral_values(eigenvalues: &[f64], f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    eigenvalues
        .iter()
        .map(|&l| {
            let v = f(l);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Domain { eigenvalue: l })
            }
        })
        .collect()
}

/// Functional calculus `f(A) = V f(Lambda) V*` for a real function.
pub fn apply_function(a: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    if a.is_diagonal() {
        let n = a.dim();
        let diag: Vec<f64> = (0..n).map(|i| a.entries[(i, i)].re).collect();
        let vals = spectral_values(&diag, f)?;
        let d: Vec<Complex64> = vals.into_iter().map(c).collect();
        return Ok(HermitianOperator::from_hermitian_unchecked(linalg::diagonal(&d)));
    }
    let eig = eigh(a)?;
    apply_function_with(&eig, f)
}

/// Functional calculus reusing an existing decomposition.
pub fn apply_function_with(eig: &EigenDecomposition, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    let vals = spectral_values(&eig.eigenvalues, f)?;
    let d: Vec<Complex64> = vals.into_iter().map(c).collect();
    let m = eig.compose(&d);
    Ok(HermitianOperator::from_hermitian_unchecked((&m + m.adjoint()) * c(0.5)))
}

/// Functional calculus for a complex-valued function; the result is normal
/// but in general not Hermitian.
pub fn apply_complex_function(a: &HermitianOperator, f: impl Fn(f64) -> Complex64) -> Result<CMatrix> {
    let check = |l: f64| {
        let z = f(l);
        if z.re.is_finite() && z.im.is_finite() {
            Ok(z)
        } else {
            Err(Error::Domain { eigenvalue: l })
        }
    };
    if a.is_diagonal() {
        let vals = (0..a.dim())
            .map(|i| check(a.entries[(i, i)].re))
            .collect::<Result<Vec<_>>>()?;
        return Ok(linalg::diagonal(&vals));
    }
    let eig = eigh(a)?;
    let vals = eig.eigenvalues.iter().map(|&l| check(l)).collect::<Result<Vec<_>>>()?;
    Ok(eig.compose(&vals))
}

/// Bounded transform `A (1 + A^2)^{-1/2}`, a strict contraction.
pub fn bounded_transform(a: &HermitianOperator) -> Result<HermitianOperator> {
    apply_function(a, |l| l / (1.0 + l * l).sqrt())
}

/// Sign of the imaginary shift in a resolvent `(A + sign i)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    Plus,
    Minus,
}

impl Shift {
    fn unit(self) -> Complex64 {
        match self {
            Shift::Plus => I,
            Shift::Minus => -I,
        }
    }
}

/// `(A + sign i)^{-1}`; always exists and has norm at most one.
pub fn resolvent(a: &HermitianOperator, sign: Shift) -> Result<CMatrix> {
    let s = sign.unit();
    apply_complex_function(a, |l| (c(l) + s).inv())
}

/// Closed interval `[lo, hi]` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Validation(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

/// Which interval ends the guard band is enforced at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GuardedEnds {
    Both,
    UpperOnly,
}

/// Indices of eigenvalues inside `interval`, failing when one sits inside the
/// guard band around a guarded end. The band is capped at a quarter of the
/// interval width so that the midpoint is always admissible.
pub(crate) fn window_indices(
    eigenvalues: &[f64],
    interval: Interval,
    guard: f64,
    ends: GuardedEnds,
) -> Result<Vec<usize>> {
    let band = guard.max(0.0).min((interval.hi - interval.lo) / 4.0);
    let mut inside = Vec::new();
    for (k, &l) in eigenvalues.iter().enumerate() {
        if ends == GuardedEnds::Both && (l - interval.lo).abs() < band {
            return Err(Error::GapViolation {
                eigenvalue: l,
                boundary: interval.lo,
                guard: band,
            });
        }
        if (l - interval.hi).abs() < band {
            return Err(Error::GapViolation {
                eigenvalue: l,
                boundary: interval.hi,
                guard: band,
            });
        }
        if l >= interval.lo && l <= interval.hi {
            inside.push(k);
        }
    }
    Ok(inside)
}

pub(crate) fn projection_from_columns(eig: &EigenDecomposition, cols: &[usize]) -> Projection {
    let n = eig.dim();
    let mut basis = CMatrix::zeros(n, cols.len());
    for (j, &k) in cols.iter().enumerate() {
        basis.set_column(j, &eig.vectors.column(k));
    }
    let p = &basis * basis.adjoint();
    Projection::from_parts_unchecked((&p + p.adjoint()) * c(0.5), cols.len())
}

/// Spectral projection `1_[lo, hi](A)`.
///
/// Eigenvalues within `guard` of either end are rejected with
/// [`Error::GapViolation`] rather than being assigned to a side.
pub fn spectral_projection(a: &HermitianOperator, interval: Interval, guard: f64) -> Result<Projection> {
    let eig = eigh(a)?;
    let cols = window_indices(&eig.eigenvalues, interval, guard, GuardedEnds::Both)?;
    Ok(projection_from_columns(&eig, &cols))
}

/// `||phi_n(A) - phi_n(B)||`, the distance defining the basic neighbourhoods
/// of the `S_n` topology.
pub fn phi_n_distance(a: &HermitianOperator, b: &HermitianOperator, n: u32) -> Result<f64> {
    ensure_same_dim(a.dim(), b.dim())?;
    let phi = BumpFunction::new(n);
    let fa = apply_function(a, |x| phi.eval(x))?;
    let fb = apply_function(b, |x| phi.eval(x))?;
    fa.distance(&fb)
}

/// Applies `x -> (1-t) x + t chi(x)`; at `t = 1` the result is a contraction
/// with `chi(A)^2 - 1` supported on the spectrum near zero.
pub fn retract_to_cycle(a: &HermitianOperator, t: f64, chi: NormalizingFunction) -> Result<HermitianOperator> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Validation(format!("retraction parameter {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    apply_function(a, retraction(chi, t))
}
