//! Orthogonal projections and the index of a pair of projections.

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, TAU_PROJ};
use crate::operator::{eigh, HermitianOperator};

/// Hermitian idempotent matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    entries: CMatrix,
    rank: usize,
}

/// Singular values below this (relative to one) count as zero when taking
/// ranks of compressed projections.
const RANK_TOL: f64 = 1e-8;

impl Projection {
    /// Validates `P^2 = P = P*` within `TAU_PROJ`.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::Validation("projection must be a non-empty square matrix".into()));
        }
        let herm = linalg::hermitian_defect(&entries);
        if herm > TAU_PROJ {
            return Err(Error::Validation(format!(
                "projection is not selfadjoint (defect {herm:e})"
            )));
        }
        let idem = linalg::operator_norm(&(&entries * &entries - &entries));
        if idem > TAU_PROJ {
            return Err(Error::Validation(format!(
                "projection is not idempotent (defect {idem:e})"
            )));
        }
        let sym = (&entries + entries.adjoint()) * c(0.5);
        let rank = (0..n).map(|i| sym[(i, i)].re).sum::<f64>().round() as usize;
        Ok(Self { entries: sym, rank })
    }

    pub(crate) fn from_parts_unchecked(entries: CMatrix, rank: usize) -> Self {
        Self { entries, rank }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            entries: CMatrix::zeros(dim, dim),
            rank: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: linalg::identity(dim),
            rank: dim,
        }
    }

    /// Projection onto the span of the given standard basis vectors.
    pub fn coordinate(dim: usize, axes: &[usize]) -> Result<Self> {
        let mut m = CMatrix::zeros(dim, dim);
        for &k in axes {
            if k >= dim {
                return Err(Error::Validation(format!("axis {k} out of range for dim {dim}")));
            }
            m[(k, k)] = c(1.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// The involution `2P - 1`.
    pub fn involution(&self) -> HermitianOperator {
        let m = &self.entries * c(2.0) - linalg::identity(self.dim());
        HermitianOperator::from_hermitian_unchecked(m)
    }

    /// Orthonormal basis of the range, as columns.
    pub fn range_basis(&self) -> Result<CMatrix> {
        let op = HermitianOperator::from_hermitian_unchecked(self.entries.clone());
        let eig = eigh(&op)?;
        let n = self.dim();
        let cols: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
        let mut basis = CMatrix::zeros(n, cols.len());
        for (j, &k) in cols.iter().enumerate() {
            basis.set_column(j, &eig.vectors.column(k));
        }
        Ok(basis)
    }
}

/// Kernel and cokernel dimensions of `QP : Ran P -> Ran Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    pub kernel: usize,
    pub cokernel: usize,
}

impl PairIndex {
    pub fn index(&self) -> i64 {
        self.kernel as i64 - self.cokernel as i64
    }
}

fn numerical_rank(m: &CMatrix) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL)
        .count()
}

/// `dim ker(QP|Ran P)` and `dim ker(PQ|Ran Q)`.
pub fn pair_kernels(p: &Projection, q: &Projection) -> Result<PairIndex> {
    crate::operator::ensure_same_dim(p.dim(), q.dim())?;
    let bp = p.range_basis()?;
    let bq = q.range_basis()?;
    // QP restricted to Ran P, written in the two range bases.
    let compressed = bq.adjoint() * &bp;
    let rank = numerical_rank(&compressed);
    Ok(PairIndex {
        kernel: bp.ncols() - rank,
        cokernel: bq.ncols() - rank,
    })
}

/// `ind(P, Q)`, the Fredholm index of `QP : Ran P -> Ran Q`.
///
/// Computed from the kernel of the compressed operator and cross-checked
/// against `rank P - rank Q`.
pub fn projection_index(p: &Projection, q: &Projection) -> Result<i64> {
    let k = pair_kernels(p, q)?;
    let by_ranks = p.rank() as i64 - q.rank() as i64;
    if k.index() != by_ranks {
        return Err(Error::Validation(format!(
            "index via kernels ({}) disagrees with rank difference ({by_ranks})",
            k.index()
        )));
    }
    Ok(by_ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_projection, seeded};

    #[test]
    fn rejects_non_idempotent() {
        let m = linalg::identity(2) * c(0.5);
        assert!(Projection::new(m).is_err());
    }

    #[test]
    fn index_examples() {
        let p = Projection::coordinate(4, &[0, 2]).unwrap();
        assert_eq!(projection_index(&p, &p).unwrap(), 0);
        assert_eq!(projection_index(&p, &Projection::zero(4)).unwrap(), 2);
        let k = pair_kernels(&p, &Projection::zero(4)).unwrap();
        assert_eq!(k, PairIndex { kernel: 2, cokernel: 0 });
    }

    #[test]
    fn random_pair_5_3_in_dim_12() {
        let mut rng = seeded(12);
        let p = random_projection(&mut rng, 12, 5);
        let q = random_projection(&mut rng, 12, 3);
        // generic position: QP|Ran P has full rank 3
        let k = pair_kernels(&p, &q).unwrap();
        assert_eq!(k, PairIndex { kernel: 2, cokernel: 0 });
        assert_eq!(projection_index(&p, &q).unwrap(), 2);
    }

    #[test]
    fn orthogonal_ranges_have_full_kernel() {
        let p = Projection::coordinate(3, &[0]).unwrap();
        let q = Projection::coordinate(3, &[1]).unwrap();
        let k = pair_kernels(&p, &q).unwrap();
        assert_eq!(k, PairIndex { kernel: 1, cokernel: 1 });
        assert_eq!(projection_index(&p, &q).unwrap(), 0);
    }

    #[test]
    fn new_recovers_rank() {
        let mut rng = seeded(2);
        let p = random_projection(&mut rng, 6, 4);
        let again = Projection::new(p.entries().clone()).unwrap();
        assert_eq!(again.rank(), 4);
    }
}
