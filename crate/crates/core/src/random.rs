//! Seeded generators for random Hermitian operators, unitaries, projections
//! and paths. Used by the randomized CLI families and by the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, I};
use crate::operator::{apply_complex_function, HermitianOperator};
use crate::paths::{OperatorPath, SmoothnessHint, UnitaryPath};
use crate::projection::Projection;
use num_complex::Complex64;

pub type EngineRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> EngineRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(gaussian(rng), gaussian(rng)))
}

/// GUE-like Hermitian matrix with spectral radius of order `scale`.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize, scale: f64) -> HermitianOperator {
    let g = complex_gaussian(rng, dim, dim);
    let h = (&g + g.adjoint()) * c(scale / (2.0 * (2.0 * dim as f64).sqrt()));
    HermitianOperator::from_hermitian_unchecked((&h + h.adjoint()) * c(0.5))
}

/// Hermitian matrix whose eigenvalues all have modulus in `[gap, gap + spread]`
/// with random signs.
pub fn random_invertible(rng: &mut impl Rng, dim: usize, gap: f64, spread: f64) -> HermitianOperator {
    let u = random_unitary(rng, dim);
    let values: Vec<Complex64> = (0..dim)
        .map(|_| {
            let m = gap + spread * rng.gen::<f64>();
            c(if rng.gen::<bool>() { m } else { -m })
        })
        .collect();
    let m = crate::linalg::conjugate_diagonal(&u, &values);
    HermitianOperator::from_hermitian_unchecked((&m + m.adjoint()) * c(0.5))
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    let g = complex_gaussian(rng, dim, dim);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        for i in 0..dim {
            u[(i, j)] *= phase;
        }
    }
    u
}

pub fn random_projection(rng: &mut impl Rng, dim: usize, rank: usize) -> Projection {
    assert!(rank <= dim);
    let u = random_unitary(rng, dim);
    let basis = u.columns(0, rank).into_owned();
    let p = &basis * basis.adjoint();
    Projection::from_parts_unchecked((&p + p.adjoint()) * c(0.5), rank)
}

/// Smooth unitary path `t -> W exp(i t H)` on `[a, b]`.
pub fn random_unitary_path(rng: &mut impl Rng, dim: usize, a: f64, b: f64, speed: f64) -> UnitaryPath {
    let w = random_unitary(rng, dim);
    let h = random_hermitian(rng, dim, speed);
    UnitaryPath::new(a, b, dim, move |t| {
        let e = apply_complex_function(&h, |l| (I * (l * t)).exp()).expect("finite exponent");
        &w * e
    })
    .expect("valid interval")
}

/// Piecewise-linear path through `pieces + 1` random knots on `[0, 1]`, with
/// both endpoints invertible (spectral gap at least `gap`).
pub fn random_piecewise_linear(rng: &mut impl Rng, dim: usize, pieces: usize, scale: f64, gap: f64) -> OperatorPath {
    let mut knots = Vec::with_capacity(pieces + 1);
    knots.push(random_invertible(rng, dim, gap, scale));
    for _ in 1..pieces {
        knots.push(random_hermitian(rng, dim, scale));
    }
    knots.push(random_invertible(rng, dim, gap, scale));
    OperatorPath::piecewise_linear(0.0, 1.0, knots).expect("knots share dimension")
}

/// Path of the form `(1-t) A + t B` plus a smooth sinusoidal wobble, with
/// invertible endpoints.
pub fn random_smooth_path(rng: &mut impl Rng, dim: usize, scale: f64, gap: f64) -> OperatorPath {
    let a = random_invertible(rng, dim, gap, scale);
    let b = random_invertible(rng, dim, gap, scale);
    let w = random_hermitian(rng, dim, scale);
    let freq = 1.0 + 2.0 * rng.gen::<f64>();
    OperatorPath::new(0.0, 1.0, dim, SmoothnessHint::Analytic, move |t| {
        let wobble = (std::f64::consts::PI * freq * t).sin() * (std::f64::consts::PI * t).sin();
        a.entries() * c(1.0 - t) + b.entries() * c(t) + w.entries() * c(wobble)
    })
    .expect("valid interval")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, operator_norm};

    #[test]
    fn unitary_is_unitary() {
        let mut rng = seeded(1);
        let u = random_unitary(&mut rng, 7);
        assert!(operator_norm(&(u.adjoint() * &u - identity(7))) < 1e-12);
    }

    #[test]
    fn invertible_has_gap() {
        let mut rng = seeded(2);
        let a = random_invertible(&mut rng, 9, 0.5, 1.0);
        let e = crate::operator::eigh(&a).unwrap();
        assert!(e.min_abs_eigenvalue() > 0.5 - 1e-12);
        assert!(e.spectral_radius() < 1.5 + 1e-12);
    }

    #[test]
    fn seeding_is_reproducible() {
        let a = random_hermitian(&mut seeded(9), 4, 1.0);
        let b = random_hermitian(&mut seeded(9), 4, 1.0);
        assert_eq!(a, b);
    }
}
