//! Winding numbers of unitary loops and the exponential bridge from
//! Hermitian paths.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I, TAU_EIG};
use crate::operator::{apply_complex_function, eigh};
use crate::paths::{check_unitary, concatenate, OperatorPath, SmoothnessHint};
use crate::random::{random_hermitian, random_invertible};
use crate::scalar::NormalizingFunction;

pub const DEFAULT_QUADRATURE_POINTS: usize = 513;

/// Largest distance of either estimate from its rounded value.
pub const WINDING_RESIDUAL: f64 = 0.1;

const DEFAULT_BASEPOINT_TOL: f64 = 1e-9;

type LoopSampler = Arc<dyn Fn(f64) -> Result<CMatrix> + Send + Sync>;

/// A loop `x -> U(x)` of unitaries on `[0, 1]` with `U(0) = U(1)`.
#[derive(Clone)]
pub struct UnitaryLoop {
    dim: usize,
    basepoint_tol: f64,
    sampler: LoopSampler,
}

impl fmt::Debug for UnitaryLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryLoop")
            .field("dim", &self.dim)
            .field("basepoint_tol", &self.basepoint_tol)
            .finish_non_exhaustive()
    }
}

impl UnitaryLoop {
    pub fn new(dim: usize, sampler: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Result<Self> {
        Self::try_new(dim, DEFAULT_BASEPOINT_TOL, move |x| Ok(sampler(x)))
    }

    /// Checks the basepoint condition and unitarity at both ends.
    pub fn try_new(
        dim: usize,
        basepoint_tol: f64,
        sampler: impl Fn(f64) -> Result<CMatrix> + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("loop dimension must be positive".into()));
        }
        let s = Self {
            dim,
            basepoint_tol,
            sampler: Arc::new(sampler),
        };
        let gap = linalg::operator_norm(&(s.sample(0.0)? - s.sample(1.0)?));
        if gap > basepoint_tol {
            return Err(Error::Validation(format!(
                "loop is not closed: |U(1) - U(0)| = {gap:e} exceeds {basepoint_tol:e}"
            )));
        }
        Ok(s)
    }

    pub fn constant(u: CMatrix) -> Result<Self> {
        Self::new(u.nrows(), move |_| u.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basepoint_tol(&self) -> f64 {
        self.basepoint_tol
    }

    pub fn sample(&self, x: f64) -> Result<CMatrix> {
        if !(-1e-12..=1.0 + 1e-12).contains(&x) {
            return Err(Error::Validation(format!("loop parameter {x} outside [0, 1]")));
        }
        let u = (self.sampler)(x.clamp(0.0, 1.0))?;
        if u.nrows() != self.dim || u.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.nrows(),
            });
        }
        check_unitary(&u)?;
        Ok(u)
    }

    pub fn reversed(&self) -> Self {
        let f = self.sampler.clone();
        Self {
            sampler: Arc::new(move |x| f(1.0 - x)),
            ..self.clone()
        }
    }

    /// `self` on `[0, 1/2]` followed by `other` on `[1/2, 1]`. Both loops
    /// must share the basepoint.
    pub fn concatenated(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let (f, g) = (self.sampler.clone(), other.sampler.clone());
        let tol = self.basepoint_tol.max(other.basepoint_tol);
        let joint = linalg::operator_norm(&(f(1.0)? - g(0.0)?));
        if joint > tol {
            return Err(Error::Validation(format!(
                "loops have different basepoints ({joint:e})"
            )));
        }
        Self::try_new(
            self.dim,
            tol,
            move |x| if x <= 0.5 { f(2.0 * x) } else { g(2.0 * x - 1.0) },
        )
    }

    /// Block-diagonal loop `U_1(x) (+) U_2(x)`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let (f, g) = (self.sampler.clone(), other.sampler.clone());
        let (n, m) = (self.dim, other.dim);
        Self::try_new(n + m, self.basepoint_tol.max(other.basepoint_tol), move |x| {
            let mut out = CMatrix::zeros(n + m, n + m);
            out.view_mut((0, 0), (n, n)).copy_from(&f(x)?);
            out.view_mut((n, n), (m, m)).copy_from(&g(x)?);
            Ok(out)
        })
    }
}

/// Both winding estimates and the integer they agree on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingEstimate {
    /// `(1/2 pi i) sum_j Tr(U(x_j)* U'(x_j)) h` with central differences.
    pub trace: f64,
    /// Accumulated `arg det U` along the samples over `2 pi`.
    pub determinant: f64,
    pub value: i64,
}

pub fn winding_estimates(s: &UnitaryLoop, points: usize) -> Result<WindingEstimate> {
    if points < 4 {
        return Err(Error::WindingResolution {
            points,
            reason: "at least 4 points are needed".into(),
        });
    }
    let h = 1.0 / points as f64;
    // periodic grid, x_points = x_0
    let samples = (0..points)
        .map(|j| s.sample(j as f64 * h))
        .collect::<Result<Vec<_>>>()?;
    let at = |j: usize| &samples[j % points];

    let mut trace_sum = Complex64::new(0.0, 0.0);
    for j in 0..points {
        let derivative = (at(j + 1) - at(j + points - 1)) * c(0.5 / h);
        trace_sum += (at(j).adjoint() * derivative).trace();
    }
    let trace = (trace_sum * h / (2.0 * PI * I)).re;

    let dets: Vec<Complex64> = samples.iter().map(|u| u.clone().determinant()).collect();
    let mut phase = 0.0;
    for j in 0..points {
        let step = (dets[(j + 1) % points] * dets[j].conj()).arg();
        if step.abs() >= PI / 2.0 {
            return Err(Error::WindingResolution {
                points,
                reason: format!(
                    "determinant phase jumps by {step:.3} between x = {} and x = {}",
                    j as f64 * h,
                    (j + 1) as f64 * h
                ),
            });
        }
        phase += step;
    }
    let determinant = phase / (2.0 * PI);

    let (a, b) = (trace.round(), determinant.round());
    let residual = (trace - a).abs().max((determinant - b).abs());
    if a != b || residual >= WINDING_RESIDUAL {
        return Err(Error::WindingResolution {
            points,
            reason: format!("trace estimate {trace:.6} and determinant estimate {determinant:.6} disagree"),
        });
    }
    Ok(WindingEstimate {
        trace,
        determinant,
        value: b as i64,
    })
}

/// Winding number `(1/2 pi i) int_0^1 Tr(U^{-1} U') dx`, computed by two
/// independent routes that must round to the same integer.
pub fn winding_number(s: &UnitaryLoop, points: usize) -> Result<i64> {
    winding_estimates(s, points).map(|w| w.value)
}

/// Retries [`winding_estimates`] on doubled grids until it resolves or the
/// grid would exceed `max_points`.
pub fn refine_winding(s: &UnitaryLoop, points: usize, max_points: usize) -> Result<WindingEstimate> {
    let mut m = points;
    loop {
        match winding_estimates(s, m) {
            Err(Error::WindingResolution { .. }) if 2 * m <= max_points => m *= 2,
            other => return other,
        }
    }
}

fn exp_phase(chi: NormalizingFunction) -> impl Fn(f64) -> Complex64 {
    move |l| (I * PI * (chi.eval(l) + 1.0)).exp()
}

/// `x -> exp(pi i (chi(D_x) + 1))` over the path reparametrized onto `[0, 1]`.
///
/// Requires either a closed path or endpoints at which `chi(D)` is an
/// involution, i.e. no eigenvalue inside `(-1/n, 1/n)`.
pub fn exp_loop(p: &OperatorPath, chi: NormalizingFunction) -> Result<UnitaryLoop> {
    let (a, b) = p.interval();
    let (da, db) = (p.at_start()?, p.at_end()?);
    let scale = da.norm().max(db.norm()).max(1.0);
    let closed = da.distance(&db)? <= 1e-9 * scale;
    if !closed {
        for (t, d) in [(a, &da), (b, &db)] {
            let eig = eigh(d)?;
            if let Some(&l) = eig
                .eigenvalues
                .iter()
                .find(|&&l| (chi.eval(l).abs() - 1.0).abs() > TAU_EIG)
            {
                return Err(Error::Precondition {
                    parameter: t,
                    reason: format!(
                        "path is not closed and chi(D) is not an involution here (eigenvalue {l:e} inside (-{r}, {r}))",
                        r = chi.radius()
                    ),
                });
            }
        }
    }
    let path = p.clone();
    UnitaryLoop::try_new(p.dim(), 1e-8, move |x| {
        let d = path.sample(a + x * (b - a))?;
        apply_complex_function(&d, exp_phase(chi))
    })
}

/// Rotation by `angle` in the plane of the first two basis vectors, as the
/// geodesic `s -> exp(s log R)`.
pub fn rotation_geodesic(dim: usize, angle: f64) -> impl Fn(f64) -> CMatrix + Send + Sync + Clone {
    move |s| {
        let mut u = linalg::identity(dim);
        let (sin, cos) = (s * angle).sin_cos();
        u[(0, 0)] = c(cos);
        u[(0, 1)] = c(-sin);
        u[(1, 0)] = c(sin);
        u[(1, 1)] = c(cos);
        u
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorLoop {
    pub path: OperatorPath,
    pub expected_flow: i64,
}

/// `F_t = -cos(pi t) P + (1 - P)` with `P = e_1 e_1*`, followed by the
/// conjugation `U_s F_1 U_s*` along a rotation geodesic in the `e_1, e_2`
/// plane. Since `F_1 = I` the second half is constant, so the result closes
/// only after exponentiation: `exp(pi i (chi(G) + 1))` is `I` at both ends.
pub fn generator_loop(dim: usize) -> Result<GeneratorLoop> {
    if dim < 2 {
        return Err(Error::Validation(format!("generator loop needs dim >= 2, got {dim}")));
    }
    let f = OperatorPath::new(0.0, 1.0, dim, SmoothnessHint::Lipschitz(PI), move |t| {
        let mut m = linalg::identity(dim);
        m[(0, 0)] = c(-(PI * t).cos());
        m
    })?;
    let f1 = f.at_end()?.into_entries();
    let u = rotation_geodesic(dim, PI / 2.0);
    let closure = OperatorPath::new(0.0, 1.0, dim, SmoothnessHint::Analytic, move |s| {
        let us = u(s);
        &us * &f1 * us.adjoint()
    })?;
    Ok(GeneratorLoop {
        path: concatenate(&f, &closure)?,
        expected_flow: 1,
    })
}

/// Random loop by unitary closure: a piecewise-linear path from `A` to `B`
/// (both with every `|eigenvalue| >= 1`) followed by `U_s B U_s*` along the
/// geodesic `U_s = exp(i s H)`.
pub fn random_closure_loop(rng: &mut impl Rng, dim: usize, pieces: usize, scale: f64) -> Result<OperatorPath> {
    let mut knots = vec![random_invertible(rng, dim, 1.0, scale)];
    for _ in 1..pieces.max(1) {
        knots.push(random_hermitian(rng, dim, scale));
    }
    knots.push(random_invertible(rng, dim, 1.0, scale));
    let b = knots.last().cloned().expect("knots are non-empty");
    let open = OperatorPath::piecewise_linear(0.0, 1.0, knots)?;

    let generator = eigh(&random_hermitian(rng, dim, 1.0))?;
    let bm = b.into_entries();
    let closure = OperatorPath::new(0.0, 1.0, dim, SmoothnessHint::Analytic, move |s| {
        let phases: Vec<Complex64> = generator.eigenvalues.iter().map(|&l| (I * s * l).exp()).collect();
        let us = generator.compose(&phases);
        &us * &bm * us.adjoint()
    })?;
    concatenate(&open, &closure)
}

/// `diag(e^{2 pi i k_1 x}, ..., e^{2 pi i k_m x})`.
pub fn diagonal_phase_loop(windings: &[i64]) -> Result<UnitaryLoop> {
    let w = windings.to_vec();
    UnitaryLoop::new(w.len(), move |x| {
        let d: Vec<Complex64> = w.iter().map(|&k| (I * 2.0 * PI * k as f64 * x).exp()).collect();
        linalg::diagonal(&d)
    })
}

/// Convenience for `exp_loop` followed by `winding_number`.
pub fn exp_loop_winding(p: &OperatorPath, chi: NormalizingFunction, points: usize) -> Result<i64> {
    winding_number(&exp_loop(p, chi)?, points)
}
