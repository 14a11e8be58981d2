//! Discretized families on a line grid that are continuous for the bump
//! topology but not in the gap topology, and the diagnostics contrasting the
//! two.
//!
//! Operators act on `L^2([-L, L])` sampled at `N` cell centres; `-d^2/dx^2` is
//! the three-point stencil with Dirichlet ends.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::operator::{apply_function, ensure_same_dim, resolvent, HermitianOperator, Shift};
use crate::paths::{OperatorPath, ScalarFunction, SmoothnessHint};
use crate::scalar::BumpFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub half_width: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Validation(format!(
                "grid half width must be positive, got {half_width}"
            )));
        }
        if points < 4 {
            return Err(Error::Validation(format!("grid needs at least 4 points, got {points}")));
        }
        Ok(Self { half_width, points })
    }

    /// Grid of the refinement schedule: `N = 16 L`.
    pub fn scheduled(half_width: u32) -> Result<Self> {
        Self::new(f64::from(half_width), 16 * half_width as usize)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// `x_j = -L + (j + 1/2) h`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points)
            .map(|j| -self.half_width + (j as f64 + 0.5) * h)
            .collect()
    }

    /// `1 + Delta_h` as a dense real matrix.
    fn one_plus_laplacian(&self) -> DMatrix<f64> {
        let n = self.points;
        let w = 1.0 / (self.spacing() * self.spacing());
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = 1.0 + 2.0 * w;
            if j + 1 < n {
                m[(j, j + 1)] = -w;
                m[(j + 1, j)] = -w;
            }
        }
        m
    }
}

/// `2 + tanh(x)`, the multiplication profile of the first family.
pub fn tanh_profile(x: f64) -> f64 {
    2.0 + x.tanh()
}

/// `ln f` for the Gaussian weight `f(x) = exp(-x^2)` of the second family.
pub fn gaussian_log_weight(x: f64) -> f64 {
    -x * x
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Even plateau function: `1` at the origin, falling to `0` at `|x| = 0.3`,
/// zero on `[0.3, 1]`, rising back to `1` at `|x| = 2` and constant beyond.
pub fn plateau(x: f64) -> f64 {
    let x = x.abs();
    if x < 0.3 {
        1.0 - smoothstep(x / 0.3)
    } else if x <= 1.0 {
        0.0
    } else {
        smoothstep(x - 1.0)
    }
}

/// `t -> diag(f(t x_j))` on `[0, 1]`.
///
/// `f` must be bounded below by a positive constant and nonconstant; both
/// are probed on a grid four times finer than the family's grid.
pub fn multiplication_family(f: ScalarFunction, grid: Grid) -> Result<OperatorPath> {
    let fine = Grid::new(grid.half_width, 4 * grid.points)?;
    let values: Vec<f64> = fine.nodes().iter().chain(&[0.0]).map(|&x| f(x)).collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 {
        return Err(Error::Validation(format!(
            "multiplication profile must be bounded below by a positive constant (probed minimum {lo})"
        )));
    }
    if hi - lo <= 1e-12 * hi {
        return Err(Error::Validation("multiplication profile must be nonconstant".into()));
    }
    let nodes = grid.nodes();
    OperatorPath::new(0.0, 1.0, grid.points, SmoothnessHint::Unknown, move |t| {
        let d: Vec<_> = nodes.iter().map(|&x| c(f(t * x))).collect();
        linalg::diagonal(&d)
    })
}

/// The pair family `D(t) = [[0, M_psi (1 + Delta_h)], [(1 + Delta_h) M_psi, 0]]`
/// with `psi_t(x) = g(t x)/f(x) + 1`.
///
/// The weight `f` is passed as `ln f`: a Gaussian underflows on wide grids
/// while `1/psi_t` stays perfectly representable.
///
/// Inverse quantities are computed from the structure without forming
/// `D(t)`: `D(t)^{-1}` has off-diagonal blocks `Y_t = (1 + Delta_h)^{-1} M_{1/psi_t}`
/// and its adjoint, so `||D(t)^{-1}|| = ||Y_t||`.
#[derive(Clone)]
pub struct SchrodingerPair {
    log_f: ScalarFunction,
    g: ScalarFunction,
    grid: Grid,
    nodes: Vec<f64>,
    /// `(1 + Delta_h)^{-1}`.
    kernel: Arc<DMatrix<f64>>,
}

impl std::fmt::Debug for SchrodingerPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchrodingerPair")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

pub fn schrodinger_pair_family(log_f: ScalarFunction, g: ScalarFunction, grid: Grid) -> Result<SchrodingerPair> {
    let nodes = grid.nodes();
    if let Some(&x) = nodes.iter().find(|&&x| !log_f(x).is_finite()) {
        return Err(Error::Validation(format!(
            "weight must be strictly positive on the grid; ln f({x}) = {}",
            log_f(x)
        )));
    }
    if (g(0.0) - 1.0).abs() > 1e-12 || g(1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "plateau function needs g(0) = 1 and g(1) = 0, got {} and {}",
            g(0.0),
            g(1.0)
        )));
    }
    let far = [2.0, 2.5, 3.0, 5.0, 10.0, 100.0];
    if let Some(&x) = far
        .iter()
        .find(|&&x| (g(x) - 1.0).abs() > 1e-12 || (g(-x) - 1.0).abs() > 1e-12)
    {
        return Err(Error::Validation(format!(
            "plateau function must equal 1 for |x| >= 2; g({x}) = {}",
            g(x)
        )));
    }
    let probe = Grid::new(3.0, 600)?;
    if let Some(&x) = probe.nodes().iter().find(|&&x| {
        let v = g(x);
        v.is_nan() || v < 0.0
    }) {
        return Err(Error::Validation(format!(
            "plateau function must be nonnegative; g({x}) = {}",
            g(x)
        )));
    }
    let kernel = grid
        .one_plus_laplacian()
        .cholesky()
        .ok_or_else(|| Error::Validation("1 + Delta_h is not positive definite".into()))?
        .inverse();
    Ok(SchrodingerPair {
        log_f,
        g,
        grid,
        nodes,
        kernel: Arc::new(kernel),
    })
}

impl SchrodingerPair {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn psi(&self, t: f64, x: f64) -> f64 {
        (self.g)(t * x) * (-(self.log_f)(x)).exp() + 1.0
    }

    /// `1/psi_t(x)`; an overflowing `g/f` correctly gives zero.
    pub fn inverse_psi(&self, t: f64, x: f64) -> f64 {
        let g = (self.g)(t * x);
        if g == 0.0 {
            1.0
        } else {
            1.0 / (g * (-(self.log_f)(x)).exp() + 1.0)
        }
    }

    fn inverse_weights(&self, t: f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| self.inverse_psi(t, x)).collect()
    }

    /// Eigenvalues of `K W^2 K`, with `K = (1 + Delta_h)^{-1}` and `W` the
    /// given diagonal, i.e. squared singular values of `K W`, descending.
    fn squared_singular_values(&self, w: &[f64]) -> Vec<f64> {
        let mut kw = (*self.kernel).clone();
        for (j, &wj) in w.iter().enumerate() {
            kw.column_mut(j).scale_mut(wj);
        }
        let gram = &kw * kw.transpose();
        let mut ev: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|&v| v.max(0.0)).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// `||D(t)^{-1}||`.
    pub fn inverse_norm(&self, t: f64) -> f64 {
        self.squared_singular_values(&self.inverse_weights(t))[0].sqrt()
    }

    /// `||D(t)^{-1} - D(s)^{-1}||`.
    pub fn inverse_distance(&self, t: f64, s: f64) -> f64 {
        let w: Vec<f64> = self
            .inverse_weights(t)
            .iter()
            .zip(self.inverse_weights(s))
            .map(|(a, b)| a - b)
            .collect();
        self.squared_singular_values(&w)[0].sqrt()
    }

    /// Singular values of `D(t)^{-1}`, descending; each value of `Y_t`
    /// appears twice in the full inverse.
    pub fn inverse_singular_values(&self, t: f64) -> Vec<f64> {
        let half: Vec<f64> = self
            .squared_singular_values(&self.inverse_weights(t))
            .into_iter()
            .map(f64::sqrt)
            .collect();
        half.iter().flat_map(|&s| [s, s]).collect()
    }

    /// `D(t)` as a `2N x 2N` matrix. Fails when `psi_t` overflows, which
    /// happens for Gaussian weights once `L` exceeds about 26.
    pub fn sample(&self, t: f64) -> Result<HermitianOperator> {
        let n = self.grid.points;
        let psi: Vec<f64> = self.nodes.iter().map(|&x| self.psi(t, x)).collect();
        if let Some((j, _)) = psi.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(Error::Validation(format!(
                "psi_{t} overflows at x = {}; use the structured inverse methods",
                self.nodes[j]
            )));
        }
        let lap = self.grid.one_plus_laplacian();
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let a = psi[i] * lap[(i, j)];
                if a != 0.0 {
                    m[(i, n + j)] = c(a);
                    m[(n + j, i)] = c(a);
                }
            }
        }
        HermitianOperator::new(m)
    }

    pub fn path(&self) -> Result<OperatorPath> {
        let me = self.clone();
        OperatorPath::try_new(0.0, 1.0, 2 * self.grid.points, SmoothnessHint::Unknown, move |t| {
            me.sample(t).map(HermitianOperator::into_entries)
        })
    }
}

/// Unit-normalized real Gaussian packets of width 1 with centres evenly
/// spread over `[-L/2, L/2]`.
pub fn gaussian_test_vectors(grid: Grid, count: usize) -> Vec<CVector> {
    let nodes = grid.nodes();
    (0..count)
        .map(|k| {
            let centre = if count == 1 {
                0.0
            } else {
                grid.half_width * (k as f64 / (count - 1) as f64 - 0.5)
            };
            let v = CVector::from_iterator(
                nodes.len(),
                nodes.iter().map(|&x| c((-(x - centre).powi(2) / 2.0).exp())),
            );
            let norm = v.norm();
            v / c(norm)
        })
        .collect()
}

/// Moduli of one probe parameter against the base parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeModuli {
    pub t: f64,
    pub gap: f64,
    pub strong: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyReport {
    pub t0: f64,
    /// `max_t ||(D_t + i)^{-1} - (D_t0 + i)^{-1}||`.
    pub gap_modulus: f64,
    /// `max_{t, v} ||((D_t +- i)^{-1} - (D_t0 +- i)^{-1}) v||`.
    pub strong_modulus: f64,
    /// `max_t ||phi_n(D_t) - phi_n(D_t0)||`.
    pub phi_modulus: f64,
    pub n_used: u32,
    pub probes: Vec<ProbeModuli>,
}

/// Compares `D_t` at each probe parameter with `D_t0` in the gap, strong
/// resolvent and bump distances. Reports evidence only.
pub fn topology_diagnostic(
    p: &OperatorPath,
    n: u32,
    t0: f64,
    probes: &[f64],
    test_vectors: &[CVector],
) -> Result<TopologyReport> {
    if n == 0 {
        return Err(Error::Validation("bump scale must be positive".into()));
    }
    for v in test_vectors {
        ensure_same_dim(p.dim(), v.len())?;
    }
    let phi = BumpFunction::new(n);
    let base = p.sample(t0)?;
    let base_plus = resolvent(&base, Shift::Plus)?;
    let base_minus = resolvent(&base, Shift::Minus)?;
    let base_phi = apply_function(&base, |x| phi.eval(x))?;

    let mut rows = Vec::with_capacity(probes.len());
    for &t in probes {
        let d = p.sample(t)?;
        let dp = resolvent(&d, Shift::Plus)? - &base_plus;
        let dm = resolvent(&d, Shift::Minus)? - &base_minus;
        let gap = linalg::operator_norm(&dp);
        let strong = test_vectors
            .iter()
            .map(|v| (&dp * v).norm().max((&dm * v).norm()))
            .fold(0.0, f64::max);
        let phi_d = apply_function(&d, |x| phi.eval(x))?.distance(&base_phi)?;
        rows.push(ProbeModuli {
            t,
            gap,
            strong,
            phi: phi_d,
        });
    }
    let max = |f: fn(&ProbeModuli) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(TopologyReport {
        t0,
        gap_modulus: max(|r| r.gap),
        strong_modulus: max(|r| r.strong),
        phi_modulus: max(|r| r.phi),
        n_used: n,
        probes: rows,
    })
}

/// Descending singular values of `phi_n(A)`.
pub fn compactness_proxy(a: &HermitianOperator, n: u32) -> Result<Vec<f64>> {
    let phi = BumpFunction::new(n);
    let m = apply_function(a, |x| phi.eval(x))?;
    // phi_n(A) is positive semidefinite, so its singular values are its eigenvalues
    let mut values: Vec<f64> = if m.is_diagonal() {
        (0..m.dim()).map(|i| m.entries()[(i, i)].re.abs()).collect()
    } else {
        crate::operator::eigh(&m)?.eigenvalues.iter().map(|v| v.abs()).collect()
    };
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_family(l: u32) -> OperatorPath {
        multiplication_family(Arc::new(tanh_profile), Grid::scheduled(l).unwrap()).unwrap()
    }

    #[test]
    fn grid_nodes() {
        let g = Grid::new(1.0, 4).unwrap();
        assert_eq!(g.nodes(), vec![-0.75, -0.25, 0.25, 0.75]);
        assert!(Grid::new(1.0, 3).is_err());
        assert!(Grid::new(0.0, 8).is_err());
    }

    #[test]
    fn plateau_values() {
        assert_eq!(plateau(0.0), 1.0);
        assert_eq!(plateau(1.0), 0.0);
        assert_eq!(plateau(0.5), 0.0);
        assert_eq!(plateau(2.0), 1.0);
        assert_eq!(plateau(-7.0), 1.0);
        assert!(plateau(0.1) > 0.0 && plateau(0.1) < 1.0);
    }

    #[test]
    fn multiplication_rejects_bad_profiles() {
        let g = Grid::new(5.0, 16).unwrap();
        assert!(multiplication_family(Arc::new(|_| 2.0), g).is_err());
        assert!(multiplication_family(Arc::new(|x: f64| x.tanh()), g).is_err());
    }

    #[test]
    fn constant_path_has_zero_moduli() {
        let d = HermitianOperator::from_real_diagonal(&[2.0; 8]).unwrap();
        let p = OperatorPath::constant(d);
        let vs = gaussian_test_vectors(Grid::new(4.0, 8).unwrap(), 3);
        let r = topology_diagnostic(&p, 1, 0.0, &[0.1, 0.5], &vs).unwrap();
        assert_eq!((r.gap_modulus, r.strong_modulus, r.phi_modulus), (0.0, 0.0, 0.0));
    }

    #[test]
    fn tanh_family_contrast() {
        let p = tanh_family(10);
        let vs = gaussian_test_vectors(Grid::scheduled(10).unwrap(), 8);
        let r = topology_diagnostic(&p, 1, 0.0, &[0.1], &vs).unwrap();
        assert_eq!(r.phi_modulus, 0.0);
        assert!(r.gap_modulus > 0.05);
        assert!(r.strong_modulus <= r.gap_modulus + 1e-10);
    }

    #[test]
    fn gap_modulus_matches_scalar_sup() {
        let grid = Grid::scheduled(10).unwrap();
        let p = tanh_family(10);
        let r = topology_diagnostic(&p, 1, 0.0, &[0.1], &[]).unwrap();
        let r0 = num_complex::Complex64::new(2.0, 1.0).inv();
        let sup = grid
            .nodes()
            .iter()
            .map(|&x| (num_complex::Complex64::new(tanh_profile(0.1 * x), 1.0).inv() - r0).norm())
            .fold(0.0, f64::max);
        assert!((r.gap_modulus - sup).abs() < 1e-14);
    }

    #[test]
    fn test_vectors_are_unit() {
        for v in gaussian_test_vectors(Grid::scheduled(10).unwrap(), 8) {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn compactness_profiles() {
        let far = HermitianOperator::from_real_diagonal(&[2.0, -3.0, 1.5]).unwrap();
        assert_eq!(compactness_proxy(&far, 1).unwrap(), vec![0.0; 3]);
        let zero = HermitianOperator::zeros(4);
        assert_eq!(compactness_proxy(&zero, 2).unwrap(), vec![1.0; 4]);
        let d = tanh_family(10).sample(0.3).unwrap();
        assert!(compactness_proxy(&d, 1).unwrap().iter().all(|&s| s == 0.0));
    }

    fn standard_pair(l: f64, n: usize) -> SchrodingerPair {
        schrodinger_pair_family(
            Arc::new(gaussian_log_weight),
            Arc::new(plateau),
            Grid::new(l, n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn pair_rejects_bad_inputs() {
        let grid = Grid::new(3.0, 16).unwrap();
        assert!(schrodinger_pair_family(Arc::new(|x: f64| x.sin().ln()), Arc::new(plateau), grid).is_err());
        assert!(schrodinger_pair_family(Arc::new(gaussian_log_weight), Arc::new(|_| 1.0), grid).is_err());
    }

    #[test]
    fn psi_at_plateau_zero() {
        let s = standard_pair(4.0, 32);
        assert_eq!(s.psi(0.5, 2.0), 1.0);
        assert_eq!(s.inverse_psi(0.5, 2.0), 1.0);
        assert!((s.psi(0.0, 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn structured_inverse_matches_dense() {
        let s = standard_pair(3.0, 24);
        for t in [0.0, 0.4, 1.0] {
            let d = s.sample(t).unwrap();
            let inv = d.entries().clone().try_inverse().unwrap();
            let dense = linalg::operator_norm(&inv);
            assert!((dense - s.inverse_norm(t)).abs() < 1e-9 * dense);
            let sv = nalgebra::SVD::new(inv, false, false).singular_values;
            let structured = s.inverse_singular_values(t);
            let mut sorted: Vec<f64> = sv.iter().copied().collect();
            sorted.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in sorted.iter().zip(&structured) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        let d0 = s.sample(0.0).unwrap().entries().clone().try_inverse().unwrap();
        let d1 = s.sample(0.7).unwrap().entries().clone().try_inverse().unwrap();
        let dense = linalg::operator_norm(&(d1 - d0));
        assert!((dense - s.inverse_distance(0.7, 0.0)).abs() < 1e-9);
    }

    #[test]
    fn pair_samples_are_hermitian_and_overflow_is_reported() {
        let s = standard_pair(3.0, 24);
        let d = s.path().unwrap().sample(0.25).unwrap();
        assert_eq!(linalg::hermitian_defect(d.entries()), 0.0);
        let huge = standard_pair(40.0, 64);
        assert!(huge.sample(0.1).is_err());
        assert!(huge.inverse_norm(0.1).is_finite());
    }

    #[test]
    fn inverse_singular_values_decay() {
        let s = standard_pair(10.0, 160);
        let sv = s.inverse_singular_values(0.0);
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        assert!(sv[sv.len() - 1] < 1e-3 * sv[0]);
    }
}
