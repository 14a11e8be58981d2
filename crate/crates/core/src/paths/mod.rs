//! Parametrized operator families and the path algebra used by the
//! spectral-flow properties.
//!
//! Paths are samplers rather than sample arrays: the flow algorithm and the
//! oracles choose their own resolution.

mod file;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, TAU_EIG};
use crate::operator::{apply_function, eigh, ensure_same_dim, HermitianOperator};

pub use file::{parse_path_file, write_path_file, PathFile};

/// Relative tolerance for joining paths end to start.
pub const TAU_CAT: f64 = 1e-9;

/// Sampling points used to bound the spectral range before probing a
/// pushforward function.
const RANGE_SAMPLES: usize = 33;
/// Grid size of the monotonicity probe for pushforward functions.
const MONOTONE_PROBES: usize = 1024;

type Sampler = Arc<dyn Fn(f64) -> Result<CMatrix> + Send + Sync>;
type UnitarySampler = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;
type RectSampler = Arc<dyn Fn(f64, f64) -> CMatrix + Send + Sync>;

/// What is known about the regularity of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothnessHint {
    Analytic,
    /// `||D(t) - D(s)|| <= L |t - s|`.
    Lipschitz(f64),
    Unknown,
}

impl SmoothnessHint {
    fn weakest(self, other: Self) -> Self {
        match (self, other) {
            (SmoothnessHint::Lipschitz(a), SmoothnessHint::Lipschitz(b)) => SmoothnessHint::Lipschitz(a.max(b)),
            (SmoothnessHint::Analytic, SmoothnessHint::Analytic) => SmoothnessHint::Analytic,
            _ => SmoothnessHint::Unknown,
        }
    }

    fn rescaled(self, factor: f64) -> Self {
        match self {
            SmoothnessHint::Lipschitz(l) => SmoothnessHint::Lipschitz(l * factor),
            other => other,
        }
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(Error::Validation(format!("invalid parameter interval [{a}, {b}]")))
    }
}

/// A path `t -> D_t` of Hermitian operators over `[start, end]`.
#[derive(Clone)]
pub struct OperatorPath {
    start: f64,
    end: f64,
    dim: usize,
    hint: SmoothnessHint,
    sampler: Sampler,
}

impl fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorPath")
            .field("interval", &(self.start, self.end))
            .field("dim", &self.dim)
            .field("hint", &self.hint)
            .finish_non_exhaustive()
    }
}

impl OperatorPath {
    pub fn new(
        start: f64,
        end: f64,
        dim: usize,
        hint: SmoothnessHint,
        sampler: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::try_new(start, end, dim, hint, move |t| Ok(sampler(t)))
    }

    /// Like [`OperatorPath::new`] with a sampler that may fail.
    pub fn try_new(
        start: f64,
        end: f64,
        dim: usize,
        hint: SmoothnessHint,
        sampler: impl Fn(f64) -> Result<CMatrix> + Send + Sync + 'static,
    ) -> Result<Self> {
        check_interval(start, end)?;
        if dim == 0 {
            return Err(Error::Validation("path dimension must be positive".into()));
        }
        Ok(Self {
            start,
            end,
            dim,
            hint,
            sampler: Arc::new(sampler),
        })
    }

    pub fn constant(op: HermitianOperator) -> Self {
        let dim = op.dim();
        let m = op.into_entries();
        Self::new(0.0, 1.0, dim, SmoothnessHint::Lipschitz(0.0), move |_| m.clone()).expect("unit interval")
    }

    /// Piecewise-linear interpolation of knots at uniform parameters.
    pub fn piecewise_linear(start: f64, end: f64, knots: Vec<HermitianOperator>) -> Result<Self> {
        check_interval(start, end)?;
        let m = knots.len();
        if m == 0 {
            return Err(Error::Validation("piecewise-linear path needs knots".into()));
        }
        let dim = knots[0].dim();
        for k in &knots {
            ensure_same_dim(dim, k.dim())?;
        }
        if m == 1 {
            let only = knots[0].entries().clone();
            return Self::new(start, end, dim, SmoothnessHint::Lipschitz(0.0), move |_| only.clone());
        }
        let step = (end - start) / (m - 1) as f64;
        let lipschitz = knots
            .windows(2)
            .map(|w| linalg::hermitian_norm(&(w[1].entries() - w[0].entries())) / step)
            .fold(0.0_f64, f64::max);
        let mats: Vec<CMatrix> = knots.into_iter().map(HermitianOperator::into_entries).collect();
        Self::new(start, end, dim, SmoothnessHint::Lipschitz(lipschitz), move |t| {
            let u = ((t - start) / (end - start)).clamp(0.0, 1.0) * (m - 1) as f64;
            let k = (u.floor() as usize).min(m - 2);
            let w = u - k as f64;
            if w == 0.0 {
                mats[k].clone()
            } else if w == 1.0 {
                mats[k + 1].clone()
            } else {
                &mats[k] * c(1.0 - w) + &mats[k + 1] * c(w)
            }
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hint(&self) -> SmoothnessHint {
        self.hint
    }

    pub fn with_hint(mut self, hint: SmoothnessHint) -> Self {
        self.hint = hint;
        self
    }

    /// Samples the path at `t`, validating the parameter, the dimension and
    /// Hermiticity of the result.
    pub fn sample(&self, t: f64) -> Result<HermitianOperator> {
        let slack = 1e-12 * (self.end - self.start);
        if !(t >= self.start - slack && t <= self.end + slack) {
            return Err(Error::Validation(format!(
                "parameter {t} outside path interval [{}, {}]",
                self.start, self.end
            )));
        }
        let m = (self.sampler)(t.clamp(self.start, self.end))?;
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        HermitianOperator::new(m)
    }

    pub fn at_start(&self) -> Result<HermitianOperator> {
        self.sample(self.start)
    }

    pub fn at_end(&self) -> Result<HermitianOperator> {
        self.sample(self.end)
    }

    /// The same path traversed backwards over the same interval.
    pub fn reversed(&self) -> Self {
        let inner = self.sampler.clone();
        let (a, b) = (self.start, self.end);
        Self {
            sampler: Arc::new(move |t| inner(a + b - t)),
            ..self.clone()
        }
    }

    /// Affine reparametrization onto `[a, b]`.
    pub fn reparametrized(&self, a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        let inner = self.sampler.clone();
        let (s0, s1) = (self.start, self.end);
        Ok(Self {
            start: a,
            end: b,
            dim: self.dim,
            hint: self.hint.rescaled((s1 - s0) / (b - a)),
            sampler: Arc::new(move |t| inner(s0 + (t - a) / (b - a) * (s1 - s0))),
        })
    }

    /// Restriction to a subinterval, keeping the parameter.
    pub fn restricted(&self, a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        if a < self.start || b > self.end {
            return Err(Error::Validation(format!(
                "[{a}, {b}] is not inside [{}, {}]",
                self.start, self.end
            )));
        }
        Ok(Self {
            start: a,
            end: b,
            ..self.clone()
        })
    }
}

/// `t -> (1-t) A + t B` on `[0, 1]`.
pub fn linear_segment(a: &HermitianOperator, b: &HermitianOperator) -> Result<OperatorPath> {
    ensure_same_dim(a.dim(), b.dim())?;
    let (ma, mb) = (a.entries().clone(), b.entries().clone());
    OperatorPath::new(0.0, 1.0, a.dim(), SmoothnessHint::Analytic, move |t| {
        if t == 0.0 {
            ma.clone()
        } else if t == 1.0 {
            mb.clone()
        } else {
            &ma * c(1.0 - t) + &mb * c(t)
        }
    })
}

/// `p` followed by `q`, reparametrized onto `[0, 1/2]` and `[1/2, 1]`.
pub fn concatenate(p: &OperatorPath, q: &OperatorPath) -> Result<OperatorPath> {
    ensure_same_dim(p.dim(), q.dim())?;
    let pe = p.at_end()?;
    let qs = q.at_start()?;
    let gap = pe.distance(&qs)?;
    let tolerance = TAU_CAT * pe.norm().max(qs.norm()).max(f64::MIN_POSITIVE);
    if gap > tolerance {
        return Err(Error::Concatenation { gap, tolerance });
    }
    let left = p.reparametrized(0.0, 0.5)?;
    let right = q.reparametrized(0.5, 1.0)?;
    let hint = left.hint.weakest(right.hint);
    let (ls, rs) = (left.sampler, right.sampler);
    OperatorPath::try_new(0.0, 1.0, p.dim(), hint, move |t| if t <= 0.5 { ls(t) } else { rs(t) })
}

/// A path of unitaries `t -> U(t)`.
#[derive(Clone)]
pub struct UnitaryPath {
    start: f64,
    end: f64,
    dim: usize,
    sampler: UnitarySampler,
}

impl fmt::Debug for UnitaryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryPath")
            .field("interval", &(self.start, self.end))
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl UnitaryPath {
    pub fn new(
        start: f64,
        end: f64,
        dim: usize,
        sampler: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        check_interval(start, end)?;
        Ok(Self {
            start,
            end,
            dim,
            sampler: Arc::new(sampler),
        })
    }

    pub fn constant(start: f64, end: f64, u: CMatrix) -> Result<Self> {
        let dim = u.nrows();
        Self::new(start, end, dim, move |_| u.clone())
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples `U(t)`, checking `U*U = I` within `TAU_EIG`.
    pub fn sample(&self, t: f64) -> Result<CMatrix> {
        let u = (self.sampler)(t);
        if u.nrows() != self.dim || u.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.nrows(),
            });
        }
        check_unitary(&u)?;
        Ok(u)
    }
}

pub(crate) fn check_unitary(u: &CMatrix) -> Result<()> {
    let defect = linalg::operator_norm(&(u.adjoint() * u - linalg::identity(u.nrows())));
    if defect > TAU_EIG {
        return Err(Error::Validation(format!("matrix is not unitary (defect {defect:e})")));
    }
    Ok(())
}

/// `t -> U(t) D(t) U(t)*`.
pub fn conjugate(p: &OperatorPath, u: &UnitaryPath) -> Result<OperatorPath> {
    ensure_same_dim(p.dim(), u.dim())?;
    if p.interval() != u.interval() {
        return Err(Error::Validation(format!(
            "interval mismatch: path {:?}, unitary path {:?}",
            p.interval(),
            u.interval()
        )));
    }
    let (ps, us) = (p.sampler.clone(), u.clone());
    OperatorPath::try_new(p.start, p.end, p.dim, SmoothnessHint::Unknown, move |t| {
        let d = ps(t)?;
        let w = us.sample(t)?;
        let m = &w * d * w.adjoint();
        Ok((&m + m.adjoint()) * c(0.5))
    })
}

/// A real function of a real variable used in the functional calculus.
pub type ScalarFunction = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Checks that `f` is non-decreasing with `f(x) = 0` only at `x = 0` on a
/// uniform grid over `[-radius, radius]`.
pub fn probe_monotone(f: &dyn Fn(f64) -> f64, radius: f64) -> Result<()> {
    let r = if radius > 0.0 { radius } else { 1.0 };
    let fail = |msg: String| Err(Error::Validation(format!("pushforward function rejected: {msg}")));
    if f(0.0) != 0.0 {
        return fail(format!("f(0) = {} is not zero", f(0.0)));
    }
    if !(f(r) > 0.0 && f(-r) < 0.0) {
        return fail(format!("sign check failed at +/-{r}: f = {}, {}", f(r), f(-r)));
    }
    let mut prev = f64::NEG_INFINITY;
    for k in 0..MONOTONE_PROBES {
        let x = -r + 2.0 * r * k as f64 / (MONOTONE_PROBES - 1) as f64;
        let y = f(x);
        if !y.is_finite() {
            return fail(format!("f({x}) is not finite"));
        }
        if y < prev {
            return fail(format!("f decreases near {x}"));
        }
        if x != 0.0 && (y == 0.0 || y.signum() != x.signum()) {
            return fail(format!("f({x}) = {y} has the wrong sign"));
        }
        prev = y;
    }
    Ok(())
}

/// `t -> f(D_t)` for a non-decreasing `f` with `f^{-1}(0) = {0}`.
pub fn pushforward(p: &OperatorPath, f: ScalarFunction) -> Result<OperatorPath> {
    let mut radius = 0.0_f64;
    for k in 0..RANGE_SAMPLES {
        let t = p.start + (p.end - p.start) * k as f64 / (RANGE_SAMPLES - 1) as f64;
        radius = radius.max(eigh(&p.sample(t)?)?.spectral_radius());
    }
    probe_monotone(f.as_ref(), radius)?;
    let ps = p.sampler.clone();
    OperatorPath::try_new(p.start, p.end, p.dim, SmoothnessHint::Unknown, move |t| {
        let d = HermitianOperator::new(ps(t)?)?;
        Ok(apply_function(&d, f.as_ref())?.into_entries())
    })
}

/// A two-parameter family `(s, t) -> D(s, t)` on `[0, 1] x [a, b]`.
#[derive(Clone)]
pub struct OperatorRectangle {
    t_start: f64,
    t_end: f64,
    dim: usize,
    sampler: RectSampler,
}

impl fmt::Debug for OperatorRectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorRectangle")
            .field("t_interval", &(self.t_start, self.t_end))
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// The four boundary edges of a rectangle, each oriented by increasing
/// parameter. The rectangle identity reads
/// `flow(left) + flow(top) - flow(right) - flow(bottom) = 0`.
#[derive(Debug, Clone)]
pub struct RectangleEdges {
    /// `s = 0`, `t` over `[a, b]`.
    pub left: OperatorPath,
    /// `t = b`, `s` over `[0, 1]`.
    pub top: OperatorPath,
    /// `s = 1`, `t` over `[a, b]`.
    pub right: OperatorPath,
    /// `t = a`, `s` over `[0, 1]`.
    pub bottom: OperatorPath,
}

impl OperatorRectangle {
    pub fn new(
        t_start: f64,
        t_end: f64,
        dim: usize,
        sampler: impl Fn(f64, f64) -> CMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        check_interval(t_start, t_end)?;
        Ok(Self {
            t_start,
            t_end,
            dim,
            sampler: Arc::new(sampler),
        })
    }

    /// `(s, t) -> (1-s) p(t) + s q(t)`.
    pub fn interpolating(p: &OperatorPath, q: &OperatorPath) -> Result<Self> {
        ensure_same_dim(p.dim(), q.dim())?;
        if p.interval() != q.interval() {
            return Err(Error::Validation("interpolated paths need a common interval".into()));
        }
        let (ps, qs) = (p.clone(), q.clone());
        Self::new(p.start, p.end, p.dim, move |s, t| {
            let a = ps.sample(t).expect("sampler of interpolated path").into_entries();
            let b = qs.sample(t).expect("sampler of interpolated path").into_entries();
            if s == 0.0 {
                a
            } else if s == 1.0 {
                b
            } else {
                a * c(1.0 - s) + b * c(s)
            }
        })
    }

    pub fn t_interval(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, s: f64, t: f64) -> Result<HermitianOperator> {
        HermitianOperator::new((self.sampler)(s, t))
    }

    fn edge_in_t(&self, s: f64) -> Result<OperatorPath> {
        let f = self.sampler.clone();
        OperatorPath::new(self.t_start, self.t_end, self.dim, SmoothnessHint::Unknown, move |t| {
            f(s, t)
        })
    }

    fn edge_in_s(&self, t: f64) -> Result<OperatorPath> {
        let f = self.sampler.clone();
        OperatorPath::new(0.0, 1.0, self.dim, SmoothnessHint::Unknown, move |s| f(s, t))
    }

    pub fn boundary_edges(&self) -> Result<RectangleEdges> {
        Ok(RectangleEdges {
            left: self.edge_in_t(0.0)?,
            top: self.edge_in_s(self.t_end)?,
            right: self.edge_in_t(1.0)?,
            bottom: self.edge_in_s(self.t_start)?,
        })
    }
}
