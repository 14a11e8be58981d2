//! C ABI over `spfl-core`.
//!
//! Operators and paths cross the boundary as opaque handles owned by the
//! caller and released with the matching `*_free`. Every fallible call
//! returns an [`SpflStatus`]; on failure `spfl_last_error` describes the
//! most recent error on the calling thread. Matrices are passed row-major as
//! separate real and imaginary arrays; a null imaginary array means zero.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spfl_core::flow::{spectral_flow, spectral_flow_oracle, FlowOptions};
use spfl_core::linalg::{CMatrix, Complex64};
use spfl_core::operator::eigh;
use spfl_core::paths::{linear_segment, parse_path_file};
use spfl_core::projection::{projection_index, Projection};
use spfl_core::scalar::NormalizingFunction;
use spfl_core::winding::{exp_loop_winding, generator_loop};
use spfl_core::{Error, HermitianOperator, OperatorPath};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpflStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    DimensionMismatch = 4,
    NonConvergence = 5,
    Domain = 6,
    GapViolation = 7,
    Concatenation = 8,
    SubdivisionFailure = 9,
    OracleResolution = 10,
    Precondition = 11,
    WindingResolution = 12,
    Config = 13,
    Ingestion = 14,
    Io = 15,
    Panic = 16,
}

impl From<&Error> for SpflStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Validation(_) => SpflStatus::Validation,
            Error::DimensionMismatch { .. } => SpflStatus::DimensionMismatch,
            Error::NonConvergence { .. } => SpflStatus::NonConvergence,
            Error::Domain { .. } => SpflStatus::Domain,
            Error::GapViolation { .. } => SpflStatus::GapViolation,
            Error::Concatenation { .. } => SpflStatus::Concatenation,
            Error::SubdivisionFailure { .. } => SpflStatus::SubdivisionFailure,
            Error::OracleResolution { .. } => SpflStatus::OracleResolution,
            Error::Precondition { .. } => SpflStatus::Precondition,
            Error::WindingResolution { .. } => SpflStatus::WindingResolution,
            Error::Config { .. } => SpflStatus::Config,
            Error::Ingestion { .. } => SpflStatus::Ingestion,
            Error::Io(_) => SpflStatus::Io,
        }
    }
}

/// Opaque Hermitian matrix.
pub struct SpflOperator(HermitianOperator);

/// Opaque path of Hermitian matrices.
pub struct SpflPath(OperatorPath);

/// Options for `spfl_spectral_flow`. A negative `guard` selects the default
/// guard relative to the path scale.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpflFlowOptions {
    pub probe_points: usize,
    pub guard: f64,
    pub max_depth: usize,
}

impl From<SpflFlowOptions> for FlowOptions {
    fn from(o: SpflFlowOptions) -> Self {
        FlowOptions {
            probe_points: o.probe_points,
            guard: (o.guard >= 0.0).then_some(o.guard),
            max_depth: o.max_depth,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SpflStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(SpflStatus::from(&e), format!("[{}] {e}", e.module()))
    }
}

fn null(what: &str) -> Failure {
    Failure(SpflStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SpflStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpflStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpflStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SpflStatus::Panic
        }
    }
}

unsafe fn read_matrix(dim: usize, re: *const f64, im: *const f64) -> Result<CMatrix, Failure> {
    if re.is_null() {
        return Err(null("real part"));
    }
    let len = dim.checked_mul(dim).ok_or_else(|| invalid("dimension overflow"))?;
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(im, len))
    };
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let k = i * dim + j;
        Complex64::new(re[k], im.map_or(0.0, |v| v[k]))
    }))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spfl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn spfl_flow_options_default() -> SpflFlowOptions {
    let d = FlowOptions::default();
    SpflFlowOptions {
        probe_points: d.probe_points,
        guard: -1.0,
        max_depth: d.max_depth,
    }
}

/// Builds a Hermitian operator from a row-major `dim x dim` matrix.
///
/// # Safety
/// `re` (and `im` unless null) must point to `dim * dim` doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn spfl_operator_new(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SpflOperator,
) -> SpflStatus {
    guard(|| {
        let m = read_matrix(dim, re, im)?;
        let op = HermitianOperator::new(m)?;
        write_out(out, Box::into_raw(Box::new(SpflOperator(op))))
    })
}

/// # Safety
/// `op` must come from `spfl_operator_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn spfl_operator_free(op: *mut SpflOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// # Safety
/// `op` must be a live handle or null (giving 0).
#[no_mangle]
pub unsafe extern "C" fn spfl_operator_dim(op: *const SpflOperator) -> usize {
    op.as_ref().map_or(0, |o| o.0.dim())
}

/// Writes the ascending eigenvalues into `out`, which holds `len >= dim`
/// doubles.
///
/// # Safety
/// `op` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spfl_operator_eigenvalues(op: *const SpflOperator, out: *mut f64, len: usize) -> SpflStatus {
    guard(|| {
        let op = borrow(op, "operator")?;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        if len < op.0.dim() {
            return Err(invalid(format!("buffer holds {len} values, need {}", op.0.dim())));
        }
        let eig = eigh(&op.0)?;
        std::slice::from_raw_parts_mut(out, len)[..eig.eigenvalues.len()].copy_from_slice(&eig.eigenvalues);
        Ok(())
    })
}

fn new_path(p: OperatorPath) -> *mut SpflPath {
    Box::into_raw(Box::new(SpflPath(p)))
}

/// `t -> (1-t) A + t B` on `[0, 1]`.
///
/// # Safety
/// `a`, `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spfl_path_linear(
    a: *const SpflOperator,
    b: *const SpflOperator,
    out: *mut *mut SpflPath,
) -> SpflStatus {
    guard(|| {
        let p = linear_segment(&borrow(a, "start operator")?.0, &borrow(b, "end operator")?.0)?;
        write_out(out, new_path(p))
    })
}

/// Piecewise-linear path through `samples` uniformly spaced row-major
/// matrices over `[start, end]`, stored consecutively.
///
/// # Safety
/// `re` (and `im` unless null) must hold `samples * dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn spfl_path_from_samples(
    dim: usize,
    samples: usize,
    start: f64,
    end: f64,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SpflPath,
) -> SpflStatus {
    guard(|| {
        if samples == 0 || dim == 0 {
            return Err(invalid("need at least one sample of positive dimension"));
        }
        let block = dim * dim;
        let mut knots = Vec::with_capacity(samples);
        for k in 0..samples {
            let im_k = if im.is_null() { ptr::null() } else { im.add(k * block) };
            if re.is_null() {
                return Err(null("real part"));
            }
            knots.push(HermitianOperator::new(read_matrix(dim, re.add(k * block), im_k)?)?);
        }
        let p = OperatorPath::piecewise_linear(start, end, knots)?;
        write_out(out, new_path(p))
    })
}

/// Parses a matrix path file (`dim n samples m interval a b` followed by
/// `re,im` entries).
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn spfl_path_parse(text: *const c_char, out: *mut *mut SpflPath) -> SpflStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| invalid("text is not UTF-8"))?;
        let p = parse_path_file(text)?.into_path()?;
        write_out(out, new_path(p))
    })
}

/// The closed generator loop of dimension `dim >= 2`; its flow is 1.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spfl_path_generator_loop(dim: usize, out: *mut *mut SpflPath) -> SpflStatus {
    guard(|| write_out(out, new_path(generator_loop(dim)?.path)))
}

/// # Safety
/// `p` must come from a `spfl_path_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn spfl_path_free(p: *mut SpflPath) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle or null (giving 0).
#[no_mangle]
pub unsafe extern "C" fn spfl_path_dim(p: *const SpflPath) -> usize {
    p.as_ref().map_or(0, |p| p.0.dim())
}

/// Spectral flow by adaptive partition. `opts` may be null for defaults.
///
/// # Safety
/// `p` must be a live handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spfl_spectral_flow(
    p: *const SpflPath,
    opts: *const SpflFlowOptions,
    out: *mut i64,
) -> SpflStatus {
    guard(|| {
        let p = borrow(p, "path")?;
        let opts = opts.as_ref().map_or_else(FlowOptions::default, |o| (*o).into());
        write_out(out, spectral_flow(&p.0, &opts)?.value)
    })
}

/// Crossing-count oracle on `samples` uniform parameters.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spfl_spectral_flow_oracle(p: *const SpflPath, samples: usize, out: *mut i64) -> SpflStatus {
    guard(|| write_out(out, spectral_flow_oracle(&borrow(p, "path")?.0, samples)?))
}

/// Winding number of `x -> exp(pi i (chi_n(D_x) + 1))` with the clamp
/// normalizing function of scale `chi_scale`.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spfl_exp_loop_winding(
    p: *const SpflPath,
    chi_scale: u32,
    points: usize,
    out: *mut i64,
) -> SpflStatus {
    guard(|| {
        if chi_scale == 0 {
            return Err(invalid("chi_scale must be positive"));
        }
        let w = exp_loop_winding(&borrow(p, "path")?.0, NormalizingFunction::new(chi_scale), points)?;
        write_out(out, w)
    })
}

/// `ind(P, Q)` for row-major projection matrices of dimension `dim`.
///
/// # Safety
/// Each non-null array must hold `dim * dim` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spfl_projection_index(
    dim: usize,
    p_re: *const f64,
    p_im: *const f64,
    q_re: *const f64,
    q_im: *const f64,
    out: *mut i64,
) -> SpflStatus {
    guard(|| {
        let p = Projection::new(read_matrix(dim, p_re, p_im)?)?;
        let q = Projection::new(read_matrix(dim, q_re, q_im)?)?;
        write_out(out, projection_index(&p, &q)?)
    })
}
