//! C ABI over `randens`.
//!
//! Every entry point returns an [`RdStatus`]; on anything but `RD_STATUS_OK`
//! the thread's last error message is set and can be read with
//! [`rd_last_error_message`]. Sources are opaque [`RdSource`] handles created
//! by [`rd_source_parse`] and released with [`rd_source_free`]. Passing a null
//! `config` selects the default quadrature settings.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use randens::geometry::closed_forms;
use randens::kernels::kernel_partial;
use randens::{
    field_derivs, fisher_direct, pd_check, structure_direct, Error, FamilyTag, FisherMatrix, FormulaMode,
    KernelPoint, MultiIndex, ParamPoint, QuadratureConfig, SourceSpec, StructureTensor,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    InvalidSource = 5,
    Config = 6,
    NonConvergence = 7,
    Sentinel = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdFamily {
    Heat = 0,
    Laplace = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdMode {
    Printed = 0,
    Corrected = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdMethod {
    Closed = 0,
    Direct = 1,
}

/// Quadrature tolerances; unbounded domains use the library's default windows.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdQuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail_tol: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RdMetric {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RdTensor {
    pub t111: f64,
    pub t112: f64,
    pub t122: f64,
    pub t222: f64,
}

/// Opaque source density.
pub struct RdSource(SourceSpec);

/// Number of partials in a field bundle: orders 0..=3 in slot order
/// `n(n+1)/2 + j` for the index `(n - j, j)`.
pub const RD_N_PARTIALS: usize = 10;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RdStatus {
    match e {
        Error::Domain(_) => RdStatus::Domain,
        Error::InvalidSource(_) => RdStatus::InvalidSource,
        Error::SentinelEvaluation(_) => RdStatus::Sentinel,
        Error::Parse(_) => RdStatus::Parse,
        Error::Config(_) | Error::Io(_) => RdStatus::Config,
        Error::NonConvergence { .. } => RdStatus::NonConvergence,
        Error::Component { source, .. } => status_of(source),
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
    Utf8,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RdStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RdStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("descriptor is not valid UTF-8".into());
            RdStatus::InvalidUtf8
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            RdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

fn family(f: RdFamily) -> FamilyTag {
    match f {
        RdFamily::Heat => FamilyTag::Heat,
        RdFamily::Laplace => FamilyTag::Laplace,
    }
}

fn mode(m: RdMode) -> FormulaMode {
    match m {
        RdMode::Printed => FormulaMode::Printed,
        RdMode::Corrected => FormulaMode::Corrected,
    }
}

unsafe fn config(p: *const RdQuadConfig) -> Result<QuadratureConfig, Fail> {
    let mut cfg = QuadratureConfig::default();
    if let Some(c) = p.as_ref() {
        cfg.abs_tol = c.abs_tol;
        cfg.rel_tol = c.rel_tol;
        cfg.max_subdivisions = c.max_subdivisions;
        cfg.tail_tol = c.tail_tol;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn metric(g: FisherMatrix) -> RdMetric {
    RdMetric { g11: g.g11, g12: g.g12, g22: g.g22 }
}

fn tensor(t: StructureTensor) -> RdTensor {
    RdTensor { t111: t.t111, t112: t.t112, t122: t.t122, t222: t.t222 }
}

/// Default quadrature settings.
#[no_mangle]
pub extern "C" fn rd_default_config() -> RdQuadConfig {
    let c = QuadratureConfig::default();
    RdQuadConfig { abs_tol: c.abs_tol, rel_tol: c.rel_tol, max_subdivisions: c.max_subdivisions, tail_tol: c.tail_tol }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parse a source descriptor such as `gaussian:mu=0,sigma=1`.
///
/// # Safety
/// `descriptor` must be a NUL-terminated string; `out_source` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_source_parse(descriptor: *const c_char, out_source: *mut *mut RdSource) -> RdStatus {
    guard(|| {
        let slot = out(out_source, "out_source")?;
        *slot = ptr::null_mut();
        if descriptor.is_null() {
            return Err(Fail::Null("descriptor"));
        }
        let text = CStr::from_ptr(descriptor).to_str().map_err(|_| Fail::Utf8)?;
        let spec: SourceSpec = text.parse()?;
        spec.validate()?;
        *slot = Box::into_raw(Box::new(RdSource(spec)));
        Ok(())
    })
}

/// Release a handle from [`rd_source_parse`]. Null is ignored.
///
/// # Safety
/// `source` must come from [`rd_source_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rd_source_free(source: *mut RdSource) {
    if !source.is_null() {
        drop(Box::from_raw(source));
    }
}

/// Canonical descriptor of a source, written into `buf` with a trailing NUL.
/// `needed` receives the full length including the NUL; a short buffer gets a
/// truncated string.
///
/// # Safety
/// `buf` must hold `len` bytes (or be null with `len == 0`).
#[no_mangle]
pub unsafe extern "C" fn rd_source_describe(
    source: *const RdSource,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> RdStatus {
    guard(|| {
        let s = deref(source, "source")?.0.to_string();
        let bytes = s.as_bytes();
        if let Some(n) = needed.as_mut() {
            *n = bytes.len() + 1;
        }
        if len > 0 {
            if buf.is_null() {
                return Err(Fail::Null("buf"));
            }
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), k);
            *buf.add(k) = 0;
        }
        Ok(())
    })
}

/// One partial `∂^i_1 ∂^j_2 h` of the unnormalized kernel (`exp(-w²/4t)` or
/// `1/(x² + w²)`) at scale (`t` or `x`) and offset `w`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_kernel_partial(
    fam: RdFamily,
    scale: f64,
    offset: f64,
    i: u8,
    j: u8,
    out_value: *mut f64,
) -> RdStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        let pt = KernelPoint::new(scale, offset)?;
        *o = kernel_partial(family(fam), pt, MultiIndex::new(i, j)?)?;
        Ok(())
    })
}

/// All partials of the field `u` up to order 3 at `(p1, p2)`.
///
/// # Safety
/// `source` must be a live handle; `out_partials` must hold
/// [`RD_N_PARTIALS`] doubles; `out_err` may be null.
#[no_mangle]
pub unsafe extern "C" fn rd_field_derivs(
    source: *const RdSource,
    fam: RdFamily,
    p1: f64,
    p2: f64,
    config: *const RdQuadConfig,
    out_partials: *mut f64,
    out_err: *mut f64,
) -> RdStatus {
    guard(|| {
        let src = deref(source, "source")?;
        if out_partials.is_null() {
            return Err(Fail::Null("out_partials"));
        }
        let cfg = self::config(config)?;
        let theta = ParamPoint::new(family(fam), p1, p2)?;
        let b = field_derivs(&src.0, theta, &cfg)?;
        ptr::copy_nonoverlapping(b.values.as_ptr(), out_partials, RD_N_PARTIALS);
        if let Some(e) = out_err.as_mut() {
            *e = b.err;
        }
        Ok(())
    })
}

/// Fisher metric and structure tensor at `(p1, p2)`.
///
/// `formula` applies to the closed method only. Either output pointer may be
/// null when that half is not wanted, as may `out_err`.
///
/// # Safety
/// `source` must be a live handle; non-null outputs must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn rd_geometry(
    source: *const RdSource,
    fam: RdFamily,
    p1: f64,
    p2: f64,
    method: RdMethod,
    formula: RdMode,
    config: *const RdQuadConfig,
    out_metric: *mut RdMetric,
    out_tensor: *mut RdTensor,
    out_err: *mut f64,
) -> RdStatus {
    guard(|| {
        let src = &deref(source, "source")?.0;
        let cfg = self::config(config)?;
        let theta = ParamPoint::new(family(fam), p1, p2)?;
        let (g, t, err) = match method {
            RdMethod::Closed => closed_forms(src, theta, &cfg, mode(formula))?,
            RdMethod::Direct => {
                let (mut g, mut t, mut err) = (FisherMatrix::ZERO, StructureTensor::ZERO, 0.0f64);
                if !out_metric.is_null() {
                    let (m, e) = fisher_direct(src, theta, &cfg)?;
                    g = m;
                    err = err.max(e);
                }
                if !out_tensor.is_null() {
                    let (s, e) = structure_direct(src, theta, &cfg)?;
                    t = s;
                    err = err.max(e);
                }
                (g, t, err)
            }
        };
        if let Some(o) = out_metric.as_mut() {
            *o = metric(g);
        }
        if let Some(o) = out_tensor.as_mut() {
            *o = tensor(t);
        }
        if let Some(o) = out_err.as_mut() {
            *o = err;
        }
        Ok(())
    })
}

/// Positive-definiteness and eigenvalues of a metric. `lambda1` pairs with the
/// eigenvector nearer the first axis.
///
/// # Safety
/// `g` must be readable; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rd_pd_check(
    g: *const RdMetric,
    out_is_pd: *mut bool,
    out_lambda1: *mut f64,
    out_lambda2: *mut f64,
) -> RdStatus {
    guard(|| {
        let g = deref(g, "g")?;
        let (pd, (l1, l2)) = pd_check(&FisherMatrix::new(g.g11, g.g12, g.g22));
        *out(out_is_pd, "out_is_pd")? = pd;
        *out(out_lambda1, "out_lambda1")? = l1;
        *out(out_lambda2, "out_lambda2")? = l2;
        Ok(())
    })
}
