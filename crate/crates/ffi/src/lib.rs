//! C ABI for `robext`.
//!
//! Models and portfolios live behind opaque handles returned through an
//! out-pointer and released with the matching `_free` function.
//! Every fallible call returns a [`RobextStatus`] and writes its result
//! through an out-pointer; on failure a description is available from
//! [`robext_last_error`] on the same thread. Enumerated arguments are plain
//! integers taking the values of [`RobextMeasure`] and [`RobextDirection`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use robext::bounds::{delta_star, exact_bound, moments_for_pickands, sqrt_bound, Direction, Regime};
use robext::divergence::{divergence, DominatingMeasure};
use robext::numerics::RngState;
use robext::portfolio::{var_bounds_grid, PortfolioSpec, SimplexSampler};
use robext::spectral::SpectralModel;
use robext::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobextStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidInput = 3,
    /// Quadrature, root finding or optimisation failed.
    NotConverged = 4,
    Degenerate = 5,
    NotDominated = 6,
    SupportMismatch = 7,
    Io = 8,
    /// An internal panic was caught at the boundary.
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobextMeasure {
    /// The reference model itself.
    Reference = 0,
    Lebesgue = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobextDirection {
    Lower = 0,
    Upper = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobextRegime {
    SqrtExact = 0,
    ExactSolved = 1,
    Degenerate = 2,
    /// The solver failed; only the square-root value is valid.
    Conservative = 3,
}

/// Result of [`robext_exact_bound`]. Missing values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RobextBound {
    pub model_value: f64,
    pub sqrt_value: f64,
    pub exact_value: f64,
    pub regime: RobextRegime,
    pub delta_star: f64,
    pub delta_star_star: f64,
}

/// Result of [`robext_portfolio_var_bounds`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RobextVarBounds {
    pub e_x: f64,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    /// Jackknife standard error of `ratio_upper`.
    pub ratio_upper_se: f64,
    /// Nonzero when the constraint covariance was singular.
    pub singular: i32,
}

/// Opaque spectral model.
pub struct RobextModel(SpectralModel);

/// Opaque portfolio specification.
pub struct RobextPortfolio(PortfolioSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RobextStatus {
    match e {
        Error::InvalidParameter(_) => RobextStatus::InvalidParameter,
        Error::InvalidInput(_) | Error::Csv(_) | Error::Json(_) => RobextStatus::InvalidInput,
        Error::Quadrature { .. } | Error::NoRoot { .. } | Error::Optimizer(_) => RobextStatus::NotConverged,
        Error::Degenerate(_) => RobextStatus::Degenerate,
        Error::NotDominated(_) => RobextStatus::NotDominated,
        Error::SupportMismatch(_) => RobextStatus::SupportMismatch,
        Error::Io(_) => RobextStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RobextStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RobextStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            RobextStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            RobextStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

fn measure(mu: u32) -> Result<DominatingMeasure, Fail> {
    match mu {
        0 => Ok(DominatingMeasure::ReferenceP),
        1 => Ok(DominatingMeasure::Lebesgue),
        _ => Err(Error::InvalidInput(format!("unknown measure code {mu}")).into()),
    }
}

fn direction(d: u32) -> Result<Direction, Fail> {
    match d {
        0 => Ok(Direction::Lower),
        1 => Ok(Direction::Upper),
        _ => Err(Error::InvalidInput(format!("unknown direction code {d}")).into()),
    }
}

unsafe fn new_model(out: *mut *mut RobextModel, m: robext::Result<SpectralModel>) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    out.write(ptr::null_mut());
    let m = m?;
    out.write(Box::into_raw(Box::new(RobextModel(m))));
    Ok(())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn robext_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn robext_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a model such as `"HR(0.6)"`, `"AL(0.4,0.7,1)"` or `"ET(0.5,2)"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robext_model_parse(spec: *const c_char, out: *mut *mut RobextModel) -> RobextStatus {
    guard(|| {
        if spec.is_null() {
            return Err(Fail::Null("spec"));
        }
        let s = CStr::from_ptr(spec)
            .to_str()
            .map_err(|_| Error::InvalidInput("model string is not UTF-8".into()))?;
        new_model(out, s.parse())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn robext_model_husler_reiss(lambda: f64, out: *mut *mut RobextModel) -> RobextStatus {
    guard(|| new_model(out, SpectralModel::husler_reiss(lambda)))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn robext_model_asymmetric_logistic(
    a: f64,
    b1: f64,
    b2: f64,
    out: *mut *mut RobextModel,
) -> RobextStatus {
    guard(|| new_model(out, SpectralModel::asymmetric_logistic(a, b1, b2)))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn robext_model_extremal_t(rho: f64, a: f64, out: *mut *mut RobextModel) -> RobextStatus {
    guard(|| new_model(out, SpectralModel::extremal_t(rho, a)))
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn robext_model_free(model: *mut RobextModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the model's canonical text form into `buf` (truncated and always
/// NUL-terminated when `len > 0`) and its full length, excluding the NUL,
/// into `needed` if that is not null.
///
/// # Safety
/// `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn robext_model_describe(
    model: *const RobextModel,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> RobextStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let s = m.0.to_string();
        if !needed.is_null() {
            needed.write(s.len());
        }
        if len > 0 {
            if buf.is_null() {
                return Err(Fail::Null("buf"));
            }
            let n = s.len().min(len - 1);
            ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        Ok(())
    })
}

/// Pickands' dependence function `A(z)`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robext_pickands(model: *const RobextModel, z: f64, out: *mut f64) -> RobextStatus {
    guard(|| write(out, deref(model, "model")?.0.pickands(z)?, "out"))
}

/// Extremal coefficient `2 A(1/2)`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robext_extremal_coefficient(model: *const RobextModel, out: *mut f64) -> RobextStatus {
    guard(|| write(out, deref(model, "model")?.0.extremal_coefficient()?, "out"))
}

/// Divergence of `q` from the reference `p` under the measure code `mu`;
/// infinity when `q` is not dominated.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robext_divergence(
    q: *const RobextModel,
    p: *const RobextModel,
    mu: u32,
    out: *mut f64,
) -> RobextStatus {
    guard(|| {
        let d = divergence(&deref(q, "q")?.0, &deref(p, "p")?.0, &measure(mu)?)?;
        write(out, d, "out")
    })
}

/// Largest radius at which the square-root bound on `A(z)` is attained.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robext_delta_star(
    model: *const RobextModel,
    z: f64,
    mu: u32,
    dir: u32,
    out: *mut f64,
) -> RobextStatus {
    guard(|| {
        let v = delta_star(&deref(model, "model")?.0, z, &measure(mu)?, direction(dir)?)?;
        write(out, v, "out")
    })
}

/// Square-root bound on `A(z)` at radius `delta`, not clipped.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robext_sqrt_bound(
    model: *const RobextModel,
    z: f64,
    mu: u32,
    delta: f64,
    dir: u32,
    out: *mut f64,
) -> RobextStatus {
    guard(|| {
        let d = direction(dir)?;
        if !(delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("radius {delta} must be nonnegative")).into());
        }
        let ms = moments_for_pickands(&deref(model, "model")?.0, z, &measure(mu)?)?;
        write(out, sqrt_bound(&ms, delta, d), "out")
    })
}

/// Exact bound on `A(z)` over the ball of radius `delta`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robext_exact_bound(
    model: *const RobextModel,
    z: f64,
    mu: u32,
    delta: f64,
    dir: u32,
    out: *mut RobextBound,
) -> RobextStatus {
    guard(|| {
        let r = exact_bound(&deref(model, "model")?.0, z, &measure(mu)?, delta, direction(dir)?)?;
        let regime = match r.regime {
            Regime::SqrtExact => RobextRegime::SqrtExact,
            Regime::ExactSolved => RobextRegime::ExactSolved,
            Regime::Degenerate => RobextRegime::Degenerate,
            Regime::Conservative => RobextRegime::Conservative,
        };
        let b = RobextBound {
            model_value: r.model_value,
            sqrt_value: r.sqrt_value.unwrap_or(f64::NAN),
            exact_value: r.exact_value.unwrap_or(f64::NAN),
            regime,
            delta_star: r.delta_star.unwrap_or(f64::NAN),
            delta_star_star: r.delta_star_star,
        };
        write(out, b, "out")
    })
}

/// Portfolio of `d` assets with weights `weights`, tail index `alpha`,
/// marginal scales `scales` (null for all ones) and a symmetric Dirichlet
/// spectral law with concentration `beta`.
///
/// # Safety
/// `weights` (and `scales` unless null) must hold `d` values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn robext_portfolio_new(
    weights: *const f64,
    scales: *const f64,
    d: usize,
    alpha: f64,
    beta: f64,
    out: *mut *mut RobextPortfolio,
) -> RobextStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        out.write(ptr::null_mut());
        if weights.is_null() {
            return Err(Fail::Null("weights"));
        }
        let w = std::slice::from_raw_parts(weights, d).to_vec();
        let s = if scales.is_null() {
            vec![1.0; d]
        } else {
            std::slice::from_raw_parts(scales, d).to_vec()
        };
        let spec = PortfolioSpec::new(w, alpha, s, SimplexSampler::Dirichlet { beta })?;
        out.write(Box::into_raw(Box::new(RobextPortfolio(spec))));
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn robext_portfolio_free(p: *mut RobextPortfolio) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Monte Carlo bounds on the asymptotic VaR ratio at radius `delta` from
/// `n` simplex draws of stream `seed`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn robext_portfolio_var_bounds(
    p: *const RobextPortfolio,
    delta: f64,
    n: usize,
    seed: u64,
    out: *mut RobextVarBounds,
) -> RobextStatus {
    guard(|| {
        let spec = &deref(p, "portfolio")?.0;
        let (m, b) = var_bounds_grid(spec, &[delta], n, RngState::new(seed, 0), false)?;
        let b = &b[0];
        let v = RobextVarBounds {
            e_x: b.e_x,
            ratio_lower: b.ratio_lower,
            ratio_upper: b.ratio_upper,
            ratio_upper_se: b.ratio_upper_se,
            singular: i32::from(m.singular),
        };
        write(out, v, "out")
    })
}
