//! C ABI for `pq-baskakov`.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`PqbbStatus`] and writes results
//!   through out-pointers. On failure the out-pointers are left untouched,
//!   except for results flagged [`PqbbStatus::NotConverged`], which are still
//!   filled so the caller can inspect the diagnostics.
//! * Parameter pairs and functions are opaque handles created by `*_new`
//!   functions and released with the matching `*_free`.
//! * A null policy pointer means the default truncation policy.
//! * The message of the last failure on the calling thread is available from
//!   [`pqbb_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use pq_baskakov::calculus::{pq_beta, pq_number};
use pq_baskakov::operators::{baskakov_beta_apply_grid, central_moment, moments_closed};
use pq_baskakov::quadrature::{beta_integral, jackson_integral};
use pq_baskakov::{Error, FunctionSpec, InnerIntegration, OperatorResult, PQPair, QuadratureResult, TruncationPolicy};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqbbStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidParameter = -2,
    Domain = -3,
    /// The result was written but a series did not meet its tolerance.
    NotConverged = -4,
    Evaluation = -5,
    Panic = -99,
}

/// Opaque parameter pair `(p, q)`.
pub struct PqbbPair(PQPair);

/// Opaque target function.
pub struct PqbbFunction(FunctionSpec);

/// Series truncation settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PqbbPolicy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PqbbQuadrature {
    pub value: f64,
    pub terms_used: usize,
    pub tail_estimate: f64,
    pub converged: bool,
    pub nodes_outside: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PqbbOperatorResult {
    pub value: f64,
    pub k_terms_used: usize,
    pub basis_tail_mass: f64,
    pub inner_integrals_converged: bool,
    pub trusted: bool,
}

impl From<QuadratureResult> for PqbbQuadrature {
    fn from(r: QuadratureResult) -> Self {
        PqbbQuadrature {
            value: r.value,
            terms_used: r.terms_used,
            tail_estimate: r.tail_estimate,
            converged: r.converged,
            nodes_outside: r.nodes_outside,
        }
    }
}

impl From<OperatorResult> for PqbbOperatorResult {
    fn from(r: OperatorResult) -> Self {
        PqbbOperatorResult {
            value: r.value,
            k_terms_used: r.k_terms_used,
            basis_tail_mass: r.basis_tail_mass,
            inner_integrals_converged: r.inner_integrals_converged,
            trusted: r.trusted,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> PqbbStatus {
    match err {
        Error::Domain(_) => PqbbStatus::Domain,
        Error::Evaluation { .. } => PqbbStatus::Evaluation,
        Error::InvalidPair { .. } | Error::InvalidPolicy(_) | Error::InvalidFunction(_) | Error::Config(_) => {
            PqbbStatus::InvalidParameter
        }
    }
}

/// Runs `body`, converting library errors and panics into status codes.
fn guard<F>(body: F) -> PqbbStatus
where
    F: FnOnce() -> Result<PqbbStatus, (PqbbStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            PqbbStatus::Panic
        }
    }
}

fn lib<T>(r: pq_baskakov::Result<T>) -> Result<T, (PqbbStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PqbbStatus, String) {
    (PqbbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PqbbStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn policy_from(p: *const PqbbPolicy) -> Result<TruncationPolicy, (PqbbStatus, String)> {
    match p.as_ref() {
        None => Ok(TruncationPolicy::default()),
        Some(p) => lib(TruncationPolicy::new(p.rel_tol, p.abs_tol, p.max_terms)),
    }
}

fn converged(ok: bool, what: &str) -> PqbbStatus {
    if ok {
        PqbbStatus::Ok
    } else {
        set_last_error(format!("{what} did not reach its tolerance"));
        PqbbStatus::NotConverged
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pqbb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The default truncation policy.
#[no_mangle]
pub extern "C" fn pqbb_policy_default() -> PqbbPolicy {
    let d = TruncationPolicy::default();
    PqbbPolicy {
        rel_tol: d.rel_tol,
        abs_tol: d.abs_tol,
        max_terms: d.max_terms,
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a pair with `0 < q <= p <= 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_pair_new(p: f64, q: f64, out: *mut *mut PqbbPair) -> PqbbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let pair = lib(PQPair::new(p, q))?;
        *out = Box::into_raw(Box::new(PqbbPair(pair)));
        Ok(PqbbStatus::Ok)
    })
}

/// # Safety
/// `pair` must be null or come from [`pqbb_pair_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pqbb_pair_free(pair: *mut PqbbPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Polynomial with `len` coefficients in ascending degree.
///
/// # Safety
/// `coeffs` must be valid for `len` reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_function_polynomial(
    coeffs: *const f64,
    len: usize,
    out: *mut *mut PqbbFunction,
) -> PqbbStatus {
    guard(|| {
        if coeffs.is_null() {
            return Err(null("coeffs"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let f = lib(FunctionSpec::polynomial(slice::from_raw_parts(coeffs, len).to_vec()))?;
        *out = Box::into_raw(Box::new(PqbbFunction(f)));
        Ok(PqbbStatus::Ok)
    })
}

/// Registered function by identifier (`e0`, `e1`, `e2`, `abs_shift`, `sin`,
/// `cos`, `exp_neg`, `sqrt`, `log1p`).
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_function_named(id: *const c_char, out: *mut *mut PqbbFunction) -> PqbbStatus {
    guard(|| {
        if id.is_null() {
            return Err(null("id"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let id = CStr::from_ptr(id)
            .to_str()
            .map_err(|_| (PqbbStatus::InvalidParameter, "id is not UTF-8".to_string()))?;
        let f = lib(FunctionSpec::named_by_id(id))?;
        *out = Box::into_raw(Box::new(PqbbFunction(f)));
        Ok(PqbbStatus::Ok)
    })
}

/// # Safety
/// `f` must be null or come from a `pqbb_function_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn pqbb_function_free(f: *mut PqbbFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// `[n]_{p,q}`.
///
/// # Safety
/// `pair` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_pq_number(pair: *const PqbbPair, n: u32, out: *mut f64) -> PqbbStatus {
    guard(|| {
        let pair = deref(pair, "pair")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = pq_number(&pair.0, n);
        Ok(PqbbStatus::Ok)
    })
}

/// Closed-form `B_{p,q}(m, n)`.
///
/// # Safety
/// `pair` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_pq_beta(pair: *const PqbbPair, m: u32, n: u32, out: *mut f64) -> PqbbStatus {
    guard(|| {
        let pair = deref(pair, "pair")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(pq_beta(&pair.0, m, n))?;
        Ok(PqbbStatus::Ok)
    })
}

/// Jackson integral of `f` over `[0, a]`.
///
/// # Safety
/// Handles must be live, `policy` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_jackson_integral(
    pair: *const PqbbPair,
    f: *const PqbbFunction,
    a: f64,
    policy: *const PqbbPolicy,
    out: *mut PqbbQuadrature,
) -> PqbbStatus {
    guard(|| {
        let (pair, f) = (deref(pair, "pair")?, deref(f, "function")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let r = lib(jackson_integral(&pair.0, &f.0, a, &policy_from(policy)?))?;
        *out = r.into();
        Ok(converged(r.converged, "Jackson integral"))
    })
}

/// Improper integral of the Beta integrand `t^{m-1} / (1 ⊕ pt)^{m+n}`.
///
/// # Safety
/// `pair` must be live, `policy` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_beta_integral(
    pair: *const PqbbPair,
    m: u32,
    n: u32,
    policy: *const PqbbPolicy,
    out: *mut PqbbQuadrature,
) -> PqbbStatus {
    guard(|| {
        let pair = deref(pair, "pair")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = lib(beta_integral(&pair.0, m, n, &policy_from(policy)?))?;
        *out = r.into();
        Ok(converged(r.converged, "Beta integral"))
    })
}

/// `D_n(f, x)` at `len` points; `out` receives one result per point.
///
/// # Safety
/// Handles must be live, `xs` valid for `len` reads, `out` for `len` writes,
/// `policy` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pqbb_baskakov_beta_grid(
    pair: *const PqbbPair,
    f: *const PqbbFunction,
    n: u32,
    xs: *const f64,
    len: usize,
    policy: *const PqbbPolicy,
    out: *mut PqbbOperatorResult,
) -> PqbbStatus {
    guard(|| {
        let (pair, f) = (deref(pair, "pair")?, deref(f, "function")?);
        if xs.is_null() {
            return Err(null("xs"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let xs = slice::from_raw_parts(xs, len);
        let results = lib(baskakov_beta_apply_grid(
            &pair.0,
            &f.0,
            n,
            xs,
            &policy_from(policy)?,
            InnerIntegration::Auto,
        ))?;
        let dst = slice::from_raw_parts_mut(out, len);
        for (d, r) in dst.iter_mut().zip(&results) {
            *d = (*r).into();
        }
        Ok(converged(results.iter().all(|r| r.trusted), "operator evaluation"))
    })
}

/// `D_n(f, x)` at one point.
///
/// # Safety
/// As [`pqbb_baskakov_beta_grid`] with one point.
#[no_mangle]
pub unsafe extern "C" fn pqbb_baskakov_beta(
    pair: *const PqbbPair,
    f: *const PqbbFunction,
    n: u32,
    x: f64,
    policy: *const PqbbPolicy,
    out: *mut PqbbOperatorResult,
) -> PqbbStatus {
    pqbb_baskakov_beta_grid(pair, f, n, &x, 1, policy, out)
}

/// Closed-form moment `D_n(t^m, x)` for `m <= 2`.
///
/// # Safety
/// `pair` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_moment(pair: *const PqbbPair, m: u32, n: u32, x: f64, out: *mut f64) -> PqbbStatus {
    guard(|| {
        let pair = deref(pair, "pair")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(moments_closed(&pair.0, m, n, x))?;
        Ok(PqbbStatus::Ok)
    })
}

/// Central moment `D_n((t - x)^order, x)` for `order` 1 or 2.
///
/// # Safety
/// `pair` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pqbb_central_moment(
    pair: *const PqbbPair,
    order: u32,
    n: u32,
    x: f64,
    out: *mut f64,
) -> PqbbStatus {
    guard(|| {
        let pair = deref(pair, "pair")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(central_moment(&pair.0, order, n, x))?;
        Ok(PqbbStatus::Ok)
    })
}
