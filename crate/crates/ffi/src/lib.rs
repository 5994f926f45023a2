//! C ABI over `polyinv`.
//!
//! Objects cross the boundary as opaque heap handles that the caller frees
//! with the matching `*_free` function. Every fallible call returns a
//! [`PolyinvStatus`]; on failure the message is available from
//! [`polyinv_last_error`] on the same thread. Exponent arrays are `uint32_t`,
//! row-major, one row of `arity` entries per monomial.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use polyinv::{
    Dataset, Error, FitResult, IndexSet, Monomial, PenaltyFamily, PenaltySpec, Polynomial, TrialConfig,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyinvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Rank deficiency, non-finite design entries, or every trial failing.
    SolverFailure = 3,
    /// The invariance condition does not hold, or holds when a search needs it not to.
    ConditionNotMet = 4,
    IndexOutOfRange = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyinvPenaltyFamily {
    None = 0,
    Ridge = 1,
    Lasso = 2,
}

/// Outcome of the static penalty audit. Counts refer to the lists in the JSON form.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PolyinvAudit {
    pub downward_closed: bool,
    pub penalized_subset_of_greatest: bool,
    pub compliant: bool,
    pub missing_divisor_count: usize,
    pub offending_penalized_count: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PolyinvFitSummary {
    pub ssr: f64,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub ill_conditioned: bool,
}

/// Set of monomials of a fixed arity.
pub struct PolyinvIndexSet {
    inner: IndexSet,
}

pub struct PolyinvPolynomial {
    inner: Polynomial,
}

pub struct PolyinvFit {
    inner: FitResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail {
    status: PolyinvStatus,
    message: String,
}

impl Fail {
    fn new(status: PolyinvStatus, message: impl Into<String>) -> Self {
        Fail {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Fail::new(PolyinvStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NoUniqueSolution(_) | Error::NonFinite { .. } | Error::AllTrialsFailed(_) => {
                PolyinvStatus::SolverFailure
            }
            Error::ConditionNotMet(_) | Error::SearchVacuous => PolyinvStatus::ConditionNotMet,
            _ => PolyinvStatus::InvalidArgument,
        };
        Fail::new(status, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail::new(PolyinvStatus::InvalidArgument, e.to_string())
    }
}

type FfiResult<T> = Result<T, Fail>;

fn set_last_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("nul bytes removed"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> PolyinvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            PolyinvStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(Some(fail.message));
            fail.status
        }
        Err(_) => {
            set_last_error(Some("internal error: panic caught at the C boundary".into()));
            PolyinvStatus::Internal
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| Fail::null(what))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn as_mut_slice<'a, T>(p: *mut T, len: usize, what: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> FfiResult<()> {
    if p.is_null() {
        return Err(Fail::null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn monomials(arity: usize, exponents: *const u32, count: usize) -> FfiResult<Vec<Monomial>> {
    if arity == 0 {
        return Err(Error::ZeroArity.into());
    }
    let flat = as_slice(exponents, checked_len(arity, count)?, "exponents")?;
    Ok(flat
        .chunks(arity)
        .map(|row| Monomial::new(row.to_vec()))
        .collect::<Result<_, _>>()?)
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Fail::null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err(Fail::null("out"));
    }
    let c = CString::new(s).map_err(|_| Fail::new(PolyinvStatus::Internal, "string contains a nul byte"))?;
    out.write(c.into_raw());
    Ok(())
}

fn checked_len(rows: usize, cols: usize) -> FfiResult<usize> {
    rows.checked_mul(cols)
        .ok_or_else(|| Fail::new(PolyinvStatus::InvalidArgument, "array length overflows"))
}

unsafe fn read_c_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Fail::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::new(PolyinvStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or NULL after a success.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn polyinv_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn polyinv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from a `*_json` function of this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn polyinv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an index set from `count` monomials. Duplicates collapse.
///
/// # Safety
/// `exponents` must hold `count * arity` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_index_set_new(
    arity: usize,
    exponents: *const u32,
    count: usize,
    out: *mut *mut PolyinvIndexSet,
) -> PolyinvStatus {
    guard(|| {
        let set = IndexSet::from_monomials(arity, monomials(arity, exponents, count)?)?;
        write_handle(out, PolyinvIndexSet { inner: set })
    })
}

/// # Safety
/// `set` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn polyinv_index_set_free(set: *mut PolyinvIndexSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_index_set_len(set: *const PolyinvIndexSet, out: *mut usize) -> PolyinvStatus {
    guard(|| write_out(out, as_ref(set, "set")?.inner.len(), "out"))
}

/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_index_set_arity(set: *const PolyinvIndexSet, out: *mut usize) -> PolyinvStatus {
    guard(|| write_out(out, as_ref(set, "set")?.inner.arity(), "out"))
}

/// Copies the exponents of the `index`-th member, in canonical graded order.
///
/// # Safety
/// `set` must be a live handle; `out_exponents` must have room for `arity` values.
#[no_mangle]
pub unsafe extern "C" fn polyinv_index_set_get(
    set: *const PolyinvIndexSet,
    index: usize,
    out_exponents: *mut u32,
) -> PolyinvStatus {
    guard(|| {
        let set = &as_ref(set, "set")?.inner;
        let m = set.iter().nth(index).ok_or_else(|| {
            Fail::new(
                PolyinvStatus::IndexOutOfRange,
                format!("index {index} out of range for {} monomials", set.len()),
            )
        })?;
        as_mut_slice(out_exponents, set.arity(), "out_exponents")?.copy_from_slice(m.exponents());
        Ok(())
    })
}

/// Maximal elements under componentwise order.
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_greatest_monomials(
    set: *const PolyinvIndexSet,
    out: *mut *mut PolyinvIndexSet,
) -> PolyinvStatus {
    guard(|| {
        let g = polyinv::greatest_monomials(&as_ref(set, "set")?.inner)?;
        write_handle(out, PolyinvIndexSet { inner: g })
    })
}

/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_downward_closure(
    set: *const PolyinvIndexSet,
    out: *mut *mut PolyinvIndexSet,
) -> PolyinvStatus {
    guard(|| {
        let c = polyinv::downward_closure(&as_ref(set, "set")?.inner)?;
        write_handle(out, PolyinvIndexSet { inner: c })
    })
}

/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_is_downward_closed(set: *const PolyinvIndexSet, out: *mut bool) -> PolyinvStatus {
    guard(|| write_out(out, polyinv::is_downward_closed(&as_ref(set, "set")?.inner)?, "out"))
}

/// Checks whether penalizing `penalized` on `model` keeps fits translation invariant.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_audit_penalty(
    model: *const PolyinvIndexSet,
    penalized: *const PolyinvIndexSet,
    out: *mut PolyinvAudit,
) -> PolyinvStatus {
    guard(|| {
        let a = polyinv::audit_penalty(&as_ref(model, "model")?.inner, &as_ref(penalized, "penalized")?.inner)?;
        let summary = PolyinvAudit {
            downward_closed: a.downward_closed,
            penalized_subset_of_greatest: a.penalized_subset_of_greatest,
            compliant: a.compliant,
            missing_divisor_count: a.missing_divisors.len(),
            offending_penalized_count: a.offending_penalized.len(),
        };
        write_out(out, summary, "out")
    })
}

/// Polynomial with `count` terms; repeated monomials are summed.
///
/// # Safety
/// `exponents` must hold `count * arity` values and `coefficients` `count` values.
#[no_mangle]
pub unsafe extern "C" fn polyinv_polynomial_new(
    arity: usize,
    exponents: *const u32,
    coefficients: *const f64,
    count: usize,
    out: *mut *mut PolyinvPolynomial,
) -> PolyinvStatus {
    guard(|| {
        let ms = monomials(arity, exponents, count)?;
        let cs = as_slice(coefficients, count, "coefficients")?;
        let f = Polynomial::from_terms(arity, ms.into_iter().zip(cs.iter().copied()).collect::<Vec<_>>())?;
        write_handle(out, PolyinvPolynomial { inner: f })
    })
}

/// # Safety
/// `poly` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn polyinv_polynomial_free(poly: *mut PolyinvPolynomial) {
    if !poly.is_null() {
        drop(Box::from_raw(poly));
    }
}

/// # Safety
/// `poly` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_polynomial_num_terms(poly: *const PolyinvPolynomial, out: *mut usize) -> PolyinvStatus {
    guard(|| write_out(out, as_ref(poly, "poly")?.inner.num_terms(), "out"))
}

/// Copies the `index`-th stored term in canonical graded order.
///
/// # Safety
/// `poly` must be a live handle; `out_exponents` must have room for `arity`
/// values and `out_coefficient` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_polynomial_term(
    poly: *const PolyinvPolynomial,
    index: usize,
    out_exponents: *mut u32,
    out_coefficient: *mut f64,
) -> PolyinvStatus {
    guard(|| {
        let f = &as_ref(poly, "poly")?.inner;
        let (m, c) = f.terms().nth(index).ok_or_else(|| {
            Fail::new(
                PolyinvStatus::IndexOutOfRange,
                format!("index {index} out of range for {} terms", f.num_terms()),
            )
        })?;
        as_mut_slice(out_exponents, f.arity(), "out_exponents")?.copy_from_slice(m.exponents());
        write_out(out_coefficient, c, "out_coefficient")
    })
}

/// # Safety
/// `poly` must be a live handle; `x` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_polynomial_evaluate(
    poly: *const PolyinvPolynomial,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> PolyinvStatus {
    guard(|| {
        let v = as_ref(poly, "poly")?.inner.evaluate(as_slice(x, len, "x")?)?;
        write_out(out, v, "out")
    })
}

/// Re-expansion `g(x) = f(x + shift)`.
///
/// # Safety
/// `poly` must be a live handle; `shift` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_polynomial_translate(
    poly: *const PolyinvPolynomial,
    shift: *const f64,
    len: usize,
    out: *mut *mut PolyinvPolynomial,
) -> PolyinvStatus {
    guard(|| {
        let g = as_ref(poly, "poly")?.inner.translate(as_slice(shift, len, "shift")?)?;
        write_handle(out, PolyinvPolynomial { inner: g })
    })
}

/// JSON text `{"arity":..,"terms":[{"exp":[..],"coef":..}]}`; free with `polyinv_string_free`.
///
/// # Safety
/// `poly` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_polynomial_to_json(
    poly: *const PolyinvPolynomial,
    out: *mut *mut c_char,
) -> PolyinvStatus {
    guard(|| {
        let s = serde_json::to_string(&as_ref(poly, "poly")?.inner)?;
        write_string(out, s)
    })
}

/// Fits `model` to `n` rows of `p` predictors (`x` row-major) under the given penalty.
/// `family` is a `PolyinvPenaltyFamily` value. `penalty_exponents` and
/// `penalty_lambdas` describe `penalty_count` weighted monomials and must be
/// empty for `POLYINV_PENALTY_FAMILY_NONE`.
///
/// # Safety
/// `x` must hold `n * p` values, `y` `n` values, `penalty_exponents`
/// `penalty_count * p` values and `penalty_lambdas` `penalty_count` values.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn polyinv_fit(
    x: *const f64,
    y: *const f64,
    n: usize,
    p: usize,
    model: *const PolyinvIndexSet,
    family: u32,
    penalty_exponents: *const u32,
    penalty_lambdas: *const f64,
    penalty_count: usize,
    out: *mut *mut PolyinvFit,
) -> PolyinvStatus {
    guard(|| {
        let model = &as_ref(model, "model")?.inner;
        if p != model.arity() {
            return Err(Error::Dimension {
                expected: model.arity(),
                found: p,
            }
            .into());
        }
        let xs = as_slice(x, checked_len(n, p)?, "x")?;
        let data = Dataset::new(
            xs.chunks(p.max(1)).map(<[f64]>::to_vec).collect(),
            as_slice(y, n, "y")?.to_vec(),
        )?;
        let family = match family {
            f if f == PolyinvPenaltyFamily::None as u32 => PenaltyFamily::None,
            f if f == PolyinvPenaltyFamily::Ridge as u32 => PenaltyFamily::Ridge,
            f if f == PolyinvPenaltyFamily::Lasso as u32 => PenaltyFamily::Lasso,
            other => return Err(Fail::new(PolyinvStatus::InvalidArgument, format!("unknown penalty family {other}"))),
        };
        let penalty = match family {
            PenaltyFamily::None if penalty_count == 0 => PenaltySpec::none(),
            PenaltyFamily::None => {
                return Err(Error::InvalidPenalty("family none takes no penalized monomials".into()).into())
            }
            fam => {
                let ms = monomials(p, penalty_exponents, penalty_count)?;
                let ls = as_slice(penalty_lambdas, penalty_count, "penalty_lambdas")?;
                PenaltySpec::new(fam, ms.into_iter().zip(ls.iter().copied()))?
            }
        };
        let fit = polyinv::fit(&data, model, &penalty)?;
        write_handle(out, PolyinvFit { inner: fit })
    })
}

/// # Safety
/// `fit` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn polyinv_fit_free(fit: *mut PolyinvFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `fit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_fit_summary(fit: *const PolyinvFit, out: *mut PolyinvFitSummary) -> PolyinvStatus {
    guard(|| {
        let f = &as_ref(fit, "fit")?.inner;
        let summary = PolyinvFitSummary {
            ssr: f.ssr,
            loss: f.loss,
            iterations: f.iterations,
            converged: f.converged,
            ill_conditioned: f.condition_warning.is_some(),
        };
        write_out(out, summary, "out")
    })
}

/// Copy of the fitted polynomial as a new handle.
///
/// # Safety
/// `fit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_fit_model(fit: *const PolyinvFit, out: *mut *mut PolyinvPolynomial) -> PolyinvStatus {
    guard(|| {
        let model = as_ref(fit, "fit")?.inner.model.clone();
        write_handle(out, PolyinvPolynomial { inner: model })
    })
}

/// # Safety
/// `fit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_fit_to_json(fit: *const PolyinvFit, out: *mut *mut c_char) -> PolyinvStatus {
    guard(|| {
        let s = serde_json::to_string(&as_ref(fit, "fit")?.inner)?;
        write_string(out, s)
    })
}

/// Runs the randomized invariance check on a JSON trial configuration
/// (the format read by `polyinv check`) and returns the report as JSON.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_check_invariance_json(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> PolyinvStatus {
    guard(|| {
        let cfg: TrialConfig = serde_json::from_str(read_c_str(config_json, "config_json")?)?;
        let report = polyinv::check_fit_invariance(&cfg)?;
        write_string(out, serde_json::to_string(&report)?)
    })
}

/// Counterexample search on a non-compliant JSON trial configuration.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polyinv_search_counterexample_json(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> PolyinvStatus {
    guard(|| {
        let cfg: TrialConfig = serde_json::from_str(read_c_str(config_json, "config_json")?)?;
        let report = polyinv::search_counterexample(&cfg)?;
        write_string(out, serde_json::to_string(&report)?)
    })
}
