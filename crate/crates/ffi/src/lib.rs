//! C ABI for the `ndrank` library.
//!
//! Objects are exposed as opaque handles (`NdPoset`, `NdTensor`,
//! `NdFactorization`) created by `ndrank_*_new`-style constructors and
//! released with the matching `*_free`. Every fallible call returns an
//! [`NdStatus`]; on failure a message is available from
//! [`ndrank_last_error_message`] on the same thread until the next failing
//! call. Panics are caught at the boundary and reported as
//! [`NdStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndrank::{
    hals, membership_finite_rank, project_order_cone, FitConfig, NDFactorization, NdError, Poset,
    ProjectionProblem, Tensor,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    ShapeMismatch = 4,
    TooLarge = 5,
    /// Cycles, undeclared labels and other malformed orders.
    InvalidOrder = 6,
    /// The input violates a hypothesis of the requested method.
    Unsupported = 7,
    /// Negative or non-positive data where it is not allowed.
    InvalidData = 8,
    Io = 9,
    Internal = 10,
}

pub struct NdPoset {
    inner: Poset,
}

pub struct NdTensor {
    inner: Tensor,
}

pub struct NdFactorization {
    inner: NDFactorization,
    rss: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &NdError) -> NdStatus {
    match e {
        NdError::Cycle(_) | NdError::UnknownLabel(_) => NdStatus::InvalidOrder,
        NdError::TooLarge { .. } => NdStatus::TooLarge,
        NdError::IndexOutOfRange { .. } | NdError::ShapeMismatch(_) => NdStatus::ShapeMismatch,
        NdError::NotSimplicial
        | NdError::HypothesisViolated(_)
        | NdError::DegenerateCone { .. }
        | NdError::UnsupportedLossRank { .. } => NdStatus::Unsupported,
        NdError::NonNegativityViolated { .. } | NdError::NonPositiveEntry { .. } => {
            NdStatus::InvalidData
        }
        NdError::Parse { .. } => NdStatus::Parse,
        NdError::InvalidArgument(_) => NdStatus::InvalidArgument,
        NdError::Io(_) => NdStatus::Io,
    }
}

struct Failure(NdStatus, String);

impl From<NdError> for Failure {
    fn from(e: NdError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NdStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            NdStatus::Internal
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn posets_from<'a>(
    posets: *const *const NdPoset,
    n: usize,
) -> Result<Vec<&'a Poset>, Failure> {
    let handles = unsafe { slice(posets, n, "posets")? };
    handles
        .iter()
        .map(|&h| {
            if h.is_null() {
                Err(null("posets[i]"))
            } else {
                // SAFETY: non-null handles come from this library.
                Ok(unsafe { &(*h).inner })
            }
        })
        .collect()
}

/// Message describing the most recent failure on this thread, or NULL.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ndrank_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is non-null and points to writable storage for a pointer.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Creates the chain `0 < 1 < ... < n-1`.
///
/// # Safety
/// `out` must point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ndrank_poset_chain(n: usize, out: *mut *mut NdPoset) -> NdStatus {
    guard(|| {
        if n == 0 {
            return Err(Failure(NdStatus::InvalidArgument, "poset size must be positive".into()));
        }
        emit(out, NdPoset { inner: Poset::chain(n) })
    })
}

/// Creates an antichain of `n` elements.
///
/// # Safety
/// `out` must point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ndrank_poset_trivial(n: usize, out: *mut *mut NdPoset) -> NdStatus {
    guard(|| {
        if n == 0 {
            return Err(Failure(NdStatus::InvalidArgument, "poset size must be positive".into()));
        }
        emit(out, NdPoset { inner: Poset::trivial(n) })
    })
}

/// Parses a poset from the text format (`elements: ...` followed by
/// `a < b` lines).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ndrank_poset_parse(text: *const c_char, out: *mut *mut NdPoset) -> NdStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let s = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| Failure(NdStatus::Parse, "text is not valid UTF-8".into()))?;
        emit(out, NdPoset { inner: ndrank::io::parse_poset(s)? })
    })
}

/// Number of elements, or 0 for a NULL handle.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ndrank_poset_size(p: *const NdPoset) -> usize {
    if p.is_null() {
        0
    } else {
        unsafe { (*p).inner.size() }
    }
}

/// # Safety
/// `p` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ndrank_poset_free(p: *mut NdPoset) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Creates a tensor from a row-major buffer of `prod(shape)` values.
///
/// # Safety
/// `shape` must hold `order` values and `data` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ndrank_tensor_new(
    shape: *const usize,
    order: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut NdTensor,
) -> NdStatus {
    guard(|| {
        let shape = unsafe { slice(shape, order, "shape")? }.to_vec();
        let data = unsafe { slice(data, len, "data")? }.to_vec();
        emit(out, NdTensor { inner: Tensor::new(shape, data)? })
    })
}

/// Number of entries, or 0 for a NULL handle.
///
/// # Safety
/// `t` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ndrank_tensor_len(t: *const NdTensor) -> usize {
    if t.is_null() {
        0
    } else {
        unsafe { (*t).inner.len() }
    }
}

/// Copies the row-major entries into `buf`, which must hold `len` values
/// with `len` equal to [`ndrank_tensor_len`].
///
/// # Safety
/// `t` must be a live handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn ndrank_tensor_copy_data(
    t: *const NdTensor,
    buf: *mut f64,
    len: usize,
) -> NdStatus {
    guard(|| {
        if t.is_null() {
            return Err(null("tensor"));
        }
        let data = unsafe { (*t).inner.data() };
        if len != data.len() {
            return Err(Failure(
                NdStatus::ShapeMismatch,
                format!("buffer holds {len} values, tensor has {}", data.len()),
            ));
        }
        if buf.is_null() && len > 0 {
            return Err(null("buf"));
        }
        unsafe { ptr::copy_nonoverlapping(data.as_ptr(), buf, len) };
        Ok(())
    })
}

/// # Safety
/// `t` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ndrank_tensor_free(t: *mut NdTensor) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}

/// Decides whether `t` has finite ND rank over the given mode posets.
/// A NaN `tol` selects the default tolerance. `out_violations` (optional)
/// receives the number of violated inequalities.
///
/// # Safety
/// `posets` must hold `n_posets` live handles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ndrank_check_finite_rank(
    t: *const NdTensor,
    posets: *const *const NdPoset,
    n_posets: usize,
    tol: f64,
    out_member: *mut bool,
    out_violations: *mut usize,
) -> NdStatus {
    guard(|| {
        if t.is_null() {
            return Err(null("tensor"));
        }
        if out_member.is_null() {
            return Err(null("out_member"));
        }
        let ps: Vec<Poset> = unsafe { posets_from(posets, n_posets)? }
            .into_iter()
            .cloned()
            .collect();
        let tol = if tol.is_nan() { None } else { Some(tol) };
        let cert = membership_finite_rank(unsafe { &(*t).inner }, &ps, tol)?;
        unsafe {
            *out_member = cert.is_member();
            if !out_violations.is_null() {
                *out_violations = cert.violated.len();
            }
        }
        Ok(())
    })
}

/// Weighted Euclidean projection of `y` onto the order cone of `poset`
/// (nonnegative nondecreasing vectors). `w` may be NULL for unit weights.
///
/// # Safety
/// `y`, `out` (and `w` when non-NULL) must hold `len` values, with `len`
/// equal to the poset size.
#[no_mangle]
pub unsafe extern "C" fn ndrank_project(
    poset: *const NdPoset,
    y: *const f64,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> NdStatus {
    guard(|| {
        if poset.is_null() {
            return Err(null("poset"));
        }
        let p = unsafe { &(*poset).inner };
        let y = unsafe { slice(y, len, "y")? }.to_vec();
        let prob = if w.is_null() {
            ProjectionProblem::new(y, p)?
        } else {
            ProjectionProblem::with_weights(y, unsafe { slice(w, len, "w")? }.to_vec(), p)?
        };
        if out.is_null() && len > 0 {
            return Err(null("out"));
        }
        let x = project_order_cone(&prob);
        unsafe { ptr::copy_nonoverlapping(x.as_ptr(), out, len) };
        Ok(())
    })
}

/// Fits a rank-`rank` ND factorization by HALS with the given number of
/// restarts. `max_sweeps == 0` keeps the default.
///
/// # Safety
/// `t` must be a live handle, `posets` must hold `n_posets` live handles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ndrank_hals(
    t: *const NdTensor,
    posets: *const *const NdPoset,
    n_posets: usize,
    rank: usize,
    restarts: usize,
    seed: u64,
    max_sweeps: usize,
    out: *mut *mut NdFactorization,
) -> NdStatus {
    guard(|| {
        if t.is_null() {
            return Err(null("tensor"));
        }
        let ps: Vec<Poset> = unsafe { posets_from(posets, n_posets)? }
            .into_iter()
            .cloned()
            .collect();
        let mut cfg = FitConfig::with_rank(rank);
        cfg.restarts = restarts;
        cfg.seed = seed;
        if max_sweeps > 0 {
            cfg.max_sweeps = max_sweeps;
        }
        let (f, report) = hals(unsafe { &(*t).inner }, &ps, &cfg)?;
        emit(out, NdFactorization { inner: f, rss: report.rss })
    })
}

/// Number of terms, or 0 for a NULL handle.
///
/// # Safety
/// `f` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ndrank_factorization_rank(f: *const NdFactorization) -> usize {
    if f.is_null() {
        0
    } else {
        unsafe { (*f).inner.rank() }
    }
}

/// Residual sum of squares reported by the fit.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ndrank_factorization_rss(f: *const NdFactorization, out: *mut f64) -> NdStatus {
    guard(|| {
        if f.is_null() {
            return Err(null("factorization"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = (*f).rss };
        Ok(())
    })
}

/// `‖T − reconstruction‖_F` against an arbitrary tensor of matching shape.
///
/// # Safety
/// `f` and `t` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ndrank_factorization_residual(
    f: *const NdFactorization,
    t: *const NdTensor,
    out: *mut f64,
) -> NdStatus {
    guard(|| {
        if f.is_null() || t.is_null() {
            return Err(null("handle"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let r = unsafe { (*f).inner.residual(&(*t).inner)? };
        unsafe { *out = r };
        Ok(())
    })
}

/// Materializes the fitted tensor as a new handle.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ndrank_factorization_reconstruct(
    f: *const NdFactorization,
    out: *mut *mut NdTensor,
) -> NdStatus {
    guard(|| {
        if f.is_null() {
            return Err(null("factorization"));
        }
        emit(out, NdTensor { inner: unsafe { (*f).inner.reconstruct() } })
    })
}

/// # Safety
/// `f` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ndrank_factorization_free(f: *mut NdFactorization) {
    if !f.is_null() {
        drop(unsafe { Box::from_raw(f) });
    }
}
