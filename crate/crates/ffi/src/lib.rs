//! C ABI for the plaquette lattice averaging library.
//!
//! The surface is deliberately small: construct catalogue stencils,
//! read their exact weights as `p/q` strings, compose them, and run
//! the family coherence and hat refinement checks.
//!
//! Conventions:
//!
//! * Every fallible call returns a [`PqStatus`]; `PQ_STATUS_OK` is 0.
//! * On any failure the call stores a message retrievable with
//!   [`pq_last_error`] until the next failure on the same thread.
//! * Out-parameters are written only on `PQ_STATUS_OK`.
//! * Handles from `pq_stencil_new` / `pq_compose` are owned by the
//!   caller and released with [`pq_stencil_free`]; strings from
//!   [`pq_stencil_weight`] are released with [`pq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use plaquette::engine::compose;
use plaquette::coherence::{admissible_pairs, verify_family_coherence};
use plaquette::continuum::hat_refinement_check;
use plaquette::rational::format_rat;
use plaquette::{SchemeKind, StencilFamily, WeightStencil};

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqStatus {
    /// The call succeeded and all out-parameters are valid.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The arguments name no valid object: unknown scheme, factor or
    /// dimension the scheme does not admit, mismatched operands.
    Domain = 3,
    /// The library failed internally; the last-error message has detail.
    Internal = 4,
}

/// Opaque handle to an exact weight stencil.
pub struct PqStencil {
    inner: WeightStencil,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: PqStatus, message: impl Into<Vec<u8>>) -> PqStatus {
    let text = CString::new(message).unwrap_or_else(|_| {
        CString::new("error message contained an interior nul byte").unwrap()
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
    status
}

fn guarded(body: impl FnOnce() -> PqStatus) -> PqStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(PqStatus::Internal, "internal panic"),
    }
}

/// Reads a caller string argument, mapping null and bad encodings to
/// the matching status.
///
/// # Safety
/// `ptr` must be null or point to a nul-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, PqStatus> {
    if ptr.is_null() {
        return Err(fail(PqStatus::NullArgument, "string argument is null"));
    }
    // SAFETY: non-null per the check above; nul-terminated per this
    // function's contract.
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| fail(PqStatus::InvalidUtf8, "string argument is not valid UTF-8"))
}

fn family(scheme: &str, dim: usize) -> Result<StencilFamily, PqStatus> {
    let kind: SchemeKind = scheme
        .parse()
        .map_err(|e| fail(PqStatus::Domain, format!("{e}")))?;
    StencilFamily::new(kind, dim).map_err(|e| fail(PqStatus::Domain, format!("{e}")))
}

/// Message describing the most recent failure on this thread, or null
/// if no call has failed yet. The pointer stays valid until the next
/// failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn pq_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Builds the weight stencil of catalogue scheme `scheme` at refinement
/// factor `d` in dimension `dim` and stores an owned handle in `out`.
///
/// # Safety
/// `scheme` must be null or nul-terminated; `out` must be null or
/// valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pq_stencil_new(
    scheme: *const c_char,
    d: i64,
    dim: usize,
    out: *mut *mut PqStencil,
) -> PqStatus {
    guarded(|| {
        if out.is_null() {
            return fail(PqStatus::NullArgument, "out pointer is null");
        }
        // SAFETY: read_str's contract is this function's contract.
        let scheme = match unsafe { read_str(scheme) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let stencil = match family(scheme, dim).and_then(|f| {
            f.stencil(d).map_err(|e| fail(PqStatus::Domain, format!("{e}")))
        }) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let handle = Box::into_raw(Box::new(PqStencil { inner: stencil }));
        // SAFETY: out is non-null per the check above and valid for a
        // write per this function's contract.
        unsafe { *out = handle };
        PqStatus::Ok
    })
}

/// Releases a stencil handle. Null is accepted and ignored.
///
/// # Safety
/// `stencil` must be null or a handle from this interface that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn pq_stencil_free(stencil: *mut PqStencil) {
    if !stencil.is_null() {
        // SAFETY: the handle was created by Box::into_raw in this
        // module and ownership returns here exactly once.
        drop(unsafe { Box::from_raw(stencil) });
    }
}

/// Refinement factor of the stencil, or 0 if the handle is null.
///
/// # Safety
/// `stencil` must be null or a live handle from this interface.
#[no_mangle]
pub unsafe extern "C" fn pq_stencil_factor(stencil: *const PqStencil) -> i64 {
    if stencil.is_null() {
        return 0;
    }
    // SAFETY: non-null live handle per this function's contract.
    unsafe { &*stencil }.inner.factor()
}

/// Lattice dimension of the stencil, or 0 if the handle is null.
///
/// # Safety
/// `stencil` must be null or a live handle from this interface.
#[no_mangle]
pub unsafe extern "C" fn pq_stencil_dim(stencil: *const PqStencil) -> usize {
    if stencil.is_null() {
        return 0;
    }
    // SAFETY: non-null live handle per this function's contract.
    unsafe { &*stencil }.inner.dim()
}

/// Number of offsets carrying nonzero weight, or 0 if the handle is
/// null.
///
/// # Safety
/// `stencil` must be null or a live handle from this interface.
#[no_mangle]
pub unsafe extern "C" fn pq_stencil_support_size(stencil: *const PqStencil) -> usize {
    if stencil.is_null() {
        return 0;
    }
    // SAFETY: non-null live handle per this function's contract.
    unsafe { &*stencil }.inner.support_size()
}

/// Writes the exact weight at `offset` (a `dim`-long array) as a
/// freshly allocated `p/q` string. Offsets outside the support yield
/// "0/1". Release the string with [`pq_string_free`].
///
/// # Safety
/// `stencil` must be a live handle or null; `offset` must be null or
/// point to `dim` readable values; `out` must be null or valid for one
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn pq_stencil_weight(
    stencil: *const PqStencil,
    offset: *const i64,
    dim: usize,
    out: *mut *mut c_char,
) -> PqStatus {
    guarded(|| {
        if stencil.is_null() || offset.is_null() || out.is_null() {
            return fail(PqStatus::NullArgument, "stencil, offset, and out must be non-null");
        }
        // SAFETY: non-null live handle per this function's contract.
        let stencil = unsafe { &*stencil };
        if dim != stencil.inner.dim() {
            return fail(
                PqStatus::Domain,
                format!("offset has {dim} axes, stencil has {}", stencil.inner.dim()),
            );
        }
        // SAFETY: offset points to dim readable values per this
        // function's contract.
        let offset = unsafe { std::slice::from_raw_parts(offset, dim) };
        let text = format_rat(&stencil.inner.weight_at(offset));
        let cstring = match CString::new(text) {
            Ok(s) => s,
            Err(_) => return fail(PqStatus::Internal, "weight string contained a nul byte"),
        };
        // SAFETY: out is non-null per the check above and valid for a
        // write per this function's contract.
        unsafe { *out = cstring.into_raw() };
        PqStatus::Ok
    })
}

/// Releases a string returned by this interface. Null is accepted and
/// ignored.
///
/// # Safety
/// `s` must be null or a string from this interface that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn pq_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the string was created by CString::into_raw in this
        // module and ownership returns here exactly once.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Composes two stencils (`outer` applied after `inner`) into a new
/// owned handle whose factor is the product of the two.
///
/// # Safety
/// `outer` and `inner` must be live handles or null; `out` must be
/// null or valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pq_compose(
    outer: *const PqStencil,
    inner: *const PqStencil,
    out: *mut *mut PqStencil,
) -> PqStatus {
    guarded(|| {
        if outer.is_null() || inner.is_null() || out.is_null() {
            return fail(PqStatus::NullArgument, "outer, inner, and out must be non-null");
        }
        // SAFETY: non-null live handles per this function's contract.
        let (outer, inner) = unsafe { (&*outer, &*inner) };
        let composed = match compose(&outer.inner, &inner.inner) {
            Ok(s) => s,
            Err(e) => return fail(PqStatus::Domain, format!("{e}")),
        };
        let handle = Box::into_raw(Box::new(PqStencil { inner: composed }));
        // SAFETY: out is non-null per the check above and valid for a
        // write per this function's contract.
        unsafe { *out = handle };
        PqStatus::Ok
    })
}

/// Checks the composition law for a catalogue scheme over every
/// admissible ordered factor pair with both factors at most
/// `max_factor`, comparing exact weights. Writes the verdict to
/// `out_coherent`.
///
/// # Safety
/// `scheme` must be null or nul-terminated; `out_coherent` must be
/// null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pq_family_coherent(
    scheme: *const c_char,
    dim: usize,
    max_factor: i64,
    out_coherent: *mut bool,
) -> PqStatus {
    guarded(|| {
        if out_coherent.is_null() {
            return fail(PqStatus::NullArgument, "out pointer is null");
        }
        if max_factor < 1 {
            return fail(PqStatus::Domain, "max_factor must be at least 1");
        }
        // SAFETY: read_str's contract is this function's contract.
        let scheme = match unsafe { read_str(scheme) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let family = match family(scheme, dim) {
            Ok(f) => f,
            Err(status) => return status,
        };
        let pairs = admissible_pairs(&family, 1, max_factor);
        let report = match verify_family_coherence(&family, &pairs) {
            Ok(r) => r,
            Err(e) => return fail(PqStatus::Domain, format!("{e}")),
        };
        // SAFETY: out_coherent is non-null per the check above and
        // valid for a write per this function's contract.
        unsafe { *out_coherent = report.coherent() };
        PqStatus::Ok
    })
}

/// Checks the two-scale refinement identity of the triangular kernel
/// at factor `d` and writes the verdict to `out_holds`.
///
/// # Safety
/// `out_holds` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pq_hat_refinement_check(d: i64, out_holds: *mut bool) -> PqStatus {
    guarded(|| {
        if out_holds.is_null() {
            return fail(PqStatus::NullArgument, "out pointer is null");
        }
        let holds = match hat_refinement_check(d) {
            Ok(h) => h,
            Err(e) => return fail(PqStatus::Domain, format!("{e}")),
        };
        // SAFETY: out_holds is non-null per the check above and valid
        // for a write per this function's contract.
        unsafe { *out_holds = holds };
        PqStatus::Ok
    })
}
