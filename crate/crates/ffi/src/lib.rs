//! C ABI over `ndkorn`.
//!
//! Domains are opaque handles created by [`ndk_domain_new`] and released
//! with [`ndk_domain_free`]. Every other call returns an [`NdkStatus`] and
//! writes results through out-pointers; on failure the message is kept per
//! thread and can be copied out with [`ndk_last_error_message`]. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use ndkorn::analysis::{c_hat, harmonic_dimension, korn_check, poincare_q_constant, sharp_constant, KornMode};
use ndkorn::solvers::EigenOptions;
use ndkorn::{random_field, unit_domain, BcMode, DomainKind, DomainMask, Error, FormField};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NdkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDomain = 3,
    DisconnectedBoundary = 4,
    HarmonicFormsPresent = 5,
    NumericalFailure = 6,
    InvariantViolation = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NdkBcMode {
    FullDirichlet = 0,
    Tangential = 1,
}

impl From<NdkBcMode> for BcMode {
    fn from(m: NdkBcMode) -> Self {
        match m {
            NdkBcMode::FullDirichlet => BcMode::FullDirichlet,
            NdkBcMode::Tangential => BcMode::Tangential,
        }
    }
}

/// Opaque domain handle.
pub struct NdkDomain {
    mask: Arc<DomainMask>,
}

/// Korn results for one vector field.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NdkKornResult {
    pub ratio: f64,
    pub identity_residual: f64,
    pub grad_norm: f64,
    pub sym_grad_norm: f64,
    pub div_norm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> NdkStatus {
    match e {
        Error::InvalidDomain(_) => NdkStatus::InvalidDomain,
        Error::DisconnectedBoundary(_) => NdkStatus::DisconnectedBoundary,
        Error::HarmonicFormsPresent(_) => NdkStatus::HarmonicFormsPresent,
        Error::InvariantViolation(_) => NdkStatus::InvariantViolation,
        Error::NumericalBreakdown(_) | Error::DecompositionFailed(_) | Error::IllPosedDeflation { .. } => {
            NdkStatus::NumericalFailure
        }
        _ => NdkStatus::InvalidArgument,
    }
}

fn fail(status: NdkStatus, msg: impl Into<String>) -> NdkStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), NdkStatus>) -> NdkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            NdkStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(NdkStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: ndkorn::Result<T>) -> Result<T, NdkStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn domain<'a>(d: *const NdkDomain) -> Result<&'a NdkDomain, NdkStatus> {
    d.as_ref().ok_or_else(|| fail(NdkStatus::NullPointer, "null domain handle"))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), NdkStatus> {
    if out.is_null() {
        return Err(fail(NdkStatus::NullPointer, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

fn options(eig_tol: f64) -> Result<EigenOptions, NdkStatus> {
    if eig_tol > 0.0 && eig_tol.is_finite() {
        Ok(EigenOptions { tol: eig_tol, ..EigenOptions::default() })
    } else {
        Err(fail(NdkStatus::InvalidArgument, format!("eigen tolerance must be positive, got {eig_tol}")))
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ndk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// without the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ndk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a stock domain (`"box"`, `"ball"`, `"annulus"`, `"shell"`,
/// `"solid_torus"`) on the unit cube with `n` vertices per axis.
///
/// # Safety
/// `kind` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ndk_domain_new(
    kind: *const c_char,
    dim: usize,
    n: usize,
    out: *mut *mut NdkDomain,
) -> NdkStatus {
    guard(|| {
        if kind.is_null() {
            return Err(fail(NdkStatus::NullPointer, "null domain kind"));
        }
        let name = CStr::from_ptr(kind).to_str().map_err(|_| fail(NdkStatus::InvalidArgument, "kind is not UTF-8"))?;
        let k = DomainKind::parse(name)
            .ok_or_else(|| fail(NdkStatus::InvalidArgument, format!("unknown domain `{name}`")))?;
        if dim == 0 {
            return Err(fail(NdkStatus::InvalidArgument, "dimension must be at least 1"));
        }
        let mask = lift(unit_domain(k, dim, n))?;
        write(out, Box::into_raw(Box::new(NdkDomain { mask: Arc::new(mask) })))
    })
}

/// Releases a handle from [`ndk_domain_new`]; null is ignored.
///
/// # Safety
/// `d` must come from [`ndk_domain_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ndk_domain_free(d: *mut NdkDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ndk_domain_num_vertices(d: *const NdkDomain, out: *mut usize) -> NdkStatus {
    guard(|| write(out, domain(d)?.mask.num_vertices()))
}

/// # Safety
/// `d` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ndk_domain_boundary_components(d: *const NdkDomain, out: *mut usize) -> NdkStatus {
    guard(|| write(out, domain(d)?.mask.boundary_components()))
}

/// Poincare constant of `q`-forms and the spectral gap ratio behind it.
///
/// # Safety
/// `d` must be a live handle; `constant` and `gap_ratio` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ndk_poincare_constant(
    d: *const NdkDomain,
    q: usize,
    mode: NdkBcMode,
    eig_tol: f64,
    constant: *mut f64,
    gap_ratio: *mut f64,
) -> NdkStatus {
    guard(|| {
        let dom = domain(d)?;
        let (c, spec) = lift(poincare_q_constant(&dom.mask, q, mode.into(), &options(eig_tol)?))?;
        if !spec.converged {
            return Err(fail(NdkStatus::NumericalFailure, "eigen solve did not converge"));
        }
        write(constant, c)?;
        write(gap_ratio, spec.gap_ratio)
    })
}

/// Number of harmonic Dirichlet `q`-forms (tangential complex).
///
/// # Safety
/// `d` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ndk_harmonic_dimension(
    d: *const NdkDomain,
    q: usize,
    eig_tol: f64,
    out: *mut usize,
) -> NdkStatus {
    guard(|| {
        let dom = domain(d)?;
        let (k, spec) = lift(harmonic_dimension(&dom.mask, q, BcMode::Tangential, &options(eig_tol)?))?;
        if !spec.converged {
            return Err(fail(NdkStatus::NumericalFailure, "eigen solve did not converge"));
        }
        write(out, k)
    })
}

/// Best constant of `|T| <= c (|sym T|^2 + |Curl T|^2)^(1/2)` and the
/// bound `c_hat = max{2, sqrt(5) c_m}`.
///
/// # Safety
/// `d` must be a live handle; `c_sharp` and `c_hat_out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ndk_sharp_constant(
    d: *const NdkDomain,
    mode: NdkBcMode,
    eig_tol: f64,
    c_sharp: *mut f64,
    c_hat_out: *mut f64,
) -> NdkStatus {
    guard(|| {
        let dom = domain(d)?;
        let opts = options(eig_tol)?;
        let (c_m, maxwell) = lift(poincare_q_constant(&dom.mask, 1, BcMode::Tangential, &opts))?;
        if maxwell.kernel_dimension > 0 {
            return Err(fail(
                NdkStatus::HarmonicFormsPresent,
                Error::HarmonicFormsPresent(maxwell.kernel_dimension).to_string(),
            ));
        }
        let sharp = lift(sharp_constant(&dom.mask, mode.into(), &opts))?;
        if !sharp.spectrum.converged || !maxwell.converged {
            return Err(fail(NdkStatus::NumericalFailure, "eigen solve did not converge"));
        }
        write(c_sharp, sharp.c_sharp)?;
        write(c_hat_out, c_hat(c_m))
    })
}

unsafe fn korn_out(report: ndkorn::analysis::KornReport, out: *mut NdkKornResult) -> Result<(), NdkStatus> {
    write(
        out,
        NdkKornResult {
            ratio: report.ratio,
            identity_residual: report.identity_residual,
            grad_norm: report.grad_norm,
            sym_grad_norm: report.sym_grad_norm,
            div_norm: report.div_norm,
        },
    )
}

/// Korn check of a caller-supplied vector field: `N` blocks of one value
/// per grid vertex, `len = N * num_vertices`. With `tangential_variant`
/// each component must be constant on the boundary; otherwise it must
/// vanish there.
///
/// # Safety
/// `d` must be a live handle, `values` must point to `len` doubles and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ndk_korn_check(
    d: *const NdkDomain,
    values: *const f64,
    len: usize,
    tangential_variant: bool,
    out: *mut NdkKornResult,
) -> NdkStatus {
    guard(|| {
        let dom = domain(d)?;
        if values.is_null() {
            return Err(fail(NdkStatus::NullPointer, "null values"));
        }
        let nv = dom.mask.num_vertices();
        let dim = dom.mask.dim();
        if len != nv * dim {
            return Err(fail(NdkStatus::InvalidArgument, format!("expected {} values, got {len}", nv * dim)));
        }
        let data = std::slice::from_raw_parts(values, len);
        let v = data
            .chunks(nv)
            .map(|c| FormField::from_fn(&dom.mask, 0, BcMode::None, |_, x| c[x]))
            .collect::<ndkorn::Result<Vec<_>>>();
        let v = lift(v)?;
        let mode = if tangential_variant { KornMode::TangentialVariant } else { KornMode::Dirichlet };
        korn_out(lift(korn_check(&v, mode))?, out)
    })
}

/// Korn check of a random Dirichlet vector field drawn from `seed`.
///
/// # Safety
/// `d` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ndk_korn_check_random(d: *const NdkDomain, seed: u64, out: *mut NdkKornResult) -> NdkStatus {
    guard(|| {
        let dom = domain(d)?;
        let n = dom.mask.dim() as u64;
        let v = (0..n)
            .map(|i| random_field(&dom.mask, 0, BcMode::FullDirichlet, seed.wrapping_mul(n).wrapping_add(i)))
            .collect::<ndkorn::Result<Vec<_>>>();
        let v = lift(v)?;
        korn_out(lift(korn_check(&v, KornMode::Dirichlet))?, out)
    })
}
