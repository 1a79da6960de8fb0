//! C ABI for vortex-spectra.
//!
//! Every function returns a [`VsStatus`]. On failure the message is kept per
//! thread and can be read with [`vs_last_error_message`]. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::Array1;
use num_complex::Complex64;
use vortex_spectra::contfrac::CFParams;
use vortex_spectra::eigensolver::{
    count_eigenvalues_in_region, default_real_bracket, find_complex_eigenvalue, find_nu_star, find_nu_star_example3,
    find_real_eigenvalue, Region,
};
use vortex_spectra::lattice::{fiber_coefficient, DomainSpec, FiberSpec, FiberTag, LatticeVector, SingleModeState};
use vortex_spectra::manifold::{
    build_galerkin, manifold_graph, spectral_split, ChartParams, Flavor, GalerkinSystem, SpectralSplitting,
};
use vortex_spectra::presets::Example;
use vortex_spectra::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Precondition = 3,
    NoConvergence = 4,
    Bracketing = 5,
    NearBand = 6,
    SingularFiber = 7,
    Linalg = 8,
    DeltaTooLarge = 9,
    Failure = 10,
    Panic = 11,
    BufferTooSmall = 12,
}

/// Fiber class tag, numbered as in the library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsFiberTag {
    Diagonal = 0,
    DecoupledAtZero = 1,
    OutsideDisc = 2,
    ReducedSymmetric = 3,
    General = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsFlavor {
    CenterStable = 0,
    Unstable = 1,
    Stable = 2,
    Center = 3,
    CenterUnstable = 4,
}

/// One lattice fiber `{k̂ + np}` of a single-mode state at fixed viscosity.
pub struct VsFiber(FiberSpec);

/// Galerkin truncation with its spectral splitting.
pub struct VsManifold {
    sys: GalerkinSystem,
    split: SpectralSplitting,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VsStatus {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) | Error::ZeroMode => VsStatus::InvalidParameter,
        Error::Precondition(_) | Error::Classification { .. } | Error::DegenerateSplitting(_) => VsStatus::Precondition,
        Error::NoConvergence { .. } | Error::SeedDivergence { .. } | Error::Resolution { .. } => VsStatus::NoConvergence,
        Error::Bracketing { .. } => VsStatus::Bracketing,
        Error::NearBand { .. } => VsStatus::NearBand,
        Error::SingularFiber { .. } => VsStatus::SingularFiber,
        Error::Linalg(_) => VsStatus::Linalg,
        Error::DeltaTooLarge { .. } => VsStatus::DeltaTooLarge,
        Error::Io(_) => VsStatus::Failure,
    }
}

/// Runs `f`, converting errors and panics to a status and the thread's message.
fn guard(f: impl FnOnce() -> Result<(), VsStatusOr>) -> VsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            VsStatus::Ok
        }
        Ok(Err(VsStatusOr::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(VsStatusOr::Status(s, msg))) => {
            set_error(msg.into());
            s
        }
        Err(_) => {
            set_error("panic inside vortex-spectra".into());
            VsStatus::Panic
        }
    }
}

enum VsStatusOr {
    Lib(Error),
    Status(VsStatus, &'static str),
}

impl From<Error> for VsStatusOr {
    fn from(e: Error) -> Self {
        VsStatusOr::Lib(e)
    }
}

const NULL: VsStatusOr = VsStatusOr::Status(VsStatus::NullPointer, "null pointer argument");

fn example_of(id: i32) -> Result<Example, VsStatusOr> {
    match id {
        1 => Ok(Example::Example1),
        2 => Ok(Example::Example2),
        3 => Ok(Example::Example3),
        _ => Err(VsStatusOr::Status(VsStatus::InvalidParameter, "example must be 1, 2 or 3")),
    }
}

fn flavor_of(f: VsFlavor) -> Flavor {
    match f {
        VsFlavor::CenterStable => Flavor::CenterStable,
        VsFlavor::Unstable => Flavor::Unstable,
        VsFlavor::Stable => Flavor::Stable,
        VsFlavor::Center => Flavor::Center,
        VsFlavor::CenterUnstable => Flavor::CenterUnstable,
    }
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), VsStatusOr> {
    if out.is_null() {
        return Err(NULL);
    }
    out.write(v);
    Ok(())
}

unsafe fn fiber_ref<'a>(f: *const VsFiber) -> Result<&'a FiberSpec, VsStatusOr> {
    f.as_ref().map(|f| &f.0).ok_or(NULL)
}

unsafe fn manifold_ref<'a>(m: *const VsManifold) -> Result<&'a VsManifold, VsStatusOr> {
    m.as_ref().ok_or(NULL)
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn vs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bytes needed for the last error message including the terminating nul;
/// 0 when the last call on this thread succeeded.
#[no_mangle]
pub extern "C" fn vs_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes_with_nul().len()))
}

/// Copies the last error message into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn vs_last_error_message(buf: *mut c_char, len: usize) -> VsStatus {
    if buf.is_null() {
        return VsStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&b"\0"[..], |c| c.as_bytes_with_nul());
        if bytes.len() > len {
            return VsStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
        VsStatus::Ok
    })
}

/// Fiber through `(k1, k2)` of a named example (1, 2 or 3). `alpha` is used by example 1 only.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_fiber_new_example(
    example: i32,
    alpha: f64,
    k1: i64,
    k2: i64,
    nu: f64,
    out: *mut *mut VsFiber,
) -> VsStatus {
    guard(|| {
        let f = example_of(example)?.fiber(alpha, LatticeVector::new(k1, k2), nu)?;
        write(out, Box::into_raw(Box::new(VsFiber(f))))
    })
}

/// Fiber of the state `Γ e^{ip·x} + c.c.` on the `alpha` domain.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_fiber_new(
    p1: i64,
    p2: i64,
    gamma_re: f64,
    gamma_im: f64,
    alpha: f64,
    k1: i64,
    k2: i64,
    nu: f64,
    out: *mut *mut VsFiber,
) -> VsStatus {
    guard(|| {
        let state = SingleModeState::new(LatticeVector::new(p1, p2), Complex64::new(gamma_re, gamma_im))?;
        let f = FiberSpec::new(LatticeVector::new(k1, k2), state, DomainSpec::new(alpha)?, nu)?;
        write(out, Box::into_raw(Box::new(VsFiber(f))))
    })
}

/// # Safety
/// `fiber` must come from a `vs_fiber_new*` call and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn vs_fiber_free(fiber: *mut VsFiber) {
    if !fiber.is_null() {
        drop(Box::from_raw(fiber));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_fiber_class(fiber: *const VsFiber, out: *mut VsFiberTag) -> VsStatus {
    guard(|| {
        let tag = match fiber_ref(fiber)?.classify().tag {
            FiberTag::Diagonal => VsFiberTag::Diagonal,
            FiberTag::DecoupledAtZero => VsFiberTag::DecoupledAtZero,
            FiberTag::OutsideDisc => VsFiberTag::OutsideDisc,
            FiberTag::ReducedSymmetric => VsFiberTag::ReducedSymmetric,
            FiberTag::General => VsFiberTag::General,
        };
        write(out, tag)
    })
}

/// Recurrence coefficient `a_n(λ)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_fiber_coefficient(
    fiber: *const VsFiber,
    lambda_re: f64,
    lambda_im: f64,
    n: i64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> VsStatus {
    guard(|| {
        let a = fiber_coefficient(fiber_ref(fiber)?, Complex64::new(lambda_re, lambda_im), n)?;
        write(out_re, a.re)?;
        write(out_im, a.im)
    })
}

/// Positive real eigenvalue of an even-symmetric fiber. A zero-width
/// bracket (`lo == hi`) selects the default one. `out_certified` receives
/// 1 inside the analytic bound, 0 outside, −1 when no bound is known.
///
/// # Safety
/// Pointers must be valid; `out_certified` may be null.
#[no_mangle]
pub unsafe extern "C" fn vs_find_real_eigenvalue(
    fiber: *const VsFiber,
    lo: f64,
    hi: f64,
    out_lambda: *mut f64,
    out_certified: *mut i32,
) -> VsStatus {
    guard(|| {
        let f = fiber_ref(fiber)?;
        let bracket = if lo == hi { default_real_bracket(f) } else { (lo, hi) };
        let r = find_real_eigenvalue(f, bracket, &CFParams::default())?;
        write(out_lambda, r.lambda.re)?;
        if !out_certified.is_null() {
            out_certified.write(r.certified().map_or(-1, i32::from));
        }
        Ok(())
    })
}

/// Complex eigenvalue by Newton from a seed.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_find_complex_eigenvalue(
    fiber: *const VsFiber,
    seed_re: f64,
    seed_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> VsStatus {
    guard(|| {
        let r = find_complex_eigenvalue(fiber_ref(fiber)?, Complex64::new(seed_re, seed_im), &CFParams::default())?;
        write(out_re, r.lambda.re)?;
        write(out_im, r.lambda.im)
    })
}

/// Eigenvalues in `{Im λ ≥ 0, Re λ ≥ −ν, |λ+ν| ≤ 1/4}`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_count_upper_half_disc(fiber: *const VsFiber, out: *mut usize) -> VsStatus {
    guard(|| {
        let f = fiber_ref(fiber)?;
        let n = count_eigenvalues_in_region(f, &Region::upper_half_disc(f.nu), &CFParams::default())?;
        write(out, n)
    })
}

/// Critical viscosity of example 1 (`example = 1`, `alpha ∈ [0.5, 0.95]`) or example 3.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_find_nu_star(example: i32, alpha: f64, out: *mut f64) -> VsStatus {
    guard(|| {
        let p = CFParams::default();
        let r = match example_of(example)? {
            Example::Example1 => find_nu_star(alpha, &p)?,
            Example::Example3 => find_nu_star_example3(&p)?,
            Example::Example2 => {
                return Err(VsStatusOr::Status(VsStatus::InvalidParameter, "example 2 has no critical viscosity"))
            }
        };
        write(out, r.nu_star)
    })
}

/// Galerkin truncation `|k|_∞ ≤ k_max` of a named example with its spectral splitting.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_manifold_new(
    example: i32,
    alpha: f64,
    nu: f64,
    k_max: usize,
    ell: u32,
    out: *mut *mut VsManifold,
) -> VsStatus {
    guard(|| {
        let ex = example_of(example)?;
        let sys = build_galerkin(&ex.state(), &ex.domain(alpha)?, nu, k_max, ell)?;
        let split = spectral_split(&sys, None)?;
        write(out, Box::into_raw(Box::new(VsManifold { sys, split })))
    })
}

/// # Safety
/// `m` must come from [`vs_manifold_new`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn vs_manifold_free(m: *mut VsManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Coordinate dimension and the unstable, center and stable dimensions.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_manifold_dims(
    m: *const VsManifold,
    dim: *mut usize,
    m_u: *mut usize,
    m_c: *mut usize,
    m_s: *mut usize,
) -> VsStatus {
    guard(|| {
        let m = manifold_ref(m)?;
        write(dim, m.sys.dim())?;
        write(m_u, m.split.m_u)?;
        write(m_c, m.split.m_c)?;
        write(m_s, m.split.m_s)
    })
}

/// Admissible radius δ for a flavor at its default weight rate.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_manifold_delta(m: *const VsManifold, flavor: VsFlavor, out: *mut f64) -> VsStatus {
    guard(|| {
        let m = manifold_ref(m)?;
        let f = flavor_of(flavor);
        write(out, m.split.delta_for(f, m.split.default_rate(f))?)
    })
}

/// Graph value `h(base)` of a manifold chart. `base` and `out` have
/// `dim` entries; `base` must lie in the flavor's base subspace within δ.
///
/// # Safety
/// `base` and `out` must be valid for `dim` doubles; `out_contraction` may be null.
#[no_mangle]
pub unsafe extern "C" fn vs_manifold_graph(
    m: *const VsManifold,
    flavor: VsFlavor,
    base: *const f64,
    dim: usize,
    out: *mut f64,
    out_contraction: *mut f64,
) -> VsStatus {
    guard(|| {
        let m = manifold_ref(m)?;
        if base.is_null() || out.is_null() {
            return Err(NULL);
        }
        if dim != m.sys.dim() {
            return Err(VsStatusOr::Status(VsStatus::InvalidParameter, "dim does not match the truncation"));
        }
        let b = Array1::from(std::slice::from_raw_parts(base, dim).to_vec());
        let chart = manifold_graph(&m.sys, &m.split, &[b], &ChartParams::new(flavor_of(flavor)))?;
        let s = &chart.samples[0];
        ptr::copy_nonoverlapping(s.graph.as_ptr(), out, dim);
        if !out_contraction.is_null() {
            out_contraction.write(s.contraction);
        }
        Ok(())
    })
}
