//! C ABI over `foliate`.
//!
//! Every call returns a [`FolStatus`]. On failure a message is kept per thread and can be read
//! with [`fol_last_error`]. Patterns and foliations are opaque handles owned by the caller and
//! released with their `_free` function. Array getters copy into caller buffers: pass the
//! capacity, and `FOL_STATUS_BUFFER_TOO_SMALL` comes back when it is short.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use foliate::domain::{Domain, PatternMeta, PointPattern};
use foliate::error::Error;
use foliate::foliation::{descendant_stats, FoliationResult};
use foliate::generators::{generate, GenSpec, Model};
use foliate::orders::{delta, stable_maps_for, StableMaps};
use foliate::palm::verify_identities;
use foliate::shifts::{evaluate, Closeness, ShiftKind, ShiftMap};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FolStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad parameters or an unsupported shift/domain combination.
    Config = 2,
    DimensionMismatch = 3,
    InvalidPattern = 4,
    DistanceTie = 5,
    /// Arguments outside an operation's domain, e.g. points of different foils.
    Domain = 6,
    Schema = 7,
    Io = 8,
    BufferTooSmall = 9,
    /// A Rust panic was caught at the boundary. The handle involved should be dropped.
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FolModelKind {
    Poisson = 0,
    BernoulliGrid = 1,
    PoissonCluster = 2,
}

/// Generator parameters. Only the fields of the chosen model are read.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FolModel {
    pub kind: FolModelKind,
    pub intensity: f64,
    pub p: f64,
    pub parent_intensity: f64,
    pub mark_circle_radius: f64,
    pub mark_intensity: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FolShiftKind {
    Strip = 0,
    Mnn = 1,
    NextRow = 2,
    Condenser = 3,
    MultiTypeStrip = 4,
}

/// Shift selection. `ball_radius <= 0` means the default of 1 (condenser only).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FolShift {
    pub kind: FolShiftKind,
    pub ball_radius: f64,
    /// Condenser: measure closeness along the first coordinate instead of Euclidean.
    pub first_coordinate: bool,
}

/// Opaque point pattern.
pub struct FolPattern(PointPattern);

/// Opaque result of evaluating a shift: the map, its foliation and the stable bijections.
pub struct FolFoliation {
    map: ShiftMap,
    foliation: FoliationResult,
    stable: StableMaps,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FolStatus {
    match err {
        Error::Config(_) => FolStatus::Config,
        Error::DimensionMismatch { .. } => FolStatus::DimensionMismatch,
        Error::InvalidPattern(_) => FolStatus::InvalidPattern,
        Error::DistanceTie { .. } => FolStatus::DistanceTie,
        Error::Domain(_) => FolStatus::Domain,
        Error::Schema(_) | Error::Json(_) | Error::Csv(_) => FolStatus::Schema,
        Error::Io(_) => FolStatus::Io,
    }
}

struct Fail(FolStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Fail>;

/// Run `f`, record any failure, and convert it to a status.
fn guard(f: impl FnOnce() -> FfiResult) -> FolStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FolStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            FolStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(FolStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(FolStatus::Config, format!("{what} is not UTF-8")))
}

unsafe fn fill<T: Copy>(out: *mut T, cap: usize, src: impl ExactSizeIterator<Item = T>) -> FfiResult {
    if src.len() > cap {
        return Err(Fail(FolStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", src.len())));
    }
    if src.len() > 0 && out.is_null() {
        return Err(null("output buffer"));
    }
    for (i, v) in src.enumerate() {
        *out.add(i) = v;
    }
    Ok(())
}

fn to_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(FolStatus::Schema, "string contains a NUL byte".into()))
}

unsafe fn domain_from(dim: usize, extents: *const f64, torus: bool, buffer: f64) -> FfiResult<Domain> {
    if dim == 0 {
        return Err(Fail(FolStatus::Config, "dimension must be positive".into()));
    }
    if extents.is_null() {
        return Err(null("extents"));
    }
    let ext = std::slice::from_raw_parts(extents, dim).to_vec();
    Ok(if torus { Domain::torus(ext)? } else { Domain::window(ext, buffer)? })
}

fn shift_kind(s: &FolShift) -> ShiftKind {
    match s.kind {
        FolShiftKind::Strip => ShiftKind::Strip,
        FolShiftKind::Mnn => ShiftKind::Mnn,
        FolShiftKind::NextRow => ShiftKind::NextRow,
        FolShiftKind::MultiTypeStrip => ShiftKind::MultiTypeStrip,
        FolShiftKind::Condenser => ShiftKind::Condenser {
            ball_radius: if s.ball_radius > 0.0 { s.ball_radius } else { 1.0 },
            closeness: if s.first_coordinate { Closeness::FirstCoordinate } else { Closeness::Euclidean },
        },
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn fol_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn fol_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn fol_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fol_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Simulate a pattern. `extents` holds `dim` values; `buffer` is ignored on a torus.
///
/// # Safety
/// `extents` must point to `dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fol_pattern_generate(
    model: FolModel,
    dim: usize,
    extents: *const f64,
    torus: bool,
    buffer: f64,
    seed: u64,
    out: *mut *mut FolPattern,
) -> FolStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let model = match model.kind {
            FolModelKind::Poisson => Model::Poisson { intensity: model.intensity },
            FolModelKind::BernoulliGrid => Model::BernoulliGrid { p: model.p },
            FolModelKind::PoissonCluster => Model::PoissonCluster {
                parent_intensity: model.parent_intensity,
                mark_circle_radius: model.mark_circle_radius,
                mark_intensity: model.mark_intensity,
            },
        };
        let domain = domain_from(dim, extents, torus, buffer)?;
        let p = generate(&GenSpec { model, domain, seed })?;
        *out = Box::into_raw(Box::new(FolPattern(p)));
        Ok(())
    })
}

/// Build a pattern from `n` points given point-major in `coords` (`n * dim` values).
///
/// # Safety
/// `extents` must hold `dim` doubles, `coords` `n * dim` doubles (may be NULL when `n == 0`).
#[no_mangle]
pub unsafe extern "C" fn fol_pattern_new(
    dim: usize,
    extents: *const f64,
    torus: bool,
    buffer: f64,
    coords: *const f64,
    n: usize,
    out: *mut *mut FolPattern,
) -> FolStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let domain = domain_from(dim, extents, torus, buffer)?;
        let len = n.checked_mul(dim).ok_or_else(|| Fail(FolStatus::Config, "n * dim overflows".into()))?;
        let flat = if len == 0 {
            Vec::new()
        } else if coords.is_null() {
            return Err(null("coords"));
        } else {
            std::slice::from_raw_parts(coords, len).to_vec()
        };
        let p = PointPattern::from_flat(domain, flat, PatternMeta::Plain)?;
        *out = Box::into_raw(Box::new(FolPattern(p)));
        Ok(())
    })
}

/// Parse the JSON pattern format written by the command line tool.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fol_pattern_from_json(json: *const c_char, out: *mut *mut FolPattern) -> FolStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let p = PointPattern::from_json(c_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(FolPattern(p)));
        Ok(())
    })
}

/// Serialize to JSON. Free the result with `fol_string_free`.
///
/// # Safety
/// `pattern` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fol_pattern_to_json(pattern: *const FolPattern, out: *mut *mut c_char) -> FolStatus {
    guard(|| {
        let p = borrow(pattern, "pattern")?;
        let out = out_ref(out, "out")?;
        *out = to_c_string(p.0.to_json()?)?;
        Ok(())
    })
}

/// Number of points, 0 for NULL.
///
/// # Safety
/// `pattern` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fol_pattern_len(pattern: *const FolPattern) -> usize {
    pattern.as_ref().map_or(0, |p| p.0.len())
}

/// Dimension, 0 for NULL.
///
/// # Safety
/// `pattern` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fol_pattern_dim(pattern: *const FolPattern) -> usize {
    pattern.as_ref().map_or(0, |p| p.0.dim())
}

/// Copy the point-major coordinates (`len * dim` doubles).
///
/// # Safety
/// `out` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn fol_pattern_coords(pattern: *const FolPattern, out: *mut f64, cap: usize) -> FolStatus {
    guard(|| {
        let p = borrow(pattern, "pattern")?;
        fill(out, cap, p.0.coords().iter().copied())
    })
}

/// # Safety
/// `pattern` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fol_pattern_free(pattern: *mut FolPattern) {
    if !pattern.is_null() {
        drop(Box::from_raw(pattern));
    }
}

/// Evaluate a shift on a pattern and build its foliation and stable maps.
///
/// # Safety
/// `pattern` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fol_foliate(pattern: *const FolPattern, shift: FolShift, out: *mut *mut FolFoliation) -> FolStatus {
    guard(|| {
        let p = &borrow(pattern, "pattern")?.0;
        let out = out_ref(out, "out")?;
        let map = evaluate(p, shift_kind(&shift))?;
        let foliation = FoliationResult::from_map(&map);
        let (_, stable) = stable_maps_for(p, &map, &foliation);
        *out = Box::into_raw(Box::new(FolFoliation { map, foliation, stable }));
        Ok(())
    })
}

/// Number of points, 0 for NULL.
///
/// # Safety
/// `fol` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_len(fol: *const FolFoliation) -> usize {
    fol.as_ref().map_or(0, |f| f.map.len())
}

/// # Safety
/// `fol` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_n_components(fol: *const FolFoliation) -> usize {
    fol.as_ref().map_or(0, |f| f.foliation.n_components())
}

/// # Safety
/// `fol` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_n_foils(fol: *const FolFoliation) -> usize {
    fol.as_ref().map_or(0, |f| f.foliation.n_foils)
}

/// Image of every point, -1 where censored.
///
/// # Safety
/// `out` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_images(fol: *const FolFoliation, out: *mut i64, cap: usize) -> FolStatus {
    guard(|| {
        let f = borrow(fol, "foliation")?;
        fill(out, cap, f.map.images().iter().map(|y| y.map_or(-1, |y| y as i64)))
    })
}

/// # Safety
/// `out` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_component_ids(fol: *const FolFoliation, out: *mut u64, cap: usize) -> FolStatus {
    guard(|| {
        let f = borrow(fol, "foliation")?;
        fill(out, cap, f.foliation.component_id.iter().map(|&c| c as u64))
    })
}

/// # Safety
/// `out` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_foil_ids(fol: *const FolFoliation, out: *mut u64, cap: usize) -> FolStatus {
    guard(|| {
        let f = borrow(fol, "foliation")?;
        fill(out, cap, f.foliation.foil_id.iter().map(|&c| c as u64))
    })
}

/// The foil-preserving bijection: next point of the same foil.
///
/// # Safety
/// `out` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_f_perp(fol: *const FolFoliation, out: *mut u64, cap: usize) -> FolStatus {
    guard(|| {
        let f = borrow(fol, "foliation")?;
        fill(out, cap, f.stable.f_perp.iter().map(|&c| c as u64))
    })
}

/// The component-preserving bijection: next point in succession order.
///
/// # Safety
/// `out` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_h_dense(fol: *const FolFoliation, out: *mut u64, cap: usize) -> FolStatus {
    guard(|| {
        let f = borrow(fol, "foliation")?;
        fill(out, cap, f.stable.h_dense.iter().map(|&c| c as u64))
    })
}

/// Number of `f_perp` steps from `x` to `y`; both must lie in one foil.
///
/// # Safety
/// `fol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fol_delta(fol: *const FolFoliation, x: usize, y: usize, out: *mut i64) -> FolStatus {
    guard(|| {
        let f = borrow(fol, "foliation")?;
        let out = out_ref(out, "out")?;
        *out = delta(&f.stable, x, y)?;
        Ok(())
    })
}

/// Check the counting identities for orders `1..=n_max` on the uncensored components.
/// `max_discrepancy` receives the largest `|lhs - rhs|` (0 when nothing could be checked).
///
/// # Safety
/// `fol` must be a live handle and `max_discrepancy` writable.
#[no_mangle]
pub unsafe extern "C" fn fol_verify_identities(fol: *const FolFoliation, n_max: usize, max_discrepancy: *mut f64) -> FolStatus {
    guard(|| {
        let f = borrow(fol, "foliation")?;
        let out = out_ref(max_discrepancy, "max_discrepancy")?;
        let desc = descendant_stats(&f.map, &f.foliation, n_max);
        let checks = verify_identities(&f.foliation, &desc, n_max)?;
        *out = checks.checks.iter().map(|c| c.discrepancy()).fold(0.0, f64::max);
        Ok(())
    })
}

/// Foliation as JSON (components, foil and component ids). Free with `fol_string_free`.
///
/// # Safety
/// `fol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_to_json(fol: *const FolFoliation, out: *mut *mut c_char) -> FolStatus {
    guard(|| {
        let f = borrow(fol, "foliation")?;
        let out = out_ref(out, "out")?;
        *out = to_c_string(f.foliation.to_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `fol` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fol_foliation_free(fol: *mut FolFoliation) {
    if !fol.is_null() {
        drop(Box::from_raw(fol));
    }
}
