//! C ABI for `opmlab`.
//!
//! Objects cross the boundary as opaque handles created by `opm_*_new`-style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns an [`OpmStatus`]; on failure the message is available from
//! [`opm_last_error_message`] on the same thread. Panics are caught and reported
//! as [`OpmStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use opmlab::szego::szego_function_unnormalized;
use opmlab::{Complex64, CurveGeometry, DiscreteMeasure, Error, OpmOptions, OpmSolution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGeometry = 3,
    /// The point is inside the curve or below the admissible radius.
    OutsideDomain = 4,
    CurveRequired = 5,
    EmptySupport = 6,
    RankDeficient = 7,
    IllConditioned = 8,
    NotOptimal = 9,
    /// The solver hit its iteration cap. A solution handle is still returned.
    MaxIters = 10,
    NoConvergence = 11,
    TooCloseToBoundary = 12,
    NotSzegoClass = 13,
    /// Caller buffer is too small; nothing was written.
    BufferTooSmall = 14,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpmComplex {
    pub re: f64,
    pub im: f64,
}

impl From<OpmComplex> for Complex64 {
    fn from(z: OpmComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for OpmComplex {
    fn from(z: Complex64) -> Self {
        OpmComplex { re: z.re, im: z.im }
    }
}

/// Summary of a solved optimal prediction measure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpmSolutionInfo {
    pub degree: usize,
    pub objective: f64,
    pub certificate_gap: f64,
    pub iterations: usize,
    pub support_size: usize,
    pub grid_size: usize,
}

/// Opaque boundary geometry.
pub struct OpmGeometry(CurveGeometry);

/// Opaque discrete probability measure.
pub struct OpmMeasure(DiscreteMeasure);

/// Opaque solver result.
pub struct OpmSolutionHandle(OpmSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(e: &Error) -> OpmStatus {
    match e {
        Error::InvalidGeometry(_) => OpmStatus::InvalidGeometry,
        Error::InvalidArgument(_) => OpmStatus::InvalidArgument,
        Error::NoConvergence { .. } => OpmStatus::NoConvergence,
        Error::InsideDomain { .. } | Error::DomainViolation { .. } => OpmStatus::OutsideDomain,
        Error::CurveRequired(_) => OpmStatus::CurveRequired,
        Error::EmptySupport => OpmStatus::EmptySupport,
        Error::RankDeficient { .. } => OpmStatus::RankDeficient,
        Error::IllConditioned { .. } => OpmStatus::IllConditioned,
        Error::NotOptimal { .. } => OpmStatus::NotOptimal,
        Error::MaxItersExceeded(_) => OpmStatus::MaxIters,
        Error::TooCloseToBoundary { .. } => OpmStatus::TooCloseToBoundary,
        Error::NotSzegoClass { .. } => OpmStatus::NotSzegoClass,
    }
}

struct Fail(OpmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(OpmStatus::NullPointer, format!("`{name}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OpmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            OpmStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {message}"));
            OpmStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or_else(|| null(name))
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn output<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { slice::from_raw_parts_mut(p, len) })
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    unsafe { *out = value };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length including the NUL,
/// or 0 when there is no error.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn opm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(message) = slot.as_ref() else {
            return 0;
        };
        let bytes = message.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len()
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_geometry_circle(out: *mut *mut OpmGeometry) -> OpmStatus {
    guard(|| unsafe { store(out, OpmGeometry(CurveGeometry::unit_circle())) })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_geometry_interval(out: *mut *mut OpmGeometry) -> OpmStatus {
    guard(|| unsafe { store(out, OpmGeometry(CurveGeometry::interval())) })
}

/// Ellipse with semi-axes `a > b > 0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_geometry_ellipse(a: f64, b: f64, out: *mut *mut OpmGeometry) -> OpmStatus {
    guard(|| {
        let geom = CurveGeometry::ellipse(a, b)?;
        unsafe { store(out, OpmGeometry(geom)) }
    })
}

/// Curve with exterior map `capacity * w + center + sum_k tail[k-1] w^-k`.
///
/// # Safety
/// `tail` must point to `tail_len` values (or be null when `tail_len` is 0);
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_geometry_laurent(
    capacity: f64,
    center: OpmComplex,
    tail: *const OpmComplex,
    tail_len: usize,
    out: *mut *mut OpmGeometry,
) -> OpmStatus {
    guard(|| {
        let tail = unsafe { input(tail, tail_len, "tail")? };
        let geom = CurveGeometry::laurent(capacity, center.into(), tail.iter().map(|&c| c.into()).collect())?;
        unsafe { store(out, OpmGeometry(geom)) }
    })
}

/// # Safety
/// `geom` must come from an `opm_geometry_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opm_geometry_free(geom: *mut OpmGeometry) {
    if !geom.is_null() {
        drop(unsafe { Box::from_raw(geom) });
    }
}

/// Exterior conformal map `Phi(z)`.
///
/// # Safety
/// `geom` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_exterior_map(geom: *const OpmGeometry, z: OpmComplex, out: *mut OpmComplex) -> OpmStatus {
    guard(|| {
        let geom = unsafe { deref(geom, "geom")? };
        let w = opmlab::exterior_map(&geom.0, z.into())?;
        unsafe { write(out, w.into(), "out") }
    })
}

/// Writes `m` boundary nodes into `nodes`.
///
/// # Safety
/// `geom` must be a live handle and `nodes` valid for `m` writes.
#[no_mangle]
pub unsafe extern "C" fn opm_discretize_boundary(
    geom: *const OpmGeometry,
    m: usize,
    nodes: *mut OpmComplex,
) -> OpmStatus {
    guard(|| {
        let geom = unsafe { deref(geom, "geom")? };
        if m == 0 {
            return Err(Fail(OpmStatus::InvalidArgument, "grid size must be positive".into()));
        }
        let out = unsafe { output(nodes, m, "nodes")? };
        for (slot, z) in out.iter_mut().zip(opmlab::discretize_boundary(&geom.0, m)) {
            *slot = z.into();
        }
        Ok(())
    })
}

/// Probability measure from nodes and nonnegative weights (normalized to mass 1).
///
/// # Safety
/// `nodes` and `weights` must point to `len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_measure_new(
    nodes: *const OpmComplex,
    weights: *const f64,
    len: usize,
    out: *mut *mut OpmMeasure,
) -> OpmStatus {
    guard(|| {
        let nodes = unsafe { input(nodes, len, "nodes")? };
        let weights = unsafe { input(weights, len, "weights")? };
        let mu = DiscreteMeasure::from_unnormalized(nodes.iter().map(|&z| z.into()).collect(), weights.to_vec())?;
        unsafe { store(out, OpmMeasure(mu)) }
    })
}

/// Discretized balayage of the point mass at `z0` onto the boundary (closed curves).
///
/// # Safety
/// `geom` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_measure_balayage(
    geom: *const OpmGeometry,
    z0: OpmComplex,
    m: usize,
    out: *mut *mut OpmMeasure,
) -> OpmStatus {
    guard(|| {
        let geom = unsafe { deref(geom, "geom")? };
        let mu = opmlab::balayage_point_mass(&geom.0, z0.into(), m)?;
        unsafe { store(out, OpmMeasure(mu)) }
    })
}

/// Number of atoms in the measure; 0 for a null handle.
///
/// # Safety
/// `mu` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opm_measure_len(mu: *const OpmMeasure) -> usize {
    unsafe { mu.as_ref() }.map_or(0, |mu| mu.0.len())
}

/// Copies atoms into caller buffers of capacity `len`.
///
/// # Safety
/// `mu` must be a live handle; `nodes` and `weights` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn opm_measure_copy(
    mu: *const OpmMeasure,
    nodes: *mut OpmComplex,
    weights: *mut f64,
    len: usize,
) -> OpmStatus {
    guard(|| {
        let mu = unsafe { deref(mu, "mu")? };
        let n = mu.0.len();
        if len < n {
            return Err(Fail(OpmStatus::BufferTooSmall, format!("buffer holds {len} atoms, measure has {n}")));
        }
        let nodes = unsafe { output(nodes, n, "nodes")? };
        let weights = unsafe { output(weights, n, "weights")? };
        for (k, (z, w)) in mu.0.iter().enumerate() {
            nodes[k] = z.into();
            weights[k] = w;
        }
        Ok(())
    })
}

/// # Safety
/// `mu` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opm_measure_free(mu: *mut OpmMeasure) {
    if !mu.is_null() {
        drop(unsafe { Box::from_raw(mu) });
    }
}

/// Bergman function `B_n(mu, z)` and Christoffel function `1 / B_n`.
///
/// # Safety
/// `mu` must be a live handle; the outputs must be valid for writes or null.
#[no_mangle]
pub unsafe extern "C" fn opm_bergman(
    mu: *const OpmMeasure,
    n: usize,
    z: OpmComplex,
    bergman: *mut f64,
    christoffel: *mut f64,
) -> OpmStatus {
    guard(|| {
        let mu = unsafe { deref(mu, "mu")? };
        let eval = opmlab::bergman_function(&mu.0, n, z.into())?;
        if !bergman.is_null() {
            unsafe { *bergman = eval.bergman };
        }
        if !christoffel.is_null() {
            unsafe { *christoffel = eval.christoffel };
        }
        Ok(())
    })
}

/// Solves for the optimal prediction measure of degree `n` at `z0` on the grid.
///
/// `gap_tol <= 0` or `max_iters == 0` selects the default. On
/// [`OpmStatus::MaxIters`] the best iterate is still stored in `out`.
///
/// # Safety
/// `grid` must point to `m` nodes and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_solve(
    grid: *const OpmComplex,
    m: usize,
    z0: OpmComplex,
    n: usize,
    gap_tol: f64,
    max_iters: usize,
    out: *mut *mut OpmSolutionHandle,
) -> OpmStatus {
    let mut partial = None;
    let status = guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let grid: Vec<Complex64> = unsafe { input(grid, m, "grid")? }.iter().map(|&z| z.into()).collect();
        let mut opts = OpmOptions::default();
        if gap_tol > 0.0 {
            opts.gap_tol = gap_tol;
        }
        if max_iters > 0 {
            opts.max_iters = max_iters;
        }
        match opmlab::solve_opm(&grid, z0.into(), n, &opts) {
            Ok(sol) => unsafe { store(out, OpmSolutionHandle(sol)) },
            Err(Error::MaxItersExceeded(sol)) => {
                let fail = Fail(
                    OpmStatus::MaxIters,
                    format!("iteration cap reached with certificate gap {:e}", sol.certificate_gap),
                );
                partial = Some(*sol);
                Err(fail)
            }
            Err(e) => Err(e.into()),
        }
    });
    if let Some(sol) = partial {
        unsafe { *out = Box::into_raw(Box::new(OpmSolutionHandle(sol))) };
    }
    status
}

/// # Safety
/// `sol` must be a live handle and `info` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_solution_info(sol: *const OpmSolutionHandle, info: *mut OpmSolutionInfo) -> OpmStatus {
    guard(|| {
        let sol = &unsafe { deref(sol, "sol")? }.0;
        let value = OpmSolutionInfo {
            degree: sol.degree,
            objective: sol.objective,
            certificate_gap: sol.certificate_gap,
            iterations: sol.iterations,
            support_size: sol.support.len(),
            grid_size: sol.measure.len(),
        };
        unsafe { write(info, value, "info") }
    })
}

/// Copies the solution measure into a new measure handle.
///
/// # Safety
/// `sol` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn opm_solution_measure(sol: *const OpmSolutionHandle, out: *mut *mut OpmMeasure) -> OpmStatus {
    guard(|| {
        let sol = unsafe { deref(sol, "sol")? };
        unsafe { store(out, OpmMeasure(sol.0.measure.clone())) }
    })
}

/// # Safety
/// `sol` must come from [`opm_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opm_solution_free(sol: *mut OpmSolutionHandle) {
    if !sol.is_null() {
        drop(unsafe { Box::from_raw(sol) });
    }
}

/// Szego function `D(f, z)` and `lambda_inf = (1 - |z|^2) |D|^2` for a density
/// sampled at `len` equispaced angles, taken with respect to `dtheta / 2pi`.
///
/// # Safety
/// `values` must point to `len` values; the outputs must be valid for writes or null.
#[no_mangle]
pub unsafe extern "C" fn opm_szego(
    values: *const f64,
    len: usize,
    z: OpmComplex,
    szego: *mut OpmComplex,
    lambda_inf: *mut f64,
) -> OpmStatus {
    guard(|| {
        let values = unsafe { input(values, len, "values")? };
        let eval = szego_function_unnormalized(values, z.into())?;
        if !szego.is_null() {
            unsafe { *szego = eval.szego_value.into() };
        }
        if !lambda_inf.is_null() {
            unsafe { *lambda_inf = eval.lambda_inf };
        }
        Ok(())
    })
}
