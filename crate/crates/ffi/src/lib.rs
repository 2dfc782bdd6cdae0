//! C ABI for rotstokes.
//!
//! Every entry point returns an `RsStatus`. On failure the message is kept per
//! thread and can be read with `rs_last_error`. Grid fields are row-major
//! `n*n` arrays of doubles with index `i*n + j` for the point `(i, j)·period/n`.
//! Handles are created by `*_new`/`*_solve` and released by the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rotstokes::channel_solver::{solve_channel_bumpy, solve_channel_flat, ChannelGeometry, ChannelProblem, ChannelSolution};
use rotstokes::dtn_operator::{dtn_apply, dtn_symbol};
use rotstokes::grid::Torus;
use rotstokes::halfspace_solver::{solve_field, BoundaryTrace};
use rotstokes::spectral_core::{characteristic_roots, Frequency};
use rotstokes::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SingularFrequency = 3,
    Incompatible = 4,
    Geometry = 5,
    NoConvergence = 6,
    Numerical = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RsComplex {
    pub re: f64,
    pub im: f64,
}

/// Boundary trace on the torus; opaque to C.
pub struct RsHalfspace {
    trace: BoundaryTrace,
}

/// Solved channel; opaque to C.
pub struct RsChannel {
    solution: ChannelSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RsStatus {
    match e {
        Error::SingularFrequency => RsStatus::SingularFrequency,
        Error::Compatibility { .. } => RsStatus::Incompatible,
        Error::Geometry(_) => RsStatus::Geometry,
        Error::NoConvergence { .. } => RsStatus::NoConvergence,
        Error::Numerical(_) => RsStatus::Numerical,
        _ => RsStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            RsStatus::Ok
        }
        Ok(Err(Failure::Null(arg))) => {
            set_error(&format!("null pointer: {arg}"));
            RsStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(&msg);
            RsStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            RsStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, arg: &'static str) -> Result<*const T, Failure> {
    if p.is_null() { Err(Failure::Null(arg)) } else { Ok(p) }
}

fn torus(n: usize, period: f64) -> Result<Torus, Failure> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Failure::Invalid(format!("n = {n} must be a power of two, at least 2")));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Failure::Invalid(format!("period = {period} must be positive")));
    }
    Ok(Torus::new(period, n))
}

unsafe fn read_field(p: *const f64, len: usize, arg: &'static str) -> Result<Vec<f64>, Failure> {
    let p = non_null(p, arg)?;
    Ok(std::slice::from_raw_parts(p, len).to_vec())
}

unsafe fn write_field(p: *mut f64, values: &[f64], arg: &'static str) -> Result<(), Failure> {
    non_null(p, arg)?;
    std::slice::from_raw_parts_mut(p, values.len()).copy_from_slice(values);
    Ok(())
}

unsafe fn read_velocity(n: usize, u1: *const f64, u2: *const f64, u3: *const f64) -> Result<[Vec<f64>; 3], Failure> {
    Ok([read_field(u1, n * n, "u1")?, read_field(u2, n * n, "u2")?, read_field(u3, n * n, "u3")?])
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the length of the full message without NUL.
///
/// # Safety
/// `buf` is null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// The three exponents λ₁, λ₂, λ₃ with positive real part at ξ = (xi1, xi2).
///
/// # Safety
/// `out` is valid for 3 elements.
#[no_mangle]
pub unsafe extern "C" fn rs_characteristic_roots(xi1: f64, xi2: f64, out: *mut RsComplex) -> RsStatus {
    guard(|| {
        non_null(out, "out")?;
        if !(xi1.is_finite() && xi2.is_finite()) {
            return Err(Failure::Invalid("frequency must be finite".into()));
        }
        let roots = characteristic_roots(&Frequency::new(xi1, xi2));
        for (k, l) in roots.lambda.iter().enumerate() {
            *out.add(k) = RsComplex { re: l.re, im: l.im };
        }
        Ok(())
    })
}

/// DtN symbol M(ξ) as 9 entries, row-major.
///
/// # Safety
/// `out` is valid for 9 elements.
#[no_mangle]
pub unsafe extern "C" fn rs_dtn_symbol(xi1: f64, xi2: f64, out: *mut RsComplex) -> RsStatus {
    guard(|| {
        non_null(out, "out")?;
        let m = dtn_symbol(&Frequency::new(xi1, xi2))?;
        for i in 0..3 {
            for j in 0..3 {
                *out.add(3 * i + j) = RsComplex { re: m[(i, j)].re, im: m[(i, j)].im };
            }
        }
        Ok(())
    })
}

/// Half-space problem with boundary velocity (u1, u2, u3) on x₃ = 0.
///
/// # Safety
/// `u1`, `u2`, `u3` are valid for `n*n` doubles; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_halfspace_new(
    n: usize,
    period: f64,
    u1: *const f64,
    u2: *const f64,
    u3: *const f64,
    out: *mut *mut RsHalfspace,
) -> RsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = std::ptr::null_mut();
        let t = torus(n, period)?;
        let trace = BoundaryTrace::from_velocity(t, read_velocity(n, u1, u2, u3)?)?;
        trace.validate()?;
        *out = Box::into_raw(Box::new(RsHalfspace { trace }));
        Ok(())
    })
}

/// Grid size n of the handle, 0 for null.
///
/// # Safety
/// `h` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_halfspace_grid(h: *const RsHalfspace) -> usize {
    h.as_ref().map_or(0, |h| h.trace.torus.n)
}

/// Velocity and, if `p` is not null, pressure at height `x3 >= 0`.
///
/// # Safety
/// `h` is a live handle; output arrays are valid for `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn rs_halfspace_velocity(
    h: *const RsHalfspace,
    x3: f64,
    u1: *mut f64,
    u2: *mut f64,
    u3: *mut f64,
    p: *mut f64,
) -> RsStatus {
    guard(|| {
        let h = non_null(h, "handle")?.as_ref().unwrap();
        let field = solve_field(&h.trace, &[x3])?;
        for (c, (dst, arg)) in [(u1, "u1"), (u2, "u2"), (u3, "u3")].into_iter().enumerate() {
            write_field(dst, field.level_slice(c, 0), arg)?;
        }
        if !p.is_null() {
            write_field(p, field.level_slice(3, 0), "p")?;
        }
        Ok(())
    })
}

/// Traction −∂₃u + p e₃ on x₃ = 0, which is the DtN map applied to the trace.
///
/// # Safety
/// `h` is a live handle; output arrays are valid for `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn rs_halfspace_traction(h: *const RsHalfspace, t1: *mut f64, t2: *mut f64, t3: *mut f64) -> RsStatus {
    guard(|| {
        let h = non_null(h, "handle")?.as_ref().unwrap();
        let t = dtn_apply(&h.trace)?;
        write_field(t1, &t[0], "t1")?;
        write_field(t2, &t[1], "t2")?;
        write_field(t3, &t[2], "t3")
    })
}

/// # Safety
/// `h` is null or a handle from `rs_halfspace_new`, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rs_halfspace_free(h: *mut RsHalfspace) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Channel ω < x₃ < 0 with bottom `omega`, velocity (u1, u2, u3) on the bottom
/// and the transparent condition on x₃ = 0. `n_v` velocity nodes per column;
/// `tolerance` is the relative GMRES residual for non-flat bottoms.
///
/// # Safety
/// `omega`, `u1`, `u2`, `u3` are valid for `n*n` doubles; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_channel_solve(
    n: usize,
    period: f64,
    n_v: usize,
    omega: *const f64,
    u1: *const f64,
    u2: *const f64,
    u3: *const f64,
    tolerance: f64,
    out: *mut *mut RsChannel,
) -> RsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = std::ptr::null_mut();
        let t = torus(n, period)?;
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Failure::Invalid(format!("tolerance = {tolerance} must lie in (0, 1)")));
        }
        let geometry = ChannelGeometry::new(t, read_field(omega, n * n, "omega")?, n_v)?;
        let problem = ChannelProblem::new(geometry, read_velocity(n, u1, u2, u3)?)?;
        let solution = if problem.geometry.is_flat() {
            solve_channel_flat(&problem.geometry, &problem.u0)?
        } else {
            solve_channel_bumpy(&problem, tolerance)?
        };
        *out = Box::into_raw(Box::new(RsChannel { solution }));
        Ok(())
    })
}

/// Number of σ levels (the velocity nodes per column), 0 for null.
///
/// # Safety
/// `h` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_channel_levels(h: *const RsChannel) -> usize {
    h.as_ref().map_or(0, |h| h.solution.velocity.levels.len())
}

/// GMRES iterations of the solve; 0 for flat bottoms and null.
///
/// # Safety
/// `h` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rs_channel_iterations(h: *const RsChannel) -> usize {
    h.as_ref().map_or(0, |h| h.solution.diagnostics.iterations)
}

/// Velocity at σ level `level`, from 0 on the bottom to `levels - 1` on x₃ = 0.
///
/// # Safety
/// `h` is a live handle; output arrays are valid for `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn rs_channel_velocity(h: *const RsChannel, level: usize, u1: *mut f64, u2: *mut f64, u3: *mut f64) -> RsStatus {
    guard(|| {
        let h = non_null(h, "handle")?.as_ref().unwrap();
        let v = &h.solution.velocity;
        if level >= v.levels.len() {
            return Err(Failure::Invalid(format!("level {level} out of range 0..{}", v.levels.len())));
        }
        write_field(u1, v.level_slice(0, level), "u1")?;
        write_field(u2, v.level_slice(1, level), "u2")?;
        write_field(u3, v.level_slice(2, level), "u3")
    })
}

/// # Safety
/// `h` is null or a handle from `rs_channel_solve`, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rs_channel_free(h: *mut RsChannel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
