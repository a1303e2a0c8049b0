//! C ABI for the wentzell library.
//!
//! Curves and spectra are opaque heap handles released with their `_free`
//! function. Fallible calls return a [`WzStatus`]; on failure the message is
//! available from [`wz_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wentzell::bounds::{ball_eigenvalue, bound_report, BallFormula};
use wentzell::geometry2d::{build_quadrature, summarize, BoundaryCurve, TrigSeries};
use wentzell::second_order::{trace_e_closed_2d, GForm, KConvention};
use wentzell::shape_derivative::NormalPerturbation;
use wentzell::wentzell_solver::{SolverOptions, WentzellSpectrum};
use wentzell::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidCurve = 3,
    SolverFailure = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// Opaque boundary curve.
pub struct WzCurve(BoundaryCurve);

/// Opaque computed spectrum.
pub struct WzSpectrum(WentzellSpectrum);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WzBounds {
    pub lambda1: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// Smallest signed margin over the whole inequality chain.
    pub min_margin: f64,
    /// 1 if the chain holds, 0 otherwise.
    pub holds: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WzStatus {
    match e {
        Error::InvalidCurve(_)
        | Error::NonPositiveRadius(_)
        | Error::SelfIntersecting(_)
        | Error::NotStarShaped
        | Error::Degenerate(_) => WzStatus::InvalidCurve,
        Error::TooManyEigenvalues { .. } | Error::IndexOutOfRange { .. } => WzStatus::OutOfRange,
        Error::RankZero | Error::NoConvergence(_) | Error::NotDegenerate(_) | Error::NotOrthonormal(_) => {
            WzStatus::SolverFailure
        }
        _ => WzStatus::InvalidArgument,
    }
}

/// Run `f`, converting errors and panics into a status plus the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (WzStatus, String)>) -> WzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WzStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside wentzell".into());
            WzStatus::Panic
        }
    }
}

fn lib(e: Error) -> (WzStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (WzStatus, String) {
    (WzStatus::NullPointer, format!("`{name}` is null"))
}

fn solver(degree: usize, nodes: usize) -> SolverOptions {
    SolverOptions { degree, nodes, ..SolverOptions::default() }
}

fn make_curve(out: *mut *mut WzCurve, build: impl FnOnce() -> Result<BoundaryCurve, Error>) -> WzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = build().map_err(lib)?;
        // SAFETY: checked non-null; the caller provides a writable slot.
        unsafe { *out = Box::into_raw(Box::new(WzCurve(c))) };
        Ok(())
    })
}

fn positive(name: &str, v: f64) -> Result<(), Error> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {v} must be positive")))
    }
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Disk of radius `radius`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wz_curve_circle(radius: f64, out: *mut *mut WzCurve) -> WzStatus {
    make_curve(out, || {
        positive("radius", radius)?;
        Ok(BoundaryCurve::circle(radius))
    })
}

/// Ellipse with semi-axes `a`, `b`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wz_curve_ellipse(a: f64, b: f64, out: *mut *mut WzCurve) -> WzStatus {
    make_curve(out, || {
        positive("a", a)?;
        positive("b", b)?;
        Ok(BoundaryCurve::ellipse(a, b))
    })
}

/// Star domain `ρ(θ) = a(2 + cos kθ)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wz_curve_star(k: u32, a: f64, out: *mut *mut WzCurve) -> WzStatus {
    make_curve(out, || {
        positive("a", a)?;
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        Ok(BoundaryCurve::star(k as usize, a))
    })
}

/// Unit-area stadium of width `eps`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wz_curve_stadium(eps: f64, out: *mut *mut WzCurve) -> WzStatus {
    make_curve(out, || {
        positive("eps", eps)?;
        Ok(BoundaryCurve::stadium(eps))
    })
}

/// Polar curve `ρ(θ) = a0 + Σ_{k=1}^{n} (cos_k cos kθ + sin_k sin kθ)`.
///
/// # Safety
/// `cos_coeffs` and `sin_coeffs` must each point to `n` readable doubles (either may be null when `n` is 0);
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wz_curve_polar(
    a0: f64,
    cos_coeffs: *const f64,
    sin_coeffs: *const f64,
    n: usize,
    out: *mut *mut WzCurve,
) -> WzStatus {
    if n > 0 && (cos_coeffs.is_null() || sin_coeffs.is_null()) {
        set_error("coefficient arrays are null".into());
        return WzStatus::NullPointer;
    }
    let (c, s) = if n == 0 {
        (&[][..], &[][..])
    } else {
        // SAFETY: the caller guarantees `n` readable doubles behind each pointer.
        unsafe { (std::slice::from_raw_parts(cos_coeffs, n), std::slice::from_raw_parts(sin_coeffs, n)) }
    };
    make_curve(out, || {
        let mut rho = TrigSeries::constant(a0);
        for k in 0..n {
            rho.set_mode(k + 1, c[k], s[k]);
        }
        Ok(BoundaryCurve::polar(rho))
    })
}

/// Rescale `curve` in place so its area equals `area`.
///
/// # Safety
/// `curve` must be a live handle from one of the `wz_curve_*` constructors.
#[no_mangle]
pub unsafe extern "C" fn wz_curve_set_area(curve: *mut WzCurve, area: f64) -> WzStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live, exclusively borrowed handle.
        let c = unsafe { curve.as_mut() }.ok_or_else(|| null("curve"))?;
        positive("area", area).map_err(lib)?;
        c.0 = c.0.clone().with_area(area).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wz_curve_area(curve: *const WzCurve, out: *mut f64) -> WzStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle.
        let c = unsafe { curve.as_ref() }.ok_or_else(|| null("curve"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let a = c.0.area().map_err(lib)?;
        // SAFETY: checked non-null.
        unsafe { *out = a };
        Ok(())
    })
}

/// # Safety
/// `curve` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wz_curve_free(curve: *mut WzCurve) {
    if !curve.is_null() {
        // SAFETY: the handle came from `Box::into_raw` and is freed once.
        drop(unsafe { Box::from_raw(curve) });
    }
}

fn compute(curve: *const WzCurve, beta: f64, opts: SolverOptions, out: *mut *mut WzSpectrum) -> WzStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle.
        let c = unsafe { curve.as_ref() }.ok_or_else(|| null("curve"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(beta >= 0.0) {
            return Err(lib(Error::InvalidArgument(format!("beta = {beta} must be non-negative"))));
        }
        let q = build_quadrature(&c.0, opts.nodes).map_err(lib)?;
        let s = WentzellSpectrum::compute(&q, beta, &opts).map_err(lib)?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(WzSpectrum(s))) };
        Ok(())
    })
}

/// Solve the Wentzell eigenproblem on `curve` with a basis of degree `degree`
/// and `nodes ≥ 8·degree` boundary nodes.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wz_spectrum_compute(
    curve: *const WzCurve,
    beta: f64,
    degree: usize,
    nodes: usize,
    out: *mut *mut WzSpectrum,
) -> WzStatus {
    compute(curve, beta, solver(degree, nodes), out)
}

/// Solve with the boundary-integral method on `nodes` (even) equispaced
/// nodes; smooth curves only. Preferred for strongly non-convex curves.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wz_spectrum_compute_nystrom(
    curve: *const WzCurve,
    beta: f64,
    nodes: usize,
    out: *mut *mut WzSpectrum,
) -> WzStatus {
    compute(curve, beta, SolverOptions::nystrom(nodes), out)
}

/// Number of resolved eigenvalues, or 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wz_spectrum_len(spec: *const WzSpectrum) -> usize {
    // SAFETY: the caller guarantees null or a live handle.
    unsafe { spec.as_ref() }.map_or(0, |s| s.0.len())
}

/// Eigenvalue `k` (0-based, ascending; index 0 is the constant mode).
///
/// # Safety
/// `spec` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wz_spectrum_eigenvalue(spec: *const WzSpectrum, k: usize, out: *mut f64) -> WzStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle.
        let s = unsafe { spec.as_ref() }.ok_or_else(|| null("spec"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = s.0.eigenvalue(k).map_err(lib)?;
        // SAFETY: checked non-null.
        unsafe { *out = v };
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wz_spectrum_free(spec: *mut WzSpectrum) {
    if !spec.is_null() {
        // SAFETY: the handle came from `Box::into_raw` and is freed once.
        drop(unsafe { Box::from_raw(spec) });
    }
}

/// `λ₁` and the upper bounds `M1 ≤ M2 ≤ M3` for `curve`.
///
/// # Safety
/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wz_bounds(
    curve: *const WzCurve,
    beta: f64,
    degree: usize,
    nodes: usize,
    out: *mut WzBounds,
) -> WzStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle.
        let c = unsafe { curve.as_ref() }.ok_or_else(|| null("curve"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let q = build_quadrature(&c.0, nodes).map_err(lib)?;
        let s = WentzellSpectrum::compute(&q, beta, &solver(degree, nodes)).map_err(lib)?;
        let r = bound_report(&s, &summarize(&c.0, &q), beta).map_err(lib)?;
        let b = WzBounds {
            lambda1: r.lambda1,
            m1: r.bounds.m1,
            m2: r.bounds.m2,
            m3: r.bounds.m3,
            min_margin: r.margins.iter().map(|m| m.margin()).fold(f64::INFINITY, f64::min),
            holds: r.holds() as i32,
        };
        // SAFETY: checked non-null.
        unsafe { *out = b };
        Ok(())
    })
}

/// Eigenvalue of the ball of radius `r` in dimension `d` carried by harmonics of order `l`.
#[no_mangle]
pub extern "C" fn wz_ball_eigenvalue(l: u32, d: u32, beta: f64, r: f64) -> f64 {
    ball_eigenvalue(l as usize, d as usize, beta, r, BallFormula::default())
}

/// Closed-form second derivative of `λ₁ + λ₂` at the disk of radius `r` along
/// the area-preserving deformation with normal velocity `cos lθ`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wz_second_order_trace(l: u32, beta: f64, r: f64, out: *mut f64) -> WzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = NormalPerturbation::planar(TrigSeries::mode(l as usize, 1.0, 0.0));
        let t = trace_e_closed_2d(&v, beta, r, GForm::Derived, KConvention::PerMode).map_err(lib)?;
        // SAFETY: checked non-null.
        unsafe { *out = t };
        Ok(())
    })
}
