//! C ABI over the `semitrotter` core library.
//!
//! Objects are handed out as opaque pointers (`StMatrix`, `StPlan`,
//! `StExpr`) that the caller releases with the matching `*_free`. Every
//! fallible call returns an [`StStatus`]; on failure the message is
//! available from [`st_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use semitrotter::experiments::{run, write_outputs, ExperimentKind, RunConfig};
use semitrotter::expr::{parse_expr, Expr};
use semitrotter::linalg::{commutator, spectral_norm};
use semitrotter::model::{build_a, build_b, ModelParams};
use semitrotter::splitting::{exact_unitary, suzuki_plan, Splitting, StagePlan};
use semitrotter::{ComplexMatrix, Error, Grid, SchemeKind, C64};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Config = 4,
    DimensionMismatch = 5,
    NoConvergence = 6,
    NotHermitian = 7,
    Io = 8,
    /// A verification run found violations.
    VerificationFailed = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StScheme {
    FiniteDifference = 0,
    Spectral = 1,
}

impl From<StScheme> for SchemeKind {
    fn from(s: StScheme) -> Self {
        match s {
            StScheme::FiniteDifference => SchemeKind::FiniteDifference,
            StScheme::Spectral => SchemeKind::Spectral,
        }
    }
}

/// Dense complex matrix.
pub struct StMatrix(ComplexMatrix);
/// Splitting plan (stage coefficients and generators).
pub struct StPlan(StagePlan);
/// Parsed expression in `x`.
pub struct StExpr(Expr);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> StStatus {
    match e {
        Error::Parse(_) | Error::Eval(_) => StStatus::Parse,
        Error::Config(_) => StStatus::Config,
        Error::InvalidGrid(_) | Error::InvalidParameter(_) => StStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => StStatus::DimensionMismatch,
        Error::NoConvergence { .. } => StStatus::NoConvergence,
        Error::NotHermitian { .. } => StStatus::NotHermitian,
        Error::Io(_) | Error::Csv(_) => StStatus::Io,
    }
}

struct Failure(StStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(StStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> StStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            StStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(StStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn st_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn st_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses an expression such as `"cos(x) + 0.5*x^2"`.
///
/// # Safety
/// `source` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_expr_parse(source: *const c_char, out: *mut *mut StExpr) -> StStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let e = parse_expr(str_arg(source, "source")?).map_err(Error::from)?;
        *out = boxed(StExpr(e));
        Ok(())
    })
}

/// # Safety
/// `e` must come from [`st_expr_parse`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_expr_eval(e: *const StExpr, x: f64, out: *mut f64) -> StStatus {
    guard(|| {
        let v = in_arg(e, "expr")?.0.eval(x).map_err(Error::from)?;
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// # Safety
/// `e` must come from [`st_expr_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn st_expr_free(e: *mut StExpr) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Builds a `rows × cols` matrix from `2·rows·cols` doubles holding
/// interleaved real and imaginary parts in row-major order.
///
/// # Safety
/// `data` must point to `2·rows·cols` readable doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut StMatrix,
) -> StStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(StStatus::InvalidArgument, "matrix size overflows".into()))?;
        if data.is_null() {
            return Err(null("data"));
        }
        let raw = std::slice::from_raw_parts(data, 2 * len);
        let values = raw.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
        *out = boxed(StMatrix(ComplexMatrix::from_vec(rows, cols, values)?));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn st_matrix_rows(m: *const StMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn st_matrix_cols(m: *const StMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// Copies the entries, interleaved as in [`st_matrix_new`], into `out`,
/// which must hold `len ≥ 2·rows·cols` doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn st_matrix_copy(m: *const StMatrix, out: *mut f64, len: usize) -> StStatus {
    guard(|| {
        let m = &in_arg(m, "matrix")?.0;
        let need = 2 * m.rows() * m.cols();
        if len < need {
            return Err(Failure(
                StStatus::InvalidArgument,
                format!("buffer holds {len} doubles, need {need}"),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for (d, z) in dst.chunks_exact_mut(2).zip(m.as_slice()) {
            d[0] = z.re;
            d[1] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be a handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn st_matrix_free(m: *mut StMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Largest singular value.
///
/// # Safety
/// `m` must be a live matrix handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_matrix_spectral_norm(m: *const StMatrix, out: *mut f64) -> StStatus {
    guard(|| {
        let v = spectral_norm(&in_arg(m, "matrix")?.0)?;
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// `[x, y] = xy − yx`.
///
/// # Safety
/// `x`, `y` must be live matrix handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_matrix_commutator(
    x: *const StMatrix,
    y: *const StMatrix,
    out: *mut *mut StMatrix,
) -> StStatus {
    guard(|| {
        let c = commutator(&in_arg(x, "x")?.0, &in_arg(y, "y")?.0)?;
        *out_arg(out, "out")? = boxed(StMatrix(c));
        Ok(())
    })
}

/// Kinetic part `A` and potential part `B` of the Hamiltonian on an
/// `n`-point periodic grid over `[−π, π)`, with `V` given by `potential`.
///
/// # Safety
/// `potential` must be a nul-terminated string; `a_out`, `b_out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_model_build(
    h: f64,
    n: usize,
    scheme: StScheme,
    potential: *const c_char,
    a_out: *mut *mut StMatrix,
    b_out: *mut *mut StMatrix,
) -> StStatus {
    guard(|| {
        let a_out = out_arg(a_out, "a_out")?;
        let b_out = out_arg(b_out, "b_out")?;
        let v = parse_expr(str_arg(potential, "potential")?).map_err(Error::from)?;
        let params = ModelParams::new(h, Grid::periodic_pi(n)?, scheme.into())?.with_potential(v);
        let (a, b) = (build_a(&params)?, build_b(&params)?);
        *a_out = boxed(StMatrix(a));
        *b_out = boxed(StMatrix(b));
        Ok(())
    })
}

/// Suzuki plan of order `p` (1 or even up to 10).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_plan_suzuki(p: usize, out: *mut *mut StPlan) -> StStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = boxed(StPlan(suzuki_plan(p)?));
        Ok(())
    })
}

/// Number of stages.
///
/// # Safety
/// `plan` must be a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn st_plan_len(plan: *const StPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.len())
}

/// # Safety
/// `plan` must be a handle from [`st_plan_suzuki`] or null.
#[no_mangle]
pub unsafe extern "C" fn st_plan_free(plan: *mut StPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// One split step `U_p(dt)`.
///
/// # Safety
/// All handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_trotter_step(
    plan: *const StPlan,
    a: *const StMatrix,
    b: *const StMatrix,
    dt: f64,
    out: *mut *mut StMatrix,
) -> StStatus {
    guard(|| {
        let split = Splitting::new(&in_arg(a, "a")?.0, &in_arg(b, "b")?.0)?;
        let u = split.step(&in_arg(plan, "plan")?.0, dt)?;
        *out_arg(out, "out")? = boxed(StMatrix(u));
        Ok(())
    })
}

/// `e^{−iHt}` for Hermitian `H`.
///
/// # Safety
/// `h` must be a live matrix handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_exact_unitary(
    h: *const StMatrix,
    t: f64,
    out: *mut *mut StMatrix,
) -> StStatus {
    guard(|| {
        let u = exact_unitary(&in_arg(h, "h")?.0, t)?;
        *out_arg(out, "out")? = boxed(StMatrix(u));
        Ok(())
    })
}

/// Runs an experiment (`"dt-sweep"`, `"h-sweep"`, `"comm-sweep"`,
/// `"beta"` or `"verify-symbolic"`) and writes its CSV/SVG files into
/// `out_dir`. `config` holds `key = value` lines, or is null for defaults.
///
/// # Safety
/// String arguments must be nul-terminated; `config` may be null.
#[no_mangle]
pub unsafe extern "C" fn st_run_experiment(
    experiment: *const c_char,
    config: *const c_char,
    out_dir: *const c_char,
) -> StStatus {
    guard(|| {
        let kind: ExperimentKind = str_arg(experiment, "experiment")?.parse()?;
        let cfg = if config.is_null() {
            RunConfig::defaults(kind)
        } else {
            RunConfig::parse(str_arg(config, "config")?, kind)?
        };
        let outcome = run(&cfg)?;
        write_outputs(&cfg, &outcome, Path::new(str_arg(out_dir, "out_dir")?))?;
        if outcome.passed {
            Ok(())
        } else {
            Err(Failure(
                StStatus::VerificationFailed,
                "verification found violations".into(),
            ))
        }
    })
}
