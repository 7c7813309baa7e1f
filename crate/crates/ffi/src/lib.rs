//! C ABI for `alphaspec`.
//!
//! Objects cross the boundary as opaque pointers created by `*_new`
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`AlphaspecStatus`]; on failure a description is available
//! from [`alphaspec_last_error`] on the same thread. Panics never unwind
//! into the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use alphaspec::dual::{SolveResult, SolverConfig};
use alphaspec::filterbank::{FilterBank, GammaOperator, DEFAULT_FEASIBILITY_TOL};
use alphaspec::nalgebra::{DMatrix, DVector};
use alphaspec::problem::Problem;
use alphaspec::spectra::{divergence, DivergenceSpec, FrequencyGrid, Nu, RationalSpec, SpectralDensity};
use alphaspec::Error;

/// Pass as `nu` to solve the `nu = inf` problem.
pub const ALPHASPEC_NU_INFINITY: i64 = i64::MAX;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaspecStatus {
    Ok = 0,
    InvalidInput = 1,
    Infeasible = 2,
    SolverFailure = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaspecDivergence {
    Alpha = 0,
    Kl = 1,
    Kl0 = 2,
    Hellinger = 3,
    Pearson = 4,
    Beta = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaspecFeasibility {
    pub in_range: bool,
    pub positive_definite: bool,
    pub range_residual: f64,
    pub tolerance: f64,
    pub min_eigenvalue: f64,
}

/// Opaque filter bank.
pub struct AlphaspecBank(FilterBank);

/// Opaque solver instance: prior, normalized operator and settings.
pub struct AlphaspecProblem(Problem);

/// Opaque solver output.
pub struct AlphaspecResult {
    result: SolveResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(AlphaspecStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Infeasible(_) => AlphaspecStatus::Infeasible,
            Error::MaxIterations { .. } | Error::StepUnderflow { .. } | Error::HessianSolve | Error::Inadmissible { .. } => {
                AlphaspecStatus::SolverFailure
            }
            _ => AlphaspecStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> AlphaspecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            AlphaspecStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            AlphaspecStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AlphaspecStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn nu_from(value: i64) -> Result<Nu, Failure> {
    if value == ALPHASPEC_NU_INFINITY {
        return Ok(Nu::Infinite);
    }
    Ok(Nu::finite(value)?.ensure_solvable()?)
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn alphaspec_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a bank from row-major `A` (`n * n` entries) and `B` (`n`).
///
/// # Safety
/// `a` and `b` must point to `n * n` and `n` doubles; `out` must be valid
/// for writing.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_bank_new(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut *mut AlphaspecBank,
) -> AlphaspecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = DMatrix::from_row_slice(n, n, slice(a, n * n, "a")?);
        let b = DVector::from_column_slice(slice(b, n, "b")?);
        let bank = FilterBank::new(a, b)?;
        *out = Box::into_raw(Box::new(AlphaspecBank(bank)));
        Ok(())
    })
}

/// The lag bank of size `n`: pure delays.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_bank_lag(n: usize, out: *mut *mut AlphaspecBank) -> AlphaspecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(AlphaspecBank(FilterBank::lag_bank(n)?)));
        Ok(())
    })
}

/// # Safety
/// `bank` must come from `alphaspec_bank_new`/`alphaspec_bank_lag` (or be
/// null) and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_bank_free(bank: *mut AlphaspecBank) {
    if !bank.is_null() {
        drop(Box::from_raw(bank));
    }
}

/// State dimension `n`, or 0 for a null bank.
///
/// # Safety
/// `bank` must be a live bank or null.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_bank_dim(bank: *const AlphaspecBank) -> usize {
    bank.as_ref().map_or(0, |b| b.0.n())
}

/// Feasibility of a row-major `n x n` target `sigma`, relative tolerance
/// `tol` (the default when `tol <= 0`).
///
/// # Safety
/// `bank` must be live, `sigma` must point to `n * n` doubles and `out`
/// must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_feasibility(
    bank: *const AlphaspecBank,
    sigma: *const f64,
    tol: f64,
    out: *mut AlphaspecFeasibility,
) -> AlphaspecStatus {
    guard(|| {
        let bank = reference(bank, "bank")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let n = bank.0.n();
        let sigma = DMatrix::from_row_slice(n, n, slice(sigma, n * n, "sigma")?);
        // the range does not depend on the grid; any valid size will do
        let op = GammaOperator::new(bank.0.clone(), FrequencyGrid::new(16)?)?;
        let tol = if tol > 0.0 { tol } else { DEFAULT_FEASIBILITY_TOL };
        let r = op.feasibility_with_tol(&sigma, tol)?;
        *out = AlphaspecFeasibility {
            in_range: r.in_range,
            positive_definite: r.positive_definite,
            range_residual: r.range_residual,
            tolerance: r.tolerance,
            min_eigenvalue: r.min_eigenvalue,
        };
        Ok(())
    })
}

/// Sets up a solver instance.
///
/// `sigma` is row-major `n x n`, or null for the identity. `prior_json`
/// is a rational spectrum such as
/// `{"kind": "transfer", "num": [0, 1], "den": [-0.5, 1]}`. Zero (or
/// negative) `grid`, `tol` and `max_iter` select the defaults.
///
/// # Safety
/// `bank` must be live, `sigma` null or pointing to `n * n` doubles,
/// `prior_json` a NUL-terminated string and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_problem_new(
    bank: *const AlphaspecBank,
    sigma: *const f64,
    prior_json: *const c_char,
    grid: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut AlphaspecProblem,
) -> AlphaspecStatus {
    guard(|| {
        let bank = reference(bank, "bank")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if prior_json.is_null() {
            return Err(null("prior_json"));
        }
        let text = CStr::from_ptr(prior_json)
            .to_str()
            .map_err(|e| Failure(AlphaspecStatus::InvalidInput, format!("prior_json: {e}")))?;
        let prior: RationalSpec = serde_json::from_str(text)
            .map_err(|e| Failure(AlphaspecStatus::InvalidInput, format!("prior_json: {e}")))?;
        let n = bank.0.n();
        let sigma = if sigma.is_null() {
            DMatrix::identity(n, n)
        } else {
            DMatrix::from_row_slice(n, n, slice(sigma, n * n, "sigma")?)
        };
        let mut config = SolverConfig::default();
        if grid > 0 {
            config.grid_size = grid;
        }
        if tol > 0.0 {
            config.tol = tol;
        }
        if max_iter > 0 {
            config.max_iter = max_iter;
        }
        let problem = Problem::new(bank.0.clone(), sigma, &prior, config, DEFAULT_FEASIBILITY_TOL)?;
        *out = Box::into_raw(Box::new(AlphaspecProblem(problem)));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from `alphaspec_problem_new` (or be null) and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_problem_free(problem: *mut AlphaspecProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of grid nodes, or 0 for a null problem.
///
/// # Safety
/// `problem` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_problem_grid_size(problem: *const AlphaspecProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.grid.size())
}

/// Solves for one `nu` (a positive integer or `ALPHASPEC_NU_INFINITY`).
///
/// # Safety
/// `problem` must be live and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_solve(
    problem: *const AlphaspecProblem,
    nu: i64,
    out: *mut *mut AlphaspecResult,
) -> AlphaspecStatus {
    guard(|| {
        let problem = reference(problem, "problem")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let result = problem.0.solve(nu_from(nu)?)?;
        *out = Box::into_raw(Box::new(AlphaspecResult { result }));
        Ok(())
    })
}

/// # Safety
/// `result` must come from `alphaspec_solve` (or be null) and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_free(result: *mut AlphaspecResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_iterations(result: *const AlphaspecResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.iterations)
}

/// # Safety
/// `result` must be live or null (NaN is returned for null).
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_dual_value(result: *const AlphaspecResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.dual_value)
}

/// # Safety
/// `result` must be live or null (NaN is returned for null).
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_primal_value(result: *const AlphaspecResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.primal_value)
}

/// # Safety
/// `result` must be live or null (NaN is returned for null).
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_constraint_residual(result: *const AlphaspecResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.constraint_residual)
}

/// # Safety
/// `result` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_grid_size(result: *const AlphaspecResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.phi_opt.grid().size())
}

unsafe fn copy_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len < values.len() {
        return Err(Failure(
            AlphaspecStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Copies the optimal spectrum (one value per grid node) into `out`.
///
/// # Safety
/// `result` must be live and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_copy_phi(
    result: *const AlphaspecResult,
    out: *mut f64,
    len: usize,
) -> AlphaspecStatus {
    guard(|| copy_out(reference(result, "result")?.result.phi_opt.values(), out, len))
}

/// Copies the grid nodes `theta_k = 2 pi k / size` into `out`.
///
/// # Safety
/// `result` must be live and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_copy_theta(
    result: *const AlphaspecResult,
    out: *mut f64,
    len: usize,
) -> AlphaspecStatus {
    guard(|| copy_out(reference(result, "result")?.result.phi_opt.grid().nodes(), out, len))
}

/// Copies the optimal multiplier of the normalized problem, row-major
/// `n x n`, into `out`.
///
/// # Safety
/// `result` must be live and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_result_copy_lambda(
    result: *const AlphaspecResult,
    out: *mut f64,
    len: usize,
) -> AlphaspecStatus {
    guard(|| {
        let m = reference(result, "result")?.result.lambda_opt.matrix();
        copy_out(m.transpose().as_slice(), out, len)
    })
}

/// Divergence between two spectra sampled on the same uniform grid of
/// `len` nodes. `parameter` is used by the alpha and beta families only.
///
/// # Safety
/// `phi1` and `phi2` must point to `len` doubles and `out` must be valid
/// for writing.
#[no_mangle]
pub unsafe extern "C" fn alphaspec_divergence(
    phi1: *const f64,
    phi2: *const f64,
    len: usize,
    family: AlphaspecDivergence,
    parameter: f64,
    out: *mut f64,
) -> AlphaspecStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let grid = FrequencyGrid::new(len)?;
        let p = SpectralDensity::new(grid.clone(), slice(phi1, len, "phi1")?.to_vec())?;
        let q = SpectralDensity::new(grid, slice(phi2, len, "phi2")?.to_vec())?;
        let spec = match family {
            AlphaspecDivergence::Alpha => DivergenceSpec::Alpha(parameter),
            AlphaspecDivergence::Kl => DivergenceSpec::Kl,
            AlphaspecDivergence::Kl0 => DivergenceSpec::Kl0,
            AlphaspecDivergence::Hellinger => DivergenceSpec::Hellinger,
            AlphaspecDivergence::Pearson => DivergenceSpec::Pearson,
            AlphaspecDivergence::Beta => DivergenceSpec::Beta(parameter),
        };
        *out = divergence(&p, &q, spec)?;
        Ok(())
    })
}
