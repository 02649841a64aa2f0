//! C interface to the teleportation simulator.
//!
//! Parameters live behind an opaque [`MtParams`] handle. Every call returns an
//! [`MtStatus`]; on failure [`mt_last_error_message`] describes the problem.
//! Results are written through caller-provided out-pointers. No call unwinds
//! across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use memtele_core::budget::{compute_budget, BudgetInputs};
use memtele_core::error::Error;
use memtele_core::params::ExperimentParams;
use memtele_core::protocol::{run_teleportation, verify_bell_identity, InputState, RunSettings, SamplingMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownKey = 3,
    NoHeraldedTrials = 4,
    Internal = 5,
    Panic = 6,
}

/// Input polarization states.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MtInput {
    H = 0,
    V = 1,
    Plus = 2,
    Minus = 3,
    R = 4,
    L = 5,
}

impl From<MtInput> for InputState {
    fn from(i: MtInput) -> Self {
        match i {
            MtInput::H => InputState::H,
            MtInput::V => InputState::V,
            MtInput::Plus => InputState::Plus,
            MtInput::Minus => InputState::Minus,
            MtInput::R => InputState::R,
            MtInput::L => InputState::L,
        }
    }
}

/// Opaque parameter set.
pub struct MtParams {
    inner: ExperimentParams,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MtBudget {
    pub s: f64,
    pub n_wcp: f64,
    pub n_double: f64,
    pub kappa: f64,
    pub v_eff: f64,
    pub fidelity_pred: f64,
    pub herald_confidence: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MtFidelity {
    pub fidelity: f64,
    pub std_err: f64,
    pub n_effective: f64,
    pub n_trials: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MtBellReport {
    pub n_random: u64,
    pub max_fidelity_error: f64,
    pub max_probability_error: f64,
    pub passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MtStatus, message: impl Into<String>) -> MtStatus {
    set_error(message.into());
    status
}

fn from_core(e: Error) -> MtStatus {
    let status = match e {
        Error::ParamOutOfRange { .. } | Error::EmptyGrid => MtStatus::InvalidArgument,
        Error::UnknownParameter(_) => MtStatus::UnknownKey,
        Error::NoHeraldedTrials => MtStatus::NoHeraldedTrials,
        _ => MtStatus::Internal,
    };
    fail(status, e.to_string())
}

/// Run `f`, turning panics into `MtStatus::Panic`.
fn guard(f: impl FnOnce() -> MtStatus) -> MtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(MtStatus::Panic, "internal panic"),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// New handle holding the default (calibrated) parameters. Free with
/// [`mt_params_free`].
#[no_mangle]
pub extern "C" fn mt_params_new_default() -> *mut MtParams {
    Box::into_raw(Box::new(MtParams {
        inner: ExperimentParams::default(),
    }))
}

/// # Safety
/// `params` must be NULL or a handle from [`mt_params_new_default`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn mt_params_free(params: *mut MtParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn key_str<'a>(key: *const c_char) -> Result<&'a str, MtStatus> {
    if key.is_null() {
        return Err(fail(MtStatus::NullPointer, "key is NULL"));
    }
    CStr::from_ptr(key)
        .to_str()
        .map_err(|_| fail(MtStatus::InvalidArgument, "key is not UTF-8"))
}

/// Set a parameter by field name. The whole set is validated; an out-of-range
/// value leaves the handle unchanged.
///
/// # Safety
/// `params` must be a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mt_params_set(params: *mut MtParams, key: *const c_char, value: f64) -> MtStatus {
    guard(|| {
        let Some(p) = params.as_mut() else {
            return fail(MtStatus::NullPointer, "params is NULL");
        };
        let key = match key_str(key) {
            Ok(k) => k,
            Err(s) => return s,
        };
        let mut next = p.inner.clone();
        if !next.set(key, value) {
            return fail(MtStatus::UnknownKey, format!("unknown parameter '{key}'"));
        }
        if let Err(e) = next.validate() {
            return from_core(e);
        }
        p.inner = next;
        MtStatus::Ok
    })
}

/// # Safety
/// `params` must be a live handle, `key` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mt_params_get(params: *const MtParams, key: *const c_char, out: *mut f64) -> MtStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return fail(MtStatus::NullPointer, "params or out is NULL");
        };
        let key = match key_str(key) {
            Ok(k) => k,
            Err(s) => return s,
        };
        match p.inner.get(key) {
            Some(v) => {
                *out = v;
                MtStatus::Ok
            }
            None => fail(MtStatus::UnknownKey, format!("unknown parameter '{key}'")),
        }
    })
}

/// Closed-form noise budget of `input` after `storage_time_us`.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mt_budget(
    params: *const MtParams,
    input: MtInput,
    storage_time_us: f64,
    out: *mut MtBudget,
) -> MtStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return fail(MtStatus::NullPointer, "params or out is NULL");
        };
        if !(storage_time_us.is_finite() && storage_time_us >= 0.0) {
            return fail(MtStatus::InvalidArgument, format!("storage time {storage_time_us} is not >= 0"));
        }
        let result = BudgetInputs::from_params(&p.inner)
            .and_then(|b| compute_budget(&b.at_time(storage_time_us, &p.inner), &input.into()));
        match result {
            Ok(b) => {
                *out = MtBudget {
                    s: b.s,
                    n_wcp: b.n_wcp,
                    n_double: b.n_double,
                    kappa: b.kappa,
                    v_eff: b.v_eff,
                    fidelity_pred: b.fidelity_pred,
                    herald_confidence: b.herald_confidence,
                };
                MtStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Conditioned Monte Carlo fidelity, run until `target_effective` effective
/// heralded trials. Deterministic in `seed` for any `workers`.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mt_simulate_fidelity(
    params: *const MtParams,
    input: MtInput,
    storage_time_us: f64,
    seed: u64,
    target_effective: u64,
    workers: u32,
    out: *mut MtFidelity,
) -> MtStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return fail(MtStatus::NullPointer, "params or out is NULL");
        };
        if target_effective == 0 || workers == 0 {
            return fail(MtStatus::InvalidArgument, "target_effective and workers must be >= 1");
        }
        let settings = RunSettings {
            seed,
            workers: workers as usize,
            target_ess: target_effective as f64,
            batch_size: 8192,
            max_trials: target_effective.saturating_mul(1000),
            mode: SamplingMode::Conditioned,
        };
        match run_teleportation(&p.inner, &input.into(), storage_time_us, &settings) {
            Ok(run) => {
                *out = MtFidelity {
                    fidelity: run.estimate.fidelity,
                    std_err: run.estimate.std_err,
                    n_effective: run.estimate.n_effective,
                    n_trials: run.n_trials,
                };
                MtStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Check the teleportation identity on `n_random` random inputs plus the six
/// poles.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mt_verify_bell_identity(n_random: u64, seed: u64, out: *mut MtBellReport) -> MtStatus {
    guard(|| {
        if out.is_null() {
            return fail(MtStatus::NullPointer, "out is NULL");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match verify_bell_identity(n_random as usize, &mut rng) {
            Ok(r) => {
                *out = MtBellReport {
                    n_random: r.n_random as u64,
                    max_fidelity_error: r.max_fidelity_error,
                    max_probability_error: r.max_probability_error,
                    passed: r.passed,
                };
                MtStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}
