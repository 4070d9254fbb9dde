//! C ABI over the `taud` library.
//!
//! Objects cross the boundary as opaque handles created by a `*_parse` or
//! `*_load` function and released with the matching `*_free`. Every fallible
//! function returns a [`TaudStatus`]; on failure a description is available
//! from [`taud_last_error`] on the same thread. Arrays of states or actions
//! are row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use taud::mdp::{reward, ExtendedState, RewardParams};
use taud::neural::Mlp;
use taud::preprocess::preprocess_state;
use taud::sac::Actor;
use taud::stl::{parse_spec, Formula, Spec};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaudStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Dimension = 4,
    Evaluation = 5,
    Io = 6,
    InvalidArgument = 7,
    Panic = 8,
}

/// A parsed task specification.
pub struct TaudSpec {
    spec: Spec,
    n_x: usize,
}

/// A trained policy evaluated with its deterministic action.
pub struct TaudPolicy {
    actor: Actor,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(TaudStatus, String);

impl Failure {
    fn new(status: TaudStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TaudStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TaudStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TaudStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(TaudStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p).to_str().map_err(|_| Failure::new(TaudStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn rows(data: *const f64, n_rows: usize, width: usize, what: &str) -> Result<Vec<Vec<f64>>, Failure> {
    if n_rows * width == 0 {
        return Ok(vec![Vec::new(); n_rows]);
    }
    non_null(data, what)?;
    let flat = std::slice::from_raw_parts(data, n_rows * width);
    Ok(flat.chunks(width).map(<[f64]>::to_vec).collect())
}

unsafe fn spec_ref<'a>(spec: *const TaudSpec) -> Result<&'a TaudSpec, Failure> {
    non_null(spec, "spec")?;
    Ok(&*spec)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn taud_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses `text` over states of dimension `n_x` into `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_parse(text: *const c_char, n_x: usize, out: *mut *mut TaudSpec) -> TaudStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let text = c_str(text, "text")?;
        let spec = parse_spec(text, n_x).map_err(|e| Failure::new(TaudStatus::Parse, e))?;
        *out = Box::into_raw(Box::new(TaudSpec { spec, n_x }));
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a handle from [`taud_spec_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_free(spec: *mut TaudSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Window length `tau`; 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_tau(spec: *const TaudSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.spec.tau())
}

/// Episode horizon `T`; 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_horizon(spec: *const TaudSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.spec.total_horizon())
}

/// Number of distinct sub-formulae, which is the flag count.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_num_subformulas(spec: *const TaudSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.spec.subs().len())
}

/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_state_dim(spec: *const TaudSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.n_x)
}

/// Robustness at instant `t` of a trace of `len` states.
///
/// # Safety
/// `states` must hold `len * n_x` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_robustness(
    spec: *const TaudSpec,
    states: *const f64,
    len: usize,
    t: usize,
    out: *mut f64,
) -> TaudStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        non_null(out, "out")?;
        let trace = rows(states, len, s.n_x, "states")?;
        *out = s.spec.robustness(&trace, t).map_err(|e| Failure::new(TaudStatus::Evaluation, e))?;
        Ok(())
    })
}

/// Whether the trace satisfies the specification at `t` (robustness >= 0).
///
/// # Safety
/// `states` must hold `len * n_x` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_satisfies(
    spec: *const TaudSpec,
    states: *const f64,
    len: usize,
    t: usize,
    out: *mut bool,
) -> TaudStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        non_null(out, "out")?;
        let trace = rows(states, len, s.n_x, "states")?;
        *out = s.spec.satisfies(&trace, t).map_err(|e| Failure::new(TaudStatus::Evaluation, e))?;
        Ok(())
    })
}

/// Reward of a window of exactly `tau` states.
///
/// # Safety
/// `window` must hold `tau * n_x` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn taud_spec_reward(
    spec: *const TaudSpec,
    beta: f64,
    window: *const f64,
    tau: usize,
    out: *mut f64,
) -> TaudStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        non_null(out, "out")?;
        let params = RewardParams::new(beta, s.spec.outer()).map_err(|e| Failure::new(TaudStatus::InvalidArgument, e))?;
        let window = rows(window, tau, s.n_x, "window")?;
        let z = ExtendedState::from_parts(window, Vec::new(), 0).map_err(|e| Failure::new(TaudStatus::Dimension, e))?;
        *out = reward(&z, s.spec.phi(), &params).map_err(|e| Failure::new(TaudStatus::Dimension, e))?;
        Ok(())
    })
}

/// Writes the network input `(current state, flags, action history)` of the
/// extended state made of `tau` states and `d` actions of width `n_u`.
/// `out_len` must be at least `n_x + M + d * n_u`.
///
/// # Safety
/// Buffers must hold the number of doubles their sizes describe.
#[no_mangle]
pub unsafe extern "C" fn taud_preprocess(
    spec: *const TaudSpec,
    window: *const f64,
    tau: usize,
    history: *const f64,
    d: usize,
    n_u: usize,
    out: *mut f64,
    out_len: usize,
) -> TaudStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        non_null(out, "out")?;
        if tau != s.spec.tau() {
            return Err(Failure::new(
                TaudStatus::Dimension,
                format!("window has {tau} states but the specification needs {}", s.spec.tau()),
            ));
        }
        let window = rows(window, tau, s.n_x, "window")?;
        let history = rows(history, d, n_u, "history")?;
        let z = ExtendedState::from_parts(window, history, n_u).map_err(|e| Failure::new(TaudStatus::Dimension, e))?;
        let flat = preprocess_state(&z, s.spec.subs()).map_err(|e| Failure::new(TaudStatus::Evaluation, e))?.flatten();
        if out_len < flat.len() {
            return Err(Failure::new(
                TaudStatus::Dimension,
                format!("output holds {out_len} values but {} are needed", flat.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, flat.len()).copy_from_slice(&flat);
        Ok(())
    })
}

/// Loads an actor network file and attaches the action box `[low, high]`.
///
/// # Safety
/// `path` must be NUL-terminated, `low`/`high` must hold `n_u` doubles and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn taud_policy_load(
    path: *const c_char,
    low: *const f64,
    high: *const f64,
    n_u: usize,
    out: *mut *mut TaudPolicy,
) -> TaudStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = c_str(path, "path")?;
        if n_u == 0 {
            return Err(Failure::new(TaudStatus::InvalidArgument, "action dimension is zero"));
        }
        non_null(low, "low")?;
        non_null(high, "high")?;
        let low = std::slice::from_raw_parts(low, n_u);
        let high = std::slice::from_raw_parts(high, n_u);
        let net = Mlp::load(Path::new(path)).map_err(|e| Failure::new(TaudStatus::Io, e))?;
        let actor = Actor::from_net(net, low, high).map_err(|e| Failure::new(TaudStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(TaudPolicy { actor }));
        Ok(())
    })
}

/// # Safety
/// `policy` must be null or a handle from [`taud_policy_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn taud_policy_free(policy: *mut TaudPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn taud_policy_input_dim(policy: *const TaudPolicy) -> usize {
    policy.as_ref().map_or(0, |p| p.actor.state_dim())
}

/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn taud_policy_action_dim(policy: *const TaudPolicy) -> usize {
    policy.as_ref().map_or(0, |p| p.actor.n_u())
}

/// Deterministic action for one network input.
///
/// # Safety
/// `input` must hold `input_len` doubles and `action` `action_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn taud_policy_act(
    policy: *const TaudPolicy,
    input: *const f64,
    input_len: usize,
    action: *mut f64,
    action_len: usize,
) -> TaudStatus {
    guard(|| {
        non_null(policy, "policy")?;
        let p = &*policy;
        non_null(input, "input")?;
        non_null(action, "action")?;
        if input_len != p.actor.state_dim() || action_len != p.actor.n_u() {
            return Err(Failure::new(
                TaudStatus::Dimension,
                format!(
                    "policy maps {} inputs to {} actions, got buffers of {input_len} and {action_len}",
                    p.actor.state_dim(),
                    p.actor.n_u()
                ),
            ));
        }
        let x = std::slice::from_raw_parts(input, input_len);
        let a = p.actor.act_deterministic(x).map_err(|e| Failure::new(TaudStatus::Evaluation, e))?;
        std::slice::from_raw_parts_mut(action, action_len).copy_from_slice(&a);
        Ok(())
    })
}
