//! C interface to the swipt-mac solver and simulator.
//!
//! Every entry point returns a [`SwiptStatus`]; results go through out
//! pointers. Objects are opaque handles released with their `_free` function.
//! On failure a message is kept per thread and can be read with
//! [`swipt_last_error_message`].
//!
//! Array getters take `(buf, len, out_len)`: the required length is written to
//! `out_len` when it is non-null, a null `buf` only queries that length, and a
//! short buffer gives `SWIPT_STATUS_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use swipt_mac::config::ScenarioConfig;
use swipt_mac::optimizer::{dual_solve, sum_rate, trace_boundary, BoundaryPoint, RewardVector, Scenario, TracePoint};
use swipt_mac::region::ReceiverModel;
use swipt_mac::simulator::{run_boundary, SimStats};
use swipt_mac::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwiptStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    InfeasibleEnergy = 3,
    InfeasibleScenario = 4,
    InfeasibleMinRate = 5,
    Unbounded = 6,
    NoFixedPoint = 7,
    NoConvergence = 8,
    ConfigError = 9,
    NullPointer = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Receiver model codes accepted by the `model` arguments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwiptModel {
    Ideal = 0,
    TimeSwitching = 1,
    PowerSplitting = 2,
}

/// Scenario loaded from a configuration file.
pub struct SwiptScenario {
    cfg: ScenarioConfig,
    deficit: Option<f64>,
}

impl SwiptScenario {
    fn build(&self, model: ReceiverModel) -> Result<Scenario, Failure> {
        let s = self.cfg.scenario(model)?;
        Ok(match self.deficit {
            Some(d) => s.with_deficit(d),
            None => s,
        })
    }
}

/// One solved boundary point.
pub struct SwiptPoint {
    point: BoundaryPoint,
}

/// Boundary points over the reward simplex.
pub struct SwiptTrace {
    points: Vec<TracePoint>,
}

/// Result of a buffer simulation.
pub struct SwiptSimStats {
    stats: SimStats,
    pi_e: f64,
}

struct Failure {
    status: SwiptStatus,
    message: String,
}

impl Failure {
    fn new(status: SwiptStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(status_of(&e), e.to_string())
    }
}

fn status_of(e: &Error) -> SwiptStatus {
    match e {
        Error::InvalidParameter(_) => SwiptStatus::InvalidArgument,
        Error::DimensionMismatch(_) => SwiptStatus::DimensionMismatch,
        Error::InfeasibleEnergy(_) => SwiptStatus::InfeasibleEnergy,
        Error::InfeasibleScenario(_) => SwiptStatus::InfeasibleScenario,
        Error::InfeasibleMinRate(_) => SwiptStatus::InfeasibleMinRate,
        Error::UnboundedObjective(_) => SwiptStatus::Unbounded,
        Error::NoFixedPoint(_) => SwiptStatus::NoFixedPoint,
        Error::NoConvergence(_) => SwiptStatus::NoConvergence,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SwiptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SwiptStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            SwiptStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(SwiptStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes a handle created by this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: non-null and, per the contract, valid for a write of T.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize, out_len: *mut usize) -> Result<(), Failure> {
    if !out_len.is_null() {
        // SAFETY: non-null out pointer supplied by the caller.
        unsafe { out_len.write(src.len()) };
    }
    if buf.is_null() {
        return Ok(());
    }
    if len < src.len() {
        return Err(Failure::new(
            SwiptStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    // SAFETY: buf is valid for `len >= src.len()` writes.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    Ok(())
}

fn model_of(code: i32) -> Result<ReceiverModel, Failure> {
    match code {
        0 => Ok(ReceiverModel::Ideal),
        1 => Ok(ReceiverModel::TimeSwitching),
        2 => Ok(ReceiverModel::PowerSplitting),
        _ => Err(Failure::new(SwiptStatus::InvalidArgument, format!("unknown model code {code}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn swipt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn swipt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Short constant name of a status code.
#[no_mangle]
pub extern "C" fn swipt_status_name(status: i32) -> *const c_char {
    let s: &'static str = match status {
        0 => "ok\0",
        1 => "invalid argument\0",
        2 => "dimension mismatch\0",
        3 => "infeasible energy\0",
        4 => "infeasible scenario\0",
        5 => "infeasible minimum rate\0",
        6 => "unbounded\0",
        7 => "no fixed point\0",
        8 => "no convergence\0",
        9 => "configuration error\0",
        10 => "null pointer\0",
        11 => "buffer too small\0",
        12 => "panic\0",
        _ => "unknown status\0",
    };
    s.as_ptr().cast()
}

/// The bundled reference scenario.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn swipt_scenario_reference(out: *mut *mut SwiptScenario) -> SwiptStatus {
    guard(|| {
        let s = Box::new(SwiptScenario { cfg: ScenarioConfig::reference(), deficit: None });
        unsafe { put(out, Box::into_raw(s)) }
    })
}

/// Parse a scenario from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn swipt_scenario_from_toml(text: *const c_char, out: *mut *mut SwiptScenario) -> SwiptStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        // SAFETY: NUL-terminated per the contract.
        let text = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| Failure::new(SwiptStatus::ConfigError, "config is not UTF-8"))?;
        let cfg = ScenarioConfig::from_toml(text).map_err(|e| Failure::new(SwiptStatus::ConfigError, e.to_string()))?;
        unsafe { put(out, Box::into_raw(Box::new(SwiptScenario { cfg, deficit: None }))) }
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swipt_scenario_free(scenario: *mut SwiptScenario) {
    if !scenario.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_scenario_num_users(scenario: *const SwiptScenario, out: *mut usize) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(scenario, "scenario") }?;
        unsafe { put(out, s.cfg.num_users()) }
    })
}

/// Number of joint fading states.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_scenario_num_states(scenario: *const SwiptScenario, out: *mut usize) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(scenario, "scenario") }?;
        let n = s.build(ReceiverModel::Ideal)?.fading.num_states();
        unsafe { put(out, n) }
    })
}

/// Receiver energy deficit in joules per slot.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_scenario_deficit(scenario: *const SwiptScenario, out: *mut f64) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(scenario, "scenario") }?;
        let d = s.build(ReceiverModel::Ideal)?.deficit();
        unsafe { put(out, d) }
    })
}

/// Move the receiver consumption so the deficit equals `delta` (J/slot).
///
/// # Safety
/// `scenario` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn swipt_scenario_set_deficit(scenario: *mut SwiptScenario, delta: f64) -> SwiptStatus {
    guard(|| {
        // SAFETY: valid handle per the contract.
        let s = unsafe { scenario.as_mut() }.ok_or_else(|| null("scenario"))?;
        if !delta.is_finite() || delta < 0.0 {
            return Err(Failure::new(SwiptStatus::InvalidArgument, "deficit must be finite and nonnegative"));
        }
        s.deficit = Some(delta);
        Ok(())
    })
}

/// Maximum sum rate in bits per channel use.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_sum_rate(scenario: *const SwiptScenario, model: i32, out: *mut f64) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(scenario, "scenario") }?;
        let sc = s.build(model_of(model)?)?;
        let r = sum_rate(&sc, &s.cfg.solver)?;
        unsafe { put(out, r) }
    })
}

/// Boundary point maximizing `sum mu(i) R_i`.
///
/// # Safety
/// `mu` must point to `mu_len` doubles; handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_dual_solve(
    scenario: *const SwiptScenario,
    model: i32,
    mu: *const f64,
    mu_len: usize,
    out: *mut *mut SwiptPoint,
) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(scenario, "scenario") }?;
        if mu.is_null() {
            return Err(null("mu"));
        }
        if mu_len != s.cfg.num_users() {
            return Err(Failure::new(
                SwiptStatus::DimensionMismatch,
                format!("{mu_len} rewards for {} users", s.cfg.num_users()),
            ));
        }
        // SAFETY: mu holds mu_len doubles.
        let mu = RewardVector::new(unsafe { std::slice::from_raw_parts(mu, mu_len) }.to_vec())?;
        let sc = s.build(model_of(model)?)?;
        let point = dual_solve(&sc, &mu, &s.cfg.solver)?;
        unsafe { put(out, Box::into_raw(Box::new(SwiptPoint { point }))) }
    })
}

/// # Safety
/// `point` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swipt_point_free(point: *mut SwiptPoint) {
    if !point.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(point) });
    }
}

/// Average rate per user.
///
/// # Safety
/// See the module notes on array getters.
#[no_mangle]
pub unsafe extern "C" fn swipt_point_rates(
    point: *const SwiptPoint,
    buf: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SwiptStatus {
    guard(|| {
        let p = unsafe { handle(point, "point") }?;
        unsafe { copy_out(p.point.avg_rates.as_slice(), buf, len, out_len) }
    })
}

/// Average transmit power per user, J/slot.
///
/// # Safety
/// See the module notes on array getters.
#[no_mangle]
pub unsafe extern "C" fn swipt_point_powers(
    point: *const SwiptPoint,
    buf: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SwiptStatus {
    guard(|| {
        let p = unsafe { handle(point, "point") }?;
        unsafe { copy_out(&p.point.avg_powers, buf, len, out_len) }
    })
}

/// Transmitter multipliers followed by the receiver multiplier.
///
/// # Safety
/// See the module notes on array getters.
#[no_mangle]
pub unsafe extern "C" fn swipt_point_multipliers(
    point: *const SwiptPoint,
    buf: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SwiptStatus {
    guard(|| {
        let p = unsafe { handle(point, "point") }?;
        let mut v = p.point.multipliers.lambda_tx.clone();
        v.push(p.point.multipliers.lambda_rx);
        unsafe { copy_out(&v, buf, len, out_len) }
    })
}

/// Erasure (or split) fraction of the point; 0 for the ideal receiver.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_point_pi_e(point: *const SwiptPoint, out: *mut f64) -> SwiptStatus {
    guard(|| {
        let p = unsafe { handle(point, "point") }?;
        unsafe { put(out, p.point.pi_e) }
    })
}

/// RF energy reaching the receiver, J/slot.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_point_delivered(point: *const SwiptPoint, out: *mut f64) -> SwiptStatus {
    guard(|| {
        let p = unsafe { handle(point, "point") }?;
        unsafe { put(out, p.point.delivered) }
    })
}

/// Boundary over `mu_grid` reward vectors per simplex edge. Individual points
/// may fail; see [`swipt_trace_point_status`].
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_trace(
    scenario: *const SwiptScenario,
    model: i32,
    mu_grid: usize,
    out: *mut *mut SwiptTrace,
) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(scenario, "scenario") }?;
        let sc = s.build(model_of(model)?)?;
        let points = trace_boundary(&sc, mu_grid, &s.cfg.solver)?;
        unsafe { put(out, Box::into_raw(Box::new(SwiptTrace { points }))) }
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swipt_trace_free(trace: *mut SwiptTrace) {
    if !trace.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_trace_len(trace: *const SwiptTrace, out: *mut usize) -> SwiptStatus {
    guard(|| {
        let t = unsafe { handle(trace, "trace") }?;
        unsafe { put(out, t.points.len()) }
    })
}

fn trace_point(t: &SwiptTrace, k: usize) -> Result<&TracePoint, Failure> {
    t.points.get(k).ok_or_else(|| {
        Failure::new(SwiptStatus::InvalidArgument, format!("index {k} out of {} points", t.points.len()))
    })
}

/// Solver status of point `k`.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_trace_point_status(
    trace: *const SwiptTrace,
    k: usize,
    out: *mut SwiptStatus,
) -> SwiptStatus {
    guard(|| {
        let t = unsafe { handle(trace, "trace") }?;
        let status = match &trace_point(t, k)?.result {
            Ok(_) => SwiptStatus::Ok,
            Err(e) => status_of(e),
        };
        unsafe { put(out, status) }
    })
}

/// Reward vector of point `k`.
///
/// # Safety
/// See the module notes on array getters.
#[no_mangle]
pub unsafe extern "C" fn swipt_trace_mu(
    trace: *const SwiptTrace,
    k: usize,
    buf: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SwiptStatus {
    guard(|| {
        let t = unsafe { handle(trace, "trace") }?;
        unsafe { copy_out(trace_point(t, k)?.mu.as_slice(), buf, len, out_len) }
    })
}

/// Rates of point `k`; fails with the point's own status if it was not solved.
///
/// # Safety
/// See the module notes on array getters.
#[no_mangle]
pub unsafe extern "C" fn swipt_trace_rates(
    trace: *const SwiptTrace,
    k: usize,
    buf: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SwiptStatus {
    guard(|| {
        let t = unsafe { handle(trace, "trace") }?;
        let p = trace_point(t, k)?.result.as_ref().map_err(|e| Failure::from(e.clone()))?;
        unsafe { copy_out(p.avg_rates.as_slice(), buf, len, out_len) }
    })
}

/// Solve the uniform-reward point with the simulation backoff and run the
/// buffer simulation. `horizon` 0 keeps the configured horizon.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_simulate(
    scenario: *const SwiptScenario,
    model: i32,
    horizon: u64,
    seed: u64,
    out: *mut *mut SwiptSimStats,
) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(scenario, "scenario") }?;
        let sc = s.build(model_of(model)?)?;
        let mut solver = s.cfg.solver.clone();
        solver.backoff = s.cfg.simulation.backoff;
        let point = dual_solve(&sc, &RewardVector::uniform(sc.num_users()), &solver)?;
        let mut opts = s.cfg.sim_options()?;
        if horizon > 0 {
            opts.horizon = horizon;
        }
        opts.seed = seed;
        let stats = run_boundary(&sc, &point, &opts)?;
        unsafe { put(out, Box::into_raw(Box::new(SwiptSimStats { stats, pi_e: point.pi_e }))) }
    })
}

/// # Safety
/// `stats` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swipt_sim_free(stats: *mut SwiptSimStats) {
    if !stats.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(stats) });
    }
}

/// Fraction of measured slots used for harvesting only.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_sim_erasure_fraction(stats: *const SwiptSimStats, out: *mut f64) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(stats, "stats") }?;
        unsafe { put(out, s.stats.erasure_fraction) }
    })
}

/// Erasure fraction the simulated policy was designed for.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_sim_analytic_pi_e(stats: *const SwiptSimStats, out: *mut f64) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(stats, "stats") }?;
        unsafe { put(out, s.pi_e) }
    })
}

/// RF energy banked at the receiver per slot.
///
/// # Safety
/// Handle and out pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn swipt_sim_avg_delivered(stats: *const SwiptSimStats, out: *mut f64) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(stats, "stats") }?;
        unsafe { put(out, s.stats.avg_delivered) }
    })
}

/// Average transmit energy per slot and user.
///
/// # Safety
/// See the module notes on array getters.
#[no_mangle]
pub unsafe extern "C" fn swipt_sim_avg_tx_power(
    stats: *const SwiptSimStats,
    buf: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(stats, "stats") }?;
        unsafe { copy_out(&s.stats.avg_tx_power, buf, len, out_len) }
    })
}

/// Empirical rate per user.
///
/// # Safety
/// See the module notes on array getters.
#[no_mangle]
pub unsafe extern "C" fn swipt_sim_rates(
    stats: *const SwiptSimStats,
    buf: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SwiptStatus {
    guard(|| {
        let s = unsafe { handle(stats, "stats") }?;
        unsafe { copy_out(&s.stats.achieved_rate_estimate, buf, len, out_len) }
    })
}
