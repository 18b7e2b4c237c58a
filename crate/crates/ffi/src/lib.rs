//! C interface to the noisy-dialog simulator.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns an [`NdStatus`];
//! on failure a description is kept per thread and can be copied out with
//! [`nd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use noisy_dialog::adversary::AdversarySpec;
use noisy_dialog::config::{derive_params, ParamSpec};
use noisy_dialog::harness::{attack_experiment, run_trials, write_results_csv, BatchSpec};
use noisy_dialog::trial::TrialResult;
use noisy_dialog::Error;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// A bug: the library panicked. The message says where.
    Internal = 4,
}

/// Simulation parameters. Create with [`nd_config_new`].
pub struct NdConfig {
    spec: ParamSpec,
}

/// Per-trial results of one batch. Create with [`nd_run`].
pub struct NdResults {
    trials: Vec<TrialResult>,
}

/// One trial, flattened for C.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NdTrialSummary {
    pub trial: u64,
    pub seed: u64,
    pub success: bool,
    pub total_rounds: u64,
    /// total_rounds / depth − 1.
    pub overhead: f64,
    /// Larger of the two parties' peaks.
    pub peak_memory_bits: u64,
    pub jumps: u64,
    pub budget_spent: u64,
    pub budget_limit: u64,
    pub max_rewind: u64,
    pub small_collisions: u64,
    pub big_collisions: u64,
}

/// Outcome of a paired MP3-on/MP3-off attack experiment.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NdAttackSummary {
    pub success_rate_on: f64,
    pub success_rate_off: f64,
    pub pairs_off_larger: u64,
    pub pairs_on_larger: u64,
    pub sign_test_p: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: NdStatus, msg: impl Into<String>) -> NdStatus {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> NdStatus {
    match err {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => NdStatus::Io,
        _ => NdStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<(), NdStatus>) -> NdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NdStatus::Ok,
        Ok(Err(status)) => status,
        Err(panic) => {
            let what = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(NdStatus::Internal, format!("internal error: {what}"))
        }
    }
}

fn check(r: noisy_dialog::Result<()>) -> Result<(), NdStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, NdStatus> {
    if p.is_null() {
        return Err(fail(NdStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(NdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn batch(config: &NdConfig, adversary: &str, trials: u64, seed: u64) -> Result<BatchSpec, NdStatus> {
    let adversary: AdversarySpec = adversary.parse().map_err(|e: Error| fail(status_of(&e), e.to_string()))?;
    check(derive_params(&config.spec).map(drop))?;
    let mut spec = BatchSpec::new(config.spec.clone(), adversary, trials);
    spec.seed = seed;
    Ok(spec)
}

/// Creates a configuration with default constants. Parameters are validated
/// when a run starts, so keys can be set in any order.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn nd_config_new(epsilon: f64, depth: u64, out: *mut *mut NdConfig) -> NdStatus {
    guarded(|| {
        if out.is_null() {
            return Err(fail(NdStatus::NullPointer, "out is null"));
        }
        let config = Box::new(NdConfig { spec: ParamSpec::new(epsilon, depth) });
        *out = Box::into_raw(config);
        Ok(())
    })
}

/// Sets one configuration key, using the names of the CLI's config files
/// (`states`, `mp3_enabled`, `vote_rule`, ...).
///
/// # Safety
/// `config` must come from [`nd_config_new`]; `key` and `value` must be null
/// or NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn nd_config_set(config: *mut NdConfig, key: *const c_char, value: *const c_char) -> NdStatus {
    guarded(|| {
        let config = config.as_mut().ok_or_else(|| fail(NdStatus::NullPointer, "config is null"))?;
        let (key, value) = (text(key, "key")?, text(value, "value")?);
        check(config.spec.set(key, value))
    })
}

/// # Safety
/// `config` must be null or come from [`nd_config_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn nd_config_free(config: *mut NdConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs `trials` seeded trials (trial i uses `seed + i`) against the named
/// adversary, e.g. `"noise_free"`, `"random_flip:0.001"` or `"sneaky"`.
///
/// # Safety
/// `config` must come from [`nd_config_new`], `adversary` must be a
/// NUL-terminated string and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn nd_run(
    config: *const NdConfig,
    adversary: *const c_char,
    trials: u64,
    seed: u64,
    out: *mut *mut NdResults,
) -> NdStatus {
    guarded(|| {
        let config = config.as_ref().ok_or_else(|| fail(NdStatus::NullPointer, "config is null"))?;
        if out.is_null() {
            return Err(fail(NdStatus::NullPointer, "out is null"));
        }
        let spec = batch(config, text(adversary, "adversary")?, trials, seed)?;
        let trials = run_trials(&spec).map_err(|e| fail(status_of(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(NdResults { trials }));
        Ok(())
    })
}

/// Number of trials held; 0 for a null handle.
///
/// # Safety
/// `results` must be null or come from [`nd_run`].
#[no_mangle]
pub unsafe extern "C" fn nd_results_len(results: *const NdResults) -> usize {
    results.as_ref().map_or(0, |r| r.trials.len())
}

/// Copies trial `index` into `out`.
///
/// # Safety
/// `results` must come from [`nd_run`]; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn nd_results_get(results: *const NdResults, index: usize, out: *mut NdTrialSummary) -> NdStatus {
    guarded(|| {
        let results = results.as_ref().ok_or_else(|| fail(NdStatus::NullPointer, "results is null"))?;
        let out = out.as_mut().ok_or_else(|| fail(NdStatus::NullPointer, "out is null"))?;
        let r = results.trials.get(index).ok_or_else(|| {
            fail(NdStatus::InvalidArgument, format!("index {index} out of range for {} trials", results.trials.len()))
        })?;
        *out = NdTrialSummary {
            trial: r.trial,
            seed: r.seed,
            success: r.success,
            total_rounds: r.total_rounds,
            overhead: r.overhead,
            peak_memory_bits: r.peak_memory_bits_a.max(r.peak_memory_bits_b),
            jumps: r.jumps,
            budget_spent: r.budget_spent,
            budget_limit: r.budget_limit,
            max_rewind: r.max_rewind,
            small_collisions: r.small_collisions,
            big_collisions: r.big_collisions,
        };
        Ok(())
    })
}

/// Writes the per-trial CSV the CLI produces.
///
/// # Safety
/// `results` must come from [`nd_run`]; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nd_results_write_csv(results: *const NdResults, path: *const c_char) -> NdStatus {
    guarded(|| {
        let results = results.as_ref().ok_or_else(|| fail(NdStatus::NullPointer, "results is null"))?;
        let path = Path::new(text(path, "path")?);
        let file = std::fs::File::create(path).map_err(|e| fail(NdStatus::Io, format!("{}: {e}", path.display())))?;
        check(write_results_csv(file, &results.trials))
    })
}

/// # Safety
/// `results` must be null or come from [`nd_run`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn nd_results_free(results: *mut NdResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Runs the attack with the third meeting point enabled and disabled on the
/// same seeds and summarises the comparison.
///
/// # Safety
/// As for [`nd_run`]; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn nd_attack(
    config: *const NdConfig,
    adversary: *const c_char,
    trials: u64,
    seed: u64,
    out: *mut NdAttackSummary,
) -> NdStatus {
    guarded(|| {
        let config = config.as_ref().ok_or_else(|| fail(NdStatus::NullPointer, "config is null"))?;
        let out = out.as_mut().ok_or_else(|| fail(NdStatus::NullPointer, "out is null"))?;
        let spec = batch(config, text(adversary, "adversary")?, trials, seed)?;
        let (report, _) = attack_experiment(&spec).map_err(|e| fail(status_of(&e), e.to_string()))?;
        *out = NdAttackSummary {
            success_rate_on: report.on.success_rate,
            success_rate_off: report.off.success_rate,
            pairs_off_larger: report.pairs_off_larger,
            pairs_on_larger: report.pairs_on_larger,
            sign_test_p: report.sign_test_p,
        };
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always NUL-terminated when `len > 0`). Returns the full message length
/// plus one for the terminator, or 0 if no error has been recorded.
///
/// # Safety
/// `buf` must be null or valid for writing `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn nd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// The library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
