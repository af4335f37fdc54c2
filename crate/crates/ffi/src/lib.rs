//! C interface to the curriculum experiment harness.
//!
//! Configs and results are opaque heap handles owned by the caller and
//! released with their `*_free` function. Every fallible call returns a
//! [`CurStatus`]; on failure the message is kept per thread and read back
//! with [`cur_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use curriculum::harness::{
    aggregate, save_transitions, Baseline, Experiment, ExperimentConfig, LearningCurve, TrialResult,
};
use curriculum::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Io = 4,
    Parse = 5,
    NumericFault = 6,
    OutOfRange = 7,
    Internal = 8,
}

/// An experiment configuration.
pub struct CurConfig {
    inner: ExperimentConfig,
}

/// Per-trial costs and the learning curve of a finished experiment.
pub struct CurResults {
    trials: Vec<TrialResult>,
    curve: LearningCurve,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CurCurvePoint {
    pub episode: usize,
    pub mean_cost: f64,
    pub std_error: f64,
    pub n_trials: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CurStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) => CurStatus::Config,
            Error::Io { .. } => CurStatus::Io,
            Error::Parse { .. } => CurStatus::Parse,
            Error::NumericFault(_) => CurStatus::NumericFault,
            Error::Csv(_) => CurStatus::Io,
            Error::ThreadPool(_) => CurStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CurStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CurStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            CurStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CurStatus::NullArgument, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CurStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn config_mut<'a>(cfg: *mut CurConfig) -> Result<&'a mut ExperimentConfig, Failure> {
    cfg.as_mut()
        .map(|c| &mut c.inner)
        .ok_or_else(|| null("config"))
}

unsafe fn results<'a>(r: *const CurResults) -> Result<&'a CurResults, Failure> {
    r.as_ref().ok_or_else(|| null("results"))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(Failure::from)
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len` bytes. Returns the full
/// message length plus one, or 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cur_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cur_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The default configuration: basic agent, finite-state representation.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cur_config_default(out: *mut *mut CurConfig) -> CurStatus {
    guard(|| {
        emit(
            out,
            CurConfig {
                inner: ExperimentConfig::default(),
            },
        )
    })
}

/// Reads a TOML config file.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cur_config_load(
    path: *const c_char,
    out: *mut *mut CurConfig,
) -> CurStatus {
    guard(|| {
        let path = text(path, "path")?;
        let inner = ExperimentConfig::load(path.as_ref())?;
        emit(out, CurConfig { inner })
    })
}

/// Parses a TOML config from a string.
///
/// # Safety
/// `toml` must be null or a NUL-terminated string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cur_config_parse(
    toml: *const c_char,
    out: *mut *mut CurConfig,
) -> CurStatus {
    guard(|| {
        let inner = ExperimentConfig::from_toml_str(text(toml, "toml")?)?;
        emit(out, CurConfig { inner })
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cur_config_free(cfg: *mut CurConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_trials(cfg: *mut CurConfig, trials: usize) -> CurStatus {
    guard(|| {
        config_mut(cfg)?.trials = trials;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_episodes(
    cfg: *mut CurConfig,
    episodes: usize,
) -> CurStatus {
    guard(|| {
        config_mut(cfg)?.episodes = episodes;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_seed(cfg: *mut CurConfig, seed: u64) -> CurStatus {
    guard(|| {
        config_mut(cfg)?.seed = seed;
        Ok(())
    })
}

/// Sets the agent: `basic`, `action-dependent` or `rope`.
///
/// # Safety
/// `cfg` must be null or a live handle; `name` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_agent(
    cfg: *mut CurConfig,
    name: *const c_char,
) -> CurStatus {
    guard(|| {
        let agent = parse(text(name, "agent")?)?;
        config_mut(cfg)?.agent = agent;
        Ok(())
    })
}

/// Sets the representation (`finite-state`, `continuous`, `naive:N`) and
/// clears any baseline.
///
/// # Safety
/// `cfg` must be null or a live handle; `name` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_repr(
    cfg: *mut CurConfig,
    name: *const c_char,
) -> CurStatus {
    guard(|| {
        let repr = parse(text(name, "repr")?)?;
        let c = config_mut(cfg)?;
        c.repr = Some(repr);
        c.baseline = None;
        Ok(())
    })
}

/// Runs the `no-curriculum` baseline instead of a learned curriculum.
///
/// # Safety
/// `cfg` must be null or a live handle; `name` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_baseline(
    cfg: *mut CurConfig,
    name: *const c_char,
) -> CurStatus {
    guard(|| {
        let baseline: Baseline = parse(text(name, "baseline")?)?;
        let c = config_mut(cfg)?;
        c.baseline = Some(baseline);
        c.repr = None;
        Ok(())
    })
}

/// Sets the source stop rule: `convergence`, `convergence:PATIENCE`, `fixed:N` or `return:RHO`.
///
/// # Safety
/// `cfg` must be null or a live handle; `rule` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_source_stop(
    cfg: *mut CurConfig,
    rule: *const c_char,
) -> CurStatus {
    guard(|| {
        let stop = parse(text(rule, "source stop")?)?;
        config_mut(cfg)?.cmdp.source_stop = stop;
        Ok(())
    })
}

/// Sets the transfer method: `value-function` or `reward-shaping`.
///
/// # Safety
/// `cfg` must be null or a live handle; `name` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_transfer(
    cfg: *mut CurConfig,
    name: *const c_char,
) -> CurStatus {
    guard(|| {
        let transfer = parse(text(name, "transfer")?)?;
        config_mut(cfg)?.cmdp.transfer = transfer;
        Ok(())
    })
}

/// Records per-selection transitions and writes them to `path` after a run.
/// A null `path` turns logging off.
///
/// # Safety
/// `cfg` must be null or a live handle; `path` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cur_config_set_transitions(
    cfg: *mut CurConfig,
    path: *const c_char,
) -> CurStatus {
    guard(|| {
        let path = if path.is_null() {
            None
        } else {
            Some(PathBuf::from(text(path, "path")?))
        };
        config_mut(cfg)?.transitions = path;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cur_config_validate(cfg: *const CurConfig) -> CurStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("config"))?;
        c.inner.validate()?;
        Ok(())
    })
}

/// Runs every trial of `cfg` on `threads` workers, or all cores when 0.
/// Results do not depend on the thread count. Writes the learning curve
/// and transition log when the config names output paths.
///
/// # Safety
/// `cfg` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cur_experiment_run(
    cfg: *const CurConfig,
    threads: usize,
    out: *mut *mut CurResults,
) -> CurStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?.inner.clone();
        if out.is_null() {
            return Err(null("out"));
        }
        cfg.validate()?;
        let exp = Experiment::new(cfg)?;
        let trials = exp.run((threads > 0).then_some(threads))?;
        let costs: Vec<Vec<f64>> = trials.iter().map(|t| t.costs.clone()).collect();
        let curve = aggregate(&costs);
        if let Some(path) = &exp.config().output {
            curve.save(path)?;
        }
        if let Some(path) = &exp.config().transitions {
            save_transitions(&trials, path)?;
        }
        emit(out, CurResults { trials, curve })
    })
}

/// # Safety
/// `r` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cur_results_free(r: *mut CurResults) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of trials, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cur_results_trials(r: *const CurResults) -> usize {
    r.as_ref().map_or(0, |r| r.trials.len())
}

/// Curriculum episodes per trial, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cur_results_episodes(r: *const CurResults) -> usize {
    r.as_ref().map_or(0, |r| r.curve.points.len())
}

/// Cost of curriculum episode `episode` (0-based) in trial `trial`.
///
/// # Safety
/// `r` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cur_results_cost(
    r: *const CurResults,
    trial: usize,
    episode: usize,
    out: *mut f64,
) -> CurStatus {
    guard(|| {
        let r = results(r)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cost = r
            .trials
            .get(trial)
            .and_then(|t| t.costs.get(episode))
            .ok_or_else(|| {
                Failure(
                    CurStatus::OutOfRange,
                    format!("no cost for trial {trial}, episode {episode}"),
                )
            })?;
        *out = *cost;
        Ok(())
    })
}

/// Learning-curve point for episode `episode` (0-based).
///
/// # Safety
/// `r` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cur_results_curve_point(
    r: *const CurResults,
    episode: usize,
    out: *mut CurCurvePoint,
) -> CurStatus {
    guard(|| {
        let r = results(r)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = r
            .curve
            .points
            .get(episode)
            .ok_or_else(|| Failure(CurStatus::OutOfRange, format!("no episode {episode}")))?;
        *out = CurCurvePoint {
            episode: p.episode,
            mean_cost: p.mean_cost,
            std_error: p.stderr,
            n_trials: p.n_trials,
        };
        Ok(())
    })
}

/// Writes the learning curve as CSV.
///
/// # Safety
/// `r` must be null or a live handle; `path` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cur_results_write_curve(
    r: *const CurResults,
    path: *const c_char,
) -> CurStatus {
    guard(|| {
        let r = results(r)?;
        r.curve.save(text(path, "path")?.as_ref())?;
        Ok(())
    })
}
