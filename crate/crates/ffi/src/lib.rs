//! C ABI over the experiment harness and the two closed-form task
//! families.
//!
//! Conventions: handles are opaque pointers owned by this library and
//! released with the matching `_free` function; fallible calls return a
//! [`BamldStatus`] code and leave a message for
//! [`bamld_last_error_message`]; strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;

use bamld::envs::{eval_g_bo, BoTaskParams, SinusoidTaskParams};
use bamld::harness::{rmse_curve_values, run_experiment, CliOverrides, ConfigFile, ExperimentConfig};
use bamld::Method;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Status codes returned by fallible functions.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BamldStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    RuntimeError = 4,
    BufferTooSmall = 5,
    SuiteFailed = 6,
}

fn status_of(err: &bamld::Error) -> BamldStatus {
    match err {
        bamld::Error::Config(_) | bamld::Error::Json(_) | bamld::Error::CsvParse { .. } => {
            BamldStatus::InvalidConfig
        }
        _ => BamldStatus::RuntimeError,
    }
}

/// An experiment configuration behind an opaque handle.
pub struct BamldExperiment {
    config: ExperimentConfig,
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, BamldStatus> {
    if ptr.is_null() {
        set_last_error("null pointer argument");
        return Err(BamldStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error("argument is not valid UTF-8");
        BamldStatus::InvalidUtf8
    })
}

/// Message describing the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bamld_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bamld_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses a JSON experiment config (same schema as the CLI's config file;
/// missing keys take profile defaults). Returns NULL on error.
///
/// # Safety
/// `json` must be a valid NUL-terminated string or NULL.
#[no_mangle]
pub unsafe extern "C" fn bamld_experiment_from_json(json: *const c_char) -> *mut BamldExperiment {
    let Ok(json) = cstr_arg(json) else {
        return std::ptr::null_mut();
    };
    let file = match ConfigFile::from_json(json) {
        Ok(f) => f,
        Err(e) => {
            set_last_error(&e.to_string());
            return std::ptr::null_mut();
        }
    };
    match ExperimentConfig::resolve(file, CliOverrides::default()) {
        Ok(config) => Box::into_raw(Box::new(BamldExperiment { config })),
        Err(e) => {
            set_last_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Runs the experiment, writing results under `out_dir` (overriding the
/// config's output directory when non-NULL).
///
/// # Safety
/// `handle` must come from [`bamld_experiment_from_json`] and not be freed;
/// `out_dir` must be NULL or a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bamld_experiment_run(
    handle: *const BamldExperiment,
    out_dir: *const c_char,
) -> BamldStatus {
    if handle.is_null() {
        set_last_error("null experiment handle");
        return BamldStatus::NullPointer;
    }
    let mut config = (*handle).config.clone();
    if !out_dir.is_null() {
        match cstr_arg(out_dir) {
            Ok(dir) => config.output_dir = PathBuf::from(dir),
            Err(code) => return code,
        }
    }
    match run_experiment(&config) {
        Ok(artifacts) => match artifacts.property_suite_passed {
            Some(false) => {
                set_last_error("property suite failed");
                BamldStatus::SuiteFailed
            }
            _ => BamldStatus::Ok,
        },
        Err(e) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Releases an experiment handle. NULL is a no-op.
///
/// # Safety
/// `handle` must come from [`bamld_experiment_from_json`] and not have been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn bamld_experiment_free(handle: *mut BamldExperiment) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Runs one (seed, method) active-learning run of the configured RMSE
/// experiment and writes the per-round RMSE curve into `out`. `written`
/// receives the number of rounds.
///
/// # Safety
/// `handle`, `method`, `out`, and `written` must be valid; `out` must have
/// room for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bamld_rmse_curve(
    handle: *const BamldExperiment,
    seed: u64,
    method: *const c_char,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> BamldStatus {
    if handle.is_null() || out.is_null() || written.is_null() {
        set_last_error("null pointer argument");
        return BamldStatus::NullPointer;
    }
    let method = match cstr_arg(method).and_then(|m| {
        Method::parse(m).map_err(|e| {
            set_last_error(&e.to_string());
            BamldStatus::InvalidConfig
        })
    }) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let config = &(*handle).config;
    match rmse_curve_values(config, seed, method) {
        Ok(values) => {
            if values.len() > out_len {
                set_last_error(&format!(
                    "buffer holds {out_len} values, curve has {}",
                    values.len()
                ));
                return BamldStatus::BufferTooSmall;
            }
            std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
            *written = values.len();
            BamldStatus::Ok
        }
        Err(e) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// The black-box objective `2 w1 p1(x) + 1.5 w2 p2(x) + 1.8 w3 p3(x) + 1`.
#[no_mangle]
pub extern "C" fn bamld_bo_objective(
    w1: f64,
    w2: f64,
    w3: f64,
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
    x: f64,
) -> f64 {
    eval_g_bo(
        &BoTaskParams {
            w1,
            w2,
            w3,
            alpha1,
            alpha2,
            alpha3,
        },
        x,
    )
}

/// The regression mean function `alpha x + a sin(1.5 (x - b)) + c`.
#[no_mangle]
pub extern "C" fn bamld_sinusoid_mean(a: f64, b: f64, c: f64, alpha: f64, x: f64) -> f64 {
    SinusoidTaskParams { a, b, c, alpha }.mean_at(x)
}
