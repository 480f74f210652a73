//! Exercises the C ABI from Rust, calling through the exported symbols the
//! way a foreign binding would.

use std::ffi::{CStr, CString};

use bamld_ffi::{
    bamld_bo_objective, bamld_experiment_free, bamld_experiment_from_json, bamld_experiment_run,
    bamld_last_error_message, bamld_rmse_curve, bamld_sinusoid_mean, bamld_version, BamldStatus,
};

fn tiny_config_json(out_dir: &str) -> CString {
    CString::new(format!(
        r#"{{
            "experiment": "rmse_fig2",
            "seeds": [1],
            "pool_size": 3,
            "samples_per_task": 5,
            "budget": 2,
            "methods": ["uniform"],
            "net_hidden": [3],
            "particles": 2,
            "svgd_steps": 10,
            "refit_steps": 3,
            "mc_samples": 4,
            "n_test_tasks": 2,
            "n_adapt": 2,
            "n_eval": 3,
            "output_dir": "{out_dir}"
        }}"#
    ))
    .unwrap()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(bamld_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn objective_functions_match_closed_forms() {
    // w = 0 collapses to the +1 offset
    assert_eq!(bamld_bo_objective(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.2), 1.0);
    // sinusoid at x=0 with b=0 is just c
    assert_eq!(bamld_sinusoid_mean(1.0, 0.0, 5.0, 0.5, 0.0), 5.0);
    let x = 1.3f64;
    let want = 0.5 * x + 0.9 * (1.5 * (x - 0.2)).sin() + 5.0;
    assert!((bamld_sinusoid_mean(0.9, 0.2, 5.0, 0.5, x) - want).abs() < 1e-15);
}

#[test]
fn null_and_garbage_inputs_are_rejected() {
    let handle = unsafe { bamld_experiment_from_json(std::ptr::null()) };
    assert!(handle.is_null());
    let msg = unsafe { CStr::from_ptr(bamld_last_error_message()) };
    assert!(!msg.to_bytes().is_empty());

    let bad = CString::new("{ not json").unwrap();
    let handle = unsafe { bamld_experiment_from_json(bad.as_ptr()) };
    assert!(handle.is_null());

    let status = unsafe { bamld_experiment_run(std::ptr::null(), std::ptr::null()) };
    assert_eq!(status, BamldStatus::NullPointer);
}

#[test]
fn experiment_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let json = tiny_config_json(dir.path().to_str().unwrap());
    let handle = unsafe { bamld_experiment_from_json(json.as_ptr()) };
    assert!(!handle.is_null(), "config rejected: {}", unsafe {
        CStr::from_ptr(bamld_last_error_message()).to_string_lossy()
    });

    let status = unsafe { bamld_experiment_run(handle, std::ptr::null()) };
    assert_eq!(status, BamldStatus::Ok);
    assert!(dir.path().join("results.csv").exists());
    assert!(dir.path().join("config_resolved.json").exists());

    unsafe { bamld_experiment_free(handle) };
}

#[test]
fn rmse_curve_fills_the_buffer() {
    let dir = tempfile::tempdir().unwrap();
    let json = tiny_config_json(dir.path().to_str().unwrap());
    let handle = unsafe { bamld_experiment_from_json(json.as_ptr()) };
    assert!(!handle.is_null());

    let method = CString::new("uniform").unwrap();
    let mut out = [0.0f64; 16];
    let mut written = 0usize;
    let status = unsafe {
        bamld_rmse_curve(
            handle,
            1,
            method.as_ptr(),
            out.as_mut_ptr(),
            out.len(),
            &mut written,
        )
    };
    assert_eq!(status, BamldStatus::Ok);
    assert_eq!(written, 2); // budget rounds
    assert!(out[..written].iter().all(|v| v.is_finite() && *v > 0.0));

    // too-small buffer reports the required size in the error message
    let mut tiny = [0.0f64; 1];
    let status = unsafe {
        bamld_rmse_curve(
            handle,
            1,
            method.as_ptr(),
            tiny.as_mut_ptr(),
            tiny.len(),
            &mut written,
        )
    };
    assert_eq!(status, BamldStatus::BufferTooSmall);

    let bad_method = CString::new("nonsense").unwrap();
    let status = unsafe {
        bamld_rmse_curve(
            handle,
            1,
            bad_method.as_ptr(),
            out.as_mut_ptr(),
            out.len(),
            &mut written,
        )
    };
    assert_eq!(status, BamldStatus::InvalidConfig);

    unsafe { bamld_experiment_free(handle) };
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/bamld.h"
    ))
    .expect("build script generates include/bamld.h");
    for symbol in [
        "bamld_version",
        "bamld_last_error_message",
        "bamld_experiment_from_json",
        "bamld_experiment_run",
        "bamld_experiment_free",
        "bamld_rmse_curve",
        "bamld_bo_objective",
        "bamld_sinusoid_mean",
        "typedef struct BamldExperiment BamldExperiment",
        "BAMLD_STATUS_OK",
    ] {
        assert!(header.contains(symbol), "header missing: {symbol}");
    }
}
