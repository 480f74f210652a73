//! End-to-end runs of the `bamld` binary against tiny configs.

use std::path::Path;
use std::process::Command;

fn bamld() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bamld"))
}

fn tiny_config(dir: &Path, experiment: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let out = dir.join("out");
    let json = format!(
        r#"{{
            "experiment": "{experiment}",
            "seeds": [1],
            "pool_size": 4,
            "samples_per_task": 6,
            "budget": 1,
            "methods": ["bamld", "uncertainty", "diversity", "uniform"],
            "net_hidden": [4, 4],
            "particles": 2,
            "svgd_steps": 20,
            "refit_steps": 5,
            "mc_samples": 8,
            "n_test_tasks": 2,
            "n_adapt": 2,
            "n_eval": 3,
            "clusters": [1, 2],
            "bo_iterations": 3,
            "bo_candidate_grid": 20,
            "bo_update_steps": 4,
            "output_dir": "{}"
        }}"#,
        out.display()
    );
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn budget_one_emits_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), "rmse_fig2");
    let status = bamld().args(["run", "--config"]).arg(&config).status().unwrap();
    assert!(status.success());

    let csv = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "experiment,seed,method,step,metric,value");
    let data: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
    assert_eq!(data.len(), 4, "one rmse row per method:\n{csv}");
    assert!(data.iter().all(|l| l.contains(",1,rmse,")));

    // resolved config echoes every default and reproduces the run
    let echo = dir.path().join("out/config_resolved.json");
    assert!(echo.exists());
    let echoed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&echo).unwrap()).unwrap();
    assert_eq!(echoed["budget"], 1);
    assert_eq!(echoed["particles"], 2);
    assert!(echoed.get("gamma").is_some());
}

#[test]
fn same_config_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), "rmse_fig2");
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = bamld()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("results.csv")).unwrap();
    let b = std::fs::read(out_b.join("results.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn plot_renders_from_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), "rmse_fig2");
    assert!(bamld().args(["run", "--config"]).arg(&config).status().unwrap().success());

    let csv = dir.path().join("out/results.csv");
    let svg_path = dir.path().join("figure.svg");
    let status = bamld()
        .args(["plot", "--kind", "rmse", "--csv"])
        .arg(&csv)
        .arg("--out")
        .arg(&svg_path)
        .status()
        .unwrap();
    assert!(status.success());
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);

    // asking for a metric the CSV does not carry is a config error (exit 1)
    let status = bamld()
        .args(["plot", "--kind", "regret", "--csv"])
        .arg(&csv)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn bo_experiment_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), "bo_fig5");
    let status = bamld().args(["run", "--config"]).arg(&config).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    for scheme in ["vanilla_bo", "bamld_meta_bo", "full_meta_bo"] {
        assert!(csv.contains(scheme), "missing {scheme} rows");
    }
    assert!(csv.contains(",regret,"));
}

#[test]
fn invalid_config_exits_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"budget": 99}"#).unwrap();
    let out = bamld().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("budget"), "stderr: {stderr}");
}

#[test]
fn verify_suite_runs_clean() {
    let out = bamld().args(["verify", "--suite", "all"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "verify failed:\n{stdout}");
    assert!(stdout.contains("property checks passed"));
    assert!(!stdout.contains("FAIL"));
}
