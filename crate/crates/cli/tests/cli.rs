use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fowt-ccd"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FOWT_CCD_WORKERS")
        .env_remove("FOWT_CCD_CACHE_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMOKE_SWEEP: &str = r#"{
  "c_s": {"lower": 36, "upper": 78, "count": 2},
  "c_d": {"lower": 6, "upper": 24, "count": 2},
  "theta_levels_deg": [6],
  "oc": {"mesh": 60, "t_f": 60},
  "wind": {"means": [10, 14], "t_f": 60},
  "family": {"c_s": 2, "c_d": 2}
}"#;

#[test]
fn trim_writes_one_model_per_speed_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run(&["trim", "--out", out], dir.path());
        assert_eq!(code(&o), 0, "{o:?}");
    }
    let models = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("model_")
        })
        .count();
    assert_eq!(models, 23);
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/trim.csv"), read("b/trim.csv"));
    assert_eq!(read("a/model_007.json"), read("b/model_007.json"));
    let table = String::from_utf8(read("a/trim.csv")).unwrap();
    assert_eq!(table.lines().count(), 24);
}

#[test]
fn out_of_bounds_plant_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["trim", "--plant", "90,12", "--out", "m"], dir.path());
    assert_eq!(code(&o), 2);
    let o = run(&["trim", "--plant", "50", "--out", "m"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn lpv_build_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&run(&["trim", "--out", "models"], p)), 0);

    let o = run(
        &[
            "lpv-build",
            "--models",
            "models",
            "--split",
            "alternate",
            "--out",
            "lpv",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let manifest = json(&p.join("lpv/manifest.json"));
    assert_eq!(manifest["models"].as_array().unwrap().len(), 12);

    let o = run(
        &[
            "lpv-validate",
            "--models",
            "models",
            "--split",
            "alternate",
            "--out",
            "val",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let rep = json(&p.join("val/validation.json"));
    let peak = rep["peak_error_w"].as_f64().unwrap();
    assert!((8.0..=12.0).contains(&peak), "{peak}");

    let o = run(
        &[
            "lpv-validate",
            "--models",
            "models",
            "--split",
            "none",
            "--out",
            "val0",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let rep = json(&p.join("val0/validation.json"));
    for h in rep["heldout"].as_array().unwrap() {
        assert_eq!(h["hinf_error"].as_f64().unwrap(), 0.0);
    }

    let o = run(
        &[
            "lpv-validate",
            "--models",
            "models",
            "--epsilon",
            "1e-9",
            "--out",
            "strict",
        ],
        p,
    );
    assert_eq!(code(&o), 2);

    let o = run(&["lpv-validate", "--models", "missing", "--out", "v"], p);
    assert_eq!(code(&o), 4);
}

#[test]
fn lpv_build_rejects_too_few_models() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&run(&["trim", "--wind-range", "3:5:1", "--out", "m"], p)),
        0
    );
    assert_eq!(
        code(&run(&["lpv-build", "--models", "m", "--out", "l"], p)),
        2
    );
}

#[test]
fn oc_solve_smoke_and_infeasible_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let start = Instant::now();
    let o = run(
        &[
            "oc-solve",
            "--case",
            "7",
            "--theta-max",
            "4",
            "--N",
            "101",
            "--t-f",
            "100",
            "--out",
            "s",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let summary = json(&p.join("s/summary.json"));
    assert_eq!(summary["status"], "optimal");
    assert!(summary["average_power"].as_f64().unwrap() > 1e7);
    assert!(p.join("s/solution.csv").exists());

    let o = run(
        &[
            "oc-solve",
            "--theta-max",
            "1",
            "--N",
            "41",
            "--t-f",
            "40",
            "--out",
            "i",
        ],
        p,
    );
    assert_eq!(code(&o), 3);
    let summary = json(&p.join("i/summary.json"));
    assert!(summary["average_power"].is_null());
}

#[test]
fn oc_solve_uses_a_stored_family() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&run(&["lpv-build", "--family", "2x2", "--out", "fam"], p)),
        0
    );
    let args = [
        "oc-solve",
        "--lpv",
        "fam",
        "--plant",
        "36,24",
        "--omega-max",
        "2",
        "--N",
        "61",
        "--t-f",
        "60",
    ];
    let o = run(&[&args[..], &["--out", "s"]].concat(), p);
    assert_eq!(code(&o), 0, "{o:?}");
    let summary = json(&p.join("s/summary.json"));
    assert_eq!(
        summary["settings"]["limits"]["omega_max"].as_f64().unwrap(),
        0.9424
    );
}

#[test]
fn oc_solve_config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("oc.json"), r#"{"mesh": 41, "limits": {"theta": 4}}"#).unwrap();
    let o = run(&["oc-solve", "--config", "oc.json", "--out", "s"], p);
    assert_eq!(code(&o), 2);
    let o = run(&["oc-solve", "--config", "absent.json", "--out", "s"], p);
    assert_eq!(code(&o), 4);
}

#[test]
fn sweep_resumes_from_cache_with_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("sweep.json"), SMOKE_SWEEP).unwrap();
    let o = run(
        &[
            "sweep",
            "--config",
            "sweep.json",
            "--out",
            "a",
            "--cache-dir",
            "cache",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let summary = json(&p.join("a/summary.json"));
    assert_eq!(summary["stats"]["solves"], 8);
    assert_eq!(summary["stats"]["cache_hits"], 0);

    // Drop part of the cache as if the first run had been interrupted.
    let mut entries: Vec<_> = std::fs::read_dir(p.join("cache"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for e in &entries[..3] {
        std::fs::remove_file(e).unwrap();
    }
    let o = Command::new(env!("CARGO_BIN_EXE_fowt-ccd"))
        .args(["sweep", "--config", "sweep.json", "--out", "b"])
        .current_dir(p)
        .env("FOWT_CCD_CACHE_DIR", "cache")
        .env("FOWT_CCD_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{o:?}");
    let summary = json(&p.join("b/summary.json"));
    assert_eq!(summary["stats"]["cache_hits"], 5);
    assert_eq!(summary["stats"]["workers"], 2);
    for f in [
        "sweep.csv",
        "cases.csv",
        "heatmap_lcoe.csv",
        "heatmap_aep.csv",
        "heatmap_power.csv",
        "sweep.json",
    ] {
        let a = std::fs::read(p.join("a").join(f)).unwrap();
        let b = std::fs::read(p.join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn sweep_rejects_unknown_keys_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.json"), r#"{"grid": 3}"#).unwrap();
    let o = run(&["sweep", "--config", "bad.json", "--out", "o"], p);
    assert_eq!(code(&o), 2);
    assert!(!p.join("o").exists());
    std::fs::write(p.join("bad.json"), r#"{"oc": {"mesh": 10, "N": 3}}"#).unwrap();
    assert_eq!(
        code(&run(&["sweep", "--config", "bad.json", "--out", "o"], p)),
        2
    );
}

#[test]
fn report_lists_levels_and_corners() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("sweep.json"), SMOKE_SWEEP).unwrap();
    assert_eq!(
        code(&run(&["sweep", "--config", "sweep.json", "--out", "s"], p)),
        0
    );
    let o = run(&["report", "--sweep", "s", "--format", "csv"], p);
    assert_eq!(code(&o), 0, "{o:?}");
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "kind,theta_max_deg,f_s,f_d,c_s,c_d,lcoe,e_n");
    assert_eq!(rows.iter().filter(|r| r.starts_with("level,")).count(), 1);
    assert_eq!(rows.iter().filter(|r| r.starts_with("corner,")).count(), 4);
    let o = run(&["report", "--sweep", "s", "--format", "json"], p);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["corners"].as_array().unwrap().len(), 4);
    assert_eq!(code(&run(&["report", "--sweep", "nothing"], p)), 4);
}
