use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn uict(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uict"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn grow_exports_the_causal_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = uict(
        &[
            "grow", "--m0", "3", "--moves", "+++-+--", "--export", "tri.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let tri = read_json(&dir.path().join("tri.json"));
    assert_eq!(tri["slice_sizes"], serde_json::json!([3, 4]));
    assert_eq!(
        tri["strips"][0]["down_degrees"],
        serde_json::json!([2, 1, 1])
    );
    assert_eq!(tri["strips"][0]["shift"], 0);

    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["report"]["stopped"], true);
    assert_eq!(report["config"]["moves"], "+++-+--");
}

#[test]
fn unstopped_moves_need_the_almost_causal_flag() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "grow", "--m0", "2", "--moves", "-++--", "--export", "t.json",
    ];
    assert_eq!(code(&uict(&args, dir.path())), 2);
    assert!(!dir.path().join("t.json").exists());
    let mut with_flag = args.to_vec();
    with_flag.push("--almost-causal");
    assert_eq!(code(&uict(&with_flag, dir.path())), 0);
    let act = read_json(&dir.path().join("t.json"));
    assert_eq!(act["m0"], 2);
}

#[test]
fn outputs_are_reproducible_across_thread_counts() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let sub = "out";
        let out = Command::new(env!("CARGO_BIN_EXE_uict"))
            .args([
                "strip-kernel",
                "--m",
                "2",
                "--samples",
                "5000",
                "--seed",
                "11",
                "--out-dir",
                sub,
            ])
            .env("UICT_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let out = Command::new(env!("CARGO_BIN_EXE_uict"))
            .args([
                "sample",
                "--steps",
                "3000",
                "--seed",
                "11",
                "--out-dir",
                sub,
            ])
            .env("UICT_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        files(&dir.path().join(sub))
    };
    let a = run("1");
    let b = run("3");
    assert_eq!(a.len(), 6);
    assert_eq!(a, b);
}

#[test]
fn failed_check_exits_one_and_bad_usage_two() {
    let dir = tempfile::tempdir().unwrap();
    let fail = uict(
        &["strip-kernel", "--samples", "2000", "--p-min", "1"],
        dir.path(),
    );
    assert_eq!(code(&fail), 1);
    let report: Value = serde_json::from_slice(&fail.stdout).unwrap();
    assert_eq!(report["passed"], false);

    assert_eq!(code(&uict(&["strip-kernel", "--m", "many"], dir.path())), 2);
    assert_eq!(code(&uict(&["verify", "--only", "0"], dir.path())), 2);
    assert_eq!(code(&uict(&["nonsense"], dir.path())), 2);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(
        code(&uict(&["sample", "--out-dir", "file/sub"], dir.path())),
        2
    );
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"command": "sample", "m0": 4, "steps": 500, "seed": 2}"#,
    )
    .unwrap();
    let out = uict(&["--config", "cfg.json", "--seed", "8"], dir.path());
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["config"]["m0"], 4);
    assert_eq!(report["config"]["steps"], 500);
    assert_eq!(report["config"]["seed"], 8);
}

#[test]
fn json_tables_carry_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = uict(
        &[
            "slice-dist",
            "--samples",
            "2000",
            "--generations",
            "2",
            "--format",
            "json",
            "--out-dir",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = read_json(&dir.path().join("o/slice_marginals.json"));
    assert_eq!(table["config"]["generations"], 2);
    // generation 1 from a single vertex: P(k = 1) = 1/4
    assert_eq!(table["rows"][0]["p"], 0.25);
    let report = read_json(&dir.path().join("o/slice-dist.json"));
    assert_eq!(report["report"]["slices"].as_array().unwrap().len(), 2);
}

#[test]
fn quick_verify_on_exact_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = uict(
        &[
            "verify",
            "--level",
            "quick",
            "--only",
            "1,2,5,11,12",
            "--out-dir",
            "v",
        ],
        dir.path(),
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(code(&out), 0, "{stderr}");
    assert_eq!(
        stderr.lines().filter(|l| l.starts_with("[PASS]")).count(),
        5
    );
    let report = read_json(&dir.path().join("v/verify.json"));
    assert_eq!(report["report"]["level"], "quick");
    assert_eq!(report["report"]["results"].as_array().unwrap().len(), 5);
}
