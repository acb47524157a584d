use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use bellctx_cli::pipeline::{self, MANIFEST_FILE, TIMESTAMP_KEY};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bellctx"))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn singlet_config(num_trials: u64, tau: f64, extra: &str) -> String {
    format!(
        r#"
[model]
kind = "singlet"
angles_a = [0.0, 1.5707963267948966]
angles_b = [0.7853981633974483, 2.356194490192345]

[schedule]
num_trials = {num_trials}
seed = 11

[matching]
tau = {tau:?}

[output]
dir = "out"
{extra}
"#
    )
}

const ANALYSIS_FILES: [&str; 6] = [
    pipeline::PAIRS_FILE,
    pipeline::SUMMARY_FILE,
    pipeline::CONDITIONALS_FILE,
    pipeline::NO_SIGNALING_FILE,
    pipeline::CHSH_FILE,
    pipeline::FEASIBILITY_FILE,
];

fn assert_same_files(a: &Path, b: &Path, names: &[&str]) {
    for name in names {
        let x = fs::read(a.join(name)).unwrap();
        let y = fs::read(b.join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn nonpositive_tau_is_a_config_error_with_no_outputs() {
    for tau in [0.0, -0.5] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), &singlet_config(100, tau, ""));
        let out = bin().arg("run").arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(!dir.path().join("out").exists());
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Missing config file.
    let out = bin().arg("run").arg(dir.path().join("nope.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Optimal matching beyond its size limit is a resource error.
    let cfg = write_config(dir.path(), &singlet_config(20_000, 0.25, "").replace("tau = 0.25", "tau = 0.25\npolicy = \"optimal\""));
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    // Malformed arm file is an input error naming the file and line.
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"arm\":\"A\",\"num_settings\":2,\"num_outcomes\":2}\n{\"t\":0.0,\"setting\":5,\"outcome\":0}\n").unwrap();
    let good = dir.path().join("good.jsonl");
    fs::write(&good, "{\"arm\":\"B\",\"num_settings\":2,\"num_outcomes\":2}\n").unwrap();
    let out = bin().args(["analyze", "--tau", "0.1", "--out"]).arg(dir.path().join("o")).arg(&bad).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bad.jsonl") && msg.contains("line 2"), "{msg}");
}

#[test]
fn run_then_analyze_reproduces_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &singlet_config(20_000, 0.25, "[detector.a]\nefficiency = 0.9\njitter_sigma = 0.01\n"));
    let status = bin().arg("run").arg(&cfg).output().unwrap().status;
    assert!(status.success());
    let out = dir.path().join("out");

    // Feeding back the pair set.
    let again = dir.path().join("again");
    let status = bin().arg("analyze").arg(out.join(pipeline::PAIRS_FILE)).arg("--out").arg(&again).output().unwrap().status;
    assert!(status.success());
    assert_same_files(&out, &again, &ANALYSIS_FILES);

    // Matching the raw arm files again, in either order.
    let rematched = dir.path().join("rematched");
    let status = bin()
        .arg("analyze")
        .arg(out.join(pipeline::ARM_B_FILE))
        .arg(out.join(pipeline::ARM_A_FILE))
        .args(["--tau", "0.25", "--policy", "greedy-nearest", "--out"])
        .arg(&rematched)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert_same_files(&out, &rematched, &ANALYSIS_FILES);

    // A pair set with a conflicting window is rejected.
    let out2 = bin().arg("analyze").arg(out.join(pipeline::PAIRS_FILE)).args(["--tau", "0.3", "--out"]).arg(dir.path().join("x")).output().unwrap();
    assert_eq!(out2.status.code(), Some(2));
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    fs::write(&a, "{\"arm\":\"A\",\"num_settings\":2,\"num_outcomes\":2}\n{\"t\":0.0,\"setting\":0,\"outcome\":1}\n").unwrap();
    fs::write(&b, "{\"arm\":\"B\",\"num_settings\":2,\"num_outcomes\":3}\n{\"t\":0.0,\"setting\":1,\"outcome\":2}\n").unwrap();
    let out = bin()
        .args(["analyze", "--tau", "0.1", "--dims", "2,2,2,2", "--out"])
        .arg(dir.path().join("o"))
        .arg(&a)
        .arg(&b)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("b.jsonl") && msg.contains("dimension mismatch"), "{msg}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &singlet_config(50_000, 0.2, "[detector.b]\nefficiency = 0.7\njitter_sigma = 0.02\ndark_rate = 0.05\n"),
    );
    let mut dirs = Vec::new();
    for threads in ["1", "4"] {
        let status = bin().env("RAYON_NUM_THREADS", threads).arg("run").arg(&cfg).output().unwrap().status;
        assert!(status.success());
        let keep = dir.path().join(format!("t{threads}"));
        fs::rename(dir.path().join("out"), &keep).unwrap();
        dirs.push(keep);
    }
    assert_same_files(&dirs[0], &dirs[1], &[pipeline::ARM_A_FILE, pipeline::ARM_B_FILE]);
    assert_same_files(&dirs[0], &dirs[1], &ANALYSIS_FILES);
    let strip = |p: &Path| -> Vec<String> {
        fs::read_to_string(p.join(MANIFEST_FILE))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with(&format!("{TIMESTAMP_KEY}=")))
            .map(String::from)
            .collect()
    };
    assert_eq!(strip(&dirs[0]), strip(&dirs[1]));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &singlet_config(1000, 0.25, ""));
    assert!(bin().arg("run").arg(&cfg).args(["--seed", "5"]).output().unwrap().status.success());
    let manifest = fs::read_to_string(dir.path().join("out").join(MANIFEST_FILE)).unwrap();
    assert!(manifest.lines().any(|l| l == "seed=5"));
    assert!(manifest.lines().any(|l| l == "schedule.seed=5"));
}

#[test]
fn manifest_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &singlet_config(1000, 0.25, ""));
    let outcome = bellctx_cli::run(&cfg, None).unwrap();
    let manifest = fs::read_to_string(outcome.output_dir.join(MANIFEST_FILE)).unwrap();
    for key in ["matching.policy=greedy-nearest", "analysis.z_threshold=5.0", "analysis.tolerance=1e-9", "analysis.project_singles=false", "schedule.trial_period=1.0", "detector.a.efficiency=1.0"] {
        assert!(manifest.lines().any(|l| l == key), "missing {key}");
    }
    let keys: Vec<&str> = manifest.lines().map(|l| l.split('=').next().unwrap()).collect();
    let mut unique = keys.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), keys.len());
}

#[test]
fn empty_setting_pairs_are_flagged_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &singlet_config(2, 0.25, ""));
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let read = |name: &str| -> serde_json::Value { serde_json::from_str(&fs::read_to_string(dir.path().join("out").join(name)).unwrap()).unwrap() };
    let feasibility = read(pipeline::FEASIBILITY_FILE);
    assert_eq!(feasibility["status"], "undetermined");
    assert!(feasibility["missing_setting_pairs"].as_array().unwrap().len() >= 2);
    assert_eq!(read(pipeline::CHSH_FILE)["status"], "undetermined");
    let skipped = read(pipeline::NO_SIGNALING_FILE)["skipped"].as_array().unwrap().len();
    assert!(skipped >= 2);
}
