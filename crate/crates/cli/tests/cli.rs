use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn svtail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svtail"))
        .args(args)
        .env_remove("SVTAIL_SEED")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn tail_writes_fixed_schema_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = svtail(&["tail", "--n", "20", "--trials", "2000", "--seed", "42", "--eps-min", "0.005", "--eps-max", "0.2", "--out", out]);
    ok(&o);
    let csv = fs::read_to_string(dir.path().join("tail.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "eps,trials,successes,p_hat,ci_lo,ci_hi");
    assert_eq!(lines.count(), 25);
    let s = json(&dir.path().join("tail.summary.json"));
    assert!(s["fitted_exponent"].as_f64().unwrap() > 1.0);
    assert_eq!(s["analytic"]["main"].as_array().unwrap().len(), 25);
    let m = json(&dir.path().join("tail.manifest.json"));
    assert_eq!(m["master_seed"], 42);
    assert_eq!(m["config"]["n"], "20");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn constants_all_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = svtail(&["constants", "--K", "6", "--delta", "0.5", "--n-min", "1000", "--out", dir.path().to_str().unwrap()]);
    ok(&o);
    let s = json(&dir.path().join("constants.summary.json"));
    assert_eq!(s["all_hold"], true);
    let csv = fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
    assert!(csv.contains("inf,"));
}

#[test]
fn shift_meets_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = svtail(&[
        "shift", "--n", "50", "--t", "100", "--lambda", "0.1", "--trials", "1000", "--seed", "7", "--out", dir.path().to_str().unwrap(),
    ]);
    ok(&o);
    let s = json(&dir.path().join("shift.summary.json"));
    let holds = s["bound_holds_freq"].as_f64().unwrap();
    let corner = s["report"]["corner_zero"]["p_hat"].as_f64().unwrap();
    assert!(holds >= 0.99 * corner, "{holds} vs {corner}");
    assert_eq!(s["meets_target"], true);
    let rows = fs::read_to_string(dir.path().join("shift.csv")).unwrap().lines().count();
    assert_eq!(rows, 1001);
}

#[test]
fn replay_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&svtail(&["distance", "--n", "12", "--trials", "50", "--seed", "3", "--jobs", "2", "--out", a.path().to_str().unwrap()]));
    let man = a.path().join("distance.manifest.json");
    ok(&svtail(&["replay", man.to_str().unwrap(), "--out", b.path().to_str().unwrap(), "--jobs", "1"]));
    for f in ["distance.csv", "distance.summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(json(&man)["config_hash"], json(&b.path().join("distance.manifest.json"))["config_hash"]);
}

#[test]
fn replay_rejects_edited_manifest() {
    let a = tempfile::tempdir().unwrap();
    ok(&svtail(&["norm", "--n", "8", "--trials", "100", "--out", a.path().to_str().unwrap()]));
    let man = a.path().join("norm.manifest.json");
    let text = fs::read_to_string(&man).unwrap().replace("\"n\": \"8\"", "\"n\": \"9\"");
    fs::write(&man, text).unwrap();
    assert_eq!(svtail(&["replay", man.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(svtail(&["tail", "--bogus", "1"]).status.code(), Some(1));
    assert_eq!(svtail(&["tail", "--n", "abc", "--out", out]).status.code(), Some(1));
    assert_eq!(svtail(&["constants", "--delta", "1.5", "--out", out]).status.code(), Some(1));
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "nonsense = 1\n").unwrap();
    assert_eq!(svtail(&["tail", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(svtail(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = svtail(&["constants", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn precedence_flags_over_file_over_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# norm run\nn = 10\ntrials = 100\nseed = 5\n").unwrap();
    let out = dir.path().join("o");
    let o = Command::new(env!("CARGO_BIN_EXE_svtail"))
        .args(["norm", "--config", cfg.to_str().unwrap(), "--n", "12", "--out", out.to_str().unwrap()])
        .env("SVTAIL_SEED", "99")
        .output()
        .unwrap();
    ok(&o);
    let m = json(&out.join("norm.manifest.json"));
    assert_eq!(m["config"]["n"], "12");
    assert_eq!(m["config"]["trials"], "100");
    assert_eq!(m["master_seed"], 5);

    fs::write(&cfg, "n = 10\ntrials = 100\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_svtail"))
        .args(["norm", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("SVTAIL_SEED", "99")
        .output()
        .unwrap();
    ok(&o);
    assert_eq!(json(&out.join("norm.manifest.json"))["master_seed"], 99);
}

#[test]
fn every_subcommand_runs_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let runs: [&[&str]; 5] = [
        &["rowbound", "--n", "16", "--trials", "200", "--m-max", "3"],
        &["net-check", "--members", "50", "--n-max", "16"],
        &["schedule", "--delta", "0.3"],
        &["incompressible", "--n", "32", "--trials", "500", "--t-points", "5"],
        &["norm", "--n", "10", "--trials", "100", "--field", "real"],
    ];
    for args in runs {
        let mut full = args.to_vec();
        full.extend(["--out", out]);
        ok(&svtail(&full));
        assert!(dir.path().join(format!("{}.summary.json", args[0])).exists());
    }
    let s = json(&dir.path().join("schedule.summary.json"));
    assert_eq!(s["violations"].as_array().unwrap().len(), 0);
    assert_eq!(s["depth"], 5);
}
