use std::path::Path;
use std::process::{Command, Output};

const CHEST: &str = r#"
[run]
trials = 4
seed = 5

[frame]
m = 16
n = 8
delta_f = 15000.0
f_c = 5e9

[estimation]
levels = [1, 2]

[sweep]
axis = "snr_p"
points = [10.0, 20.0]
"#;

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otfs-sim")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn selftest_passes() {
    let out = sim(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().count() > 10);
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn chest_sweep_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "chest.toml", CHEST);
    let a = sim(&["chest-sweep", "--config", &cfg, "--threads", "1"]);
    let b = sim(&["chest-sweep", "--config", &cfg, "--threads", "2"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains("nmse_db_cm_lh2"));

    let csv = dir.path().join("out.csv");
    let c = sim(&["chest-sweep", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert!(c.status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), a.stdout);
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "chest.toml", CHEST);
    let a = sim(&["chest-sweep", "--config", &cfg]);
    let b = sim(&["chest-sweep", "--config", &cfg, "--seed", "6"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn bad_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &CHEST.replace("levels", "level"));
    let out = sim(&["chest-sweep", "--config", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 13"), "{err}");
}

#[test]
fn zero_threads_is_a_usage_error() {
    let out = sim(&["selftest", "--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_is_reported() {
    let out = sim(&["ber-sweep"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}
