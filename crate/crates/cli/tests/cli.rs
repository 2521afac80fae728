use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_randlochs");

const T23: &str = r#"[system_t]
kind = "integer_base"
bases = [2, 3]

[base_t]
kind = "bernoulli"
symbols = [2, 3]
weights = ["1/2", "1/2"]

[system_s]
kind = "integer_base"
bases = [10]

[base_s]
kind = "singleton"
symbol = 10

[run]
n = 120
trials = 12
seed = 42
checkpoints = [40, 80]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn value_of(stdout: &str, key: &str) -> f64 {
    let line = stdout
        .lines()
        .find(|l| l.starts_with(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"));
    line.split('=').nth(1).unwrap().trim().parse().unwrap()
}

#[test]
fn constants_without_config() {
    let o = run(&["constants"]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!((value_of(&s, "lochs_constant") - 0.970270114392034).abs() < 1e-9);
}

#[test]
fn constants_for_two_three_against_decimal() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", T23);
    let o = run(&["constants", "--config", &cfg]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    let h = 6f64.ln() / 2.0;
    assert!((value_of(&s, "h_T") - h).abs() < 1e-9);
    assert!((value_of(&s, "ratio") - h / 10f64.ln()).abs() < 1e-9);
    let (a, b) = (2f64.ln(), 3f64.ln());
    assert!((value_of(&s, "sigma") - (b - a) / 2.0).abs() < 1e-9);
    assert!(s.contains("ratio = 0.389075"));
}

#[test]
fn lochs_outputs_are_deterministic_across_threads() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", T23);
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert!(run(&["lochs", "--config", &cfg, "--threads", "1", "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["lochs", "--config", &cfg, "--out", b.to_str().unwrap()]).status.success());
    for f in ["lochs_trials.csv", "lochs_path.csv", "lochs_summary.json", "config_echo.toml"] {
        assert_eq!(read(&a, f), read(&b, f), "{f} differs");
    }
    let trials = read(&a, "lochs_trials.csv");
    assert_eq!(trials.lines().count(), 13);
    assert!(read(&a, "lochs_summary.json").contains("\"seed\": 42"));
}

#[test]
fn config_echo_reproduces_run() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", T23);
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert!(run(&["lochs", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    let echo = a.join("config_echo.toml");
    assert!(run(&["lochs", "--config", echo.to_str().unwrap(), "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(read(&a, "lochs_trials.csv"), read(&b, "lochs_trials.csv"));
    assert_eq!(read(&a, "config_echo.toml"), read(&b, "config_echo.toml"));
}

#[test]
fn seed_flag_overrides_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", T23);
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert!(run(&["lochs", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["lochs", "--config", &cfg, "--seed", "7", "--out", b.to_str().unwrap()]).status.success());
    assert_ne!(read(&a, "lochs_trials.csv"), read(&b, "lochs_trials.csv"));
    assert!(read(&b, "config_echo.toml").contains("seed = 7"));
}

#[test]
fn zero_trials_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", &T23.replace("trials = 12", "trials = 0"));
    let o = run(&["lochs", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line"), "{err}");
}

#[test]
fn malformed_weights_report_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", &T23.replace("[\"1/2\", \"1/2\"]", "[\"1/2\", \"1/3\"]"));
    let o = run(&["entropy", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line"), "{err}");
}

#[test]
fn unparsable_toml_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", "[run\nn = 3\n");
    assert_eq!(run(&["lochs", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn missing_config_exits_two() {
    assert_eq!(run(&["lochs"]).status.code(), Some(2));
}

#[test]
fn check_passes_on_small_depth() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", &T23.replace("n = 120", "n = 5").replace("trials = 12", "trials = 4"));
    let o = run(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn entropy_json_lists_estimators() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "t.toml", T23);
    let out = d.path().join("o");
    let o = run(&["entropy", "--config", &cfg, "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    let json = names
        .iter()
        .find(|n| n.to_string_lossy().ends_with(".json"))
        .expect("json artifact");
    let body = read(&out, &json.to_string_lossy());
    for m in ["smb", "rokhlin", "plugin_ar"] {
        assert!(body.contains(m), "{m} missing");
    }
}
