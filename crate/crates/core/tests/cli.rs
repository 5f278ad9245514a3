use std::process::{Command, Output};

fn homega(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homega")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_standard_half_is_member_everywhere() {
    let o = homega(&["classify", "--weight", "standard:0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("Member").count(), 3, "{text}");
    assert!(!text.contains("NonMember"));
}

#[test]
fn kernel_constant_weight_value() {
    let o = homega(&["kernel", "--weight", "constant:1", "--t", "0.5", "--z", "0.5", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let re = v["value_re"].as_f64().unwrap();
    assert!((re - 4.0 / 3.0).abs() < 1e-12, "{re}");
}

#[test]
fn h1_condition_diverges_for_lebesgue_weight() {
    let o = homega(&["check", "--condition", "h1", "--weight", "standard:0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Diverging"));
}

#[test]
fn configuration_errors_exit_with_two() {
    for args in [
        &["kernel", "--weight", "nope:1", "--t", "0.5", "--z", "0.5"][..],
        &["kernel", "--weight", "constant:1", "--t", "1.5", "--z", "0.5"],
        &["kernel", "--weight", "constant:1", "--t", "0.5", "--z", "1.0"],
        &["check", "--condition", "ap", "--weight", "standard:0", "--p", "2"],
        &["check", "--condition", "lp-hp", "--weight", "standard:0", "--p", "0.5"],
        &["classify", "--weight", "standard:0", "--grid-depth", "3"],
        &["suite", "--only", "10"],
        &["no-such-command"],
    ] {
        let o = homega(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn csv_output_is_written_atomically_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lp.csv");
    let o = homega(&[
        "check", "--condition", "lp-hp", "--weight", "standard:0", "--p", "2", "--grid-depth", "12", "--format", "csv", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# condition lp_hp"));
    assert_eq!(lines.next().unwrap(), "grid_point,value");
    assert_eq!(lines.count(), 13);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1, "no temporary file left behind");
}

#[test]
fn config_file_runs_a_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "command = \"check\"\ncondition = \"carleson\"\nweight = [\"standard:0.5\", \"standard:-0.5\"]\nformat = \"json\"\n",
    )
    .unwrap();
    let o = homega(&["--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let verdicts: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["verdict"].as_str().unwrap()).collect();
    assert_eq!(verdicts, ["Bounded", "Diverging"]);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "command = \"classify\"\nweigth = \"standard:0\"\n").unwrap();
    assert_eq!(homega(&["--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn suite_subset_passes_and_thread_env_is_honoured() {
    let o = Command::new(env!("CARGO_BIN_EXE_homega"))
        .args(["suite", "--only", "1,3"])
        .env("HOMEGA_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("PASS [").count(), 2);
}
