use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_brownian-lab"))
}

#[test]
fn selftest_passes() {
    let out = bin().args(["selftest", "--threads", "2"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn flags_override_config_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind": "inradius", "m": 2, "s_list": [0.1, 0.2], "replicas": 50, "g": 16}"#).unwrap();
    let run = |out: &str, threads: &str| {
        let o = bin()
            .args(["inradius", "--config", cfg.to_str().unwrap(), "--replicas", "3", "--seed", "9"])
            .args(["--threads", threads, "--out"])
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join(out).join("inradius.csv")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "3");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3, "header plus s x replicas rows");
    assert!(text.lines().skip(1).all(|l| l.ends_with(",9")));
}

#[test]
fn invalid_config_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["capacity", "--shape", "path", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("s_list"));
    assert!(!dir.path().join("capacity.csv").exists());
}

#[test]
fn mismatched_config_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind": "inradius", "s_list": [1]}"#).unwrap();
    let o = bin().args(["spectrum", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!o.status.success());
}
