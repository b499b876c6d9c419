use std::process::Command;

fn sta_cool(dir: &std::path::Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sta-cool"));
    cmd.arg("--out").arg(dir.join("out")).arg("--no-cache");
    cmd
}

#[test]
fn design_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let status = sta_cool(dir.path()).arg("design").status().unwrap();
    assert_eq!(status.code(), Some(0));
    let written: Vec<_> = std::fs::read_dir(dir.path().join("out")).unwrap().collect();
    assert!(!written.is_empty());
}

#[test]
fn infeasible_design_exits_with_physics_code() {
    let dir = tempfile::tempdir().unwrap();
    let status = sta_cool(dir.path())
        .args(["--d-in-ratio", "0.8", "design"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[constraints]\nbeta_max = \"3 kg\"\n").unwrap();
    let status = sta_cool(dir.path())
        .arg("--config")
        .arg(&cfg)
        .arg("design")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    std::fs::write(&cfg, "[nonsense]\n").unwrap();
    let status = sta_cool(dir.path())
        .arg("--config")
        .arg(&cfg)
        .arg("design")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let status = sta_cool(dir.path())
        .arg("--config")
        .arg(dir.path().join("absent.toml"))
        .arg("design")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
