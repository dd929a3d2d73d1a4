use std::path::Path;
use std::process::Command;

fn lbt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lbt"))
        .args(args)
        .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../.."))
        .output()
        .unwrap()
}

#[test]
fn defaults_are_echoed() {
    let out = lbt(&["validate", "--config", "configs/friedrichs.toml"]);
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("INFO: default tol_quad=1e-8"), "{err}");
    assert!(err.contains("INFO: default lead_length=600"), "{err}");
}

#[test]
fn unknown_reservoir_lead_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/friedrichs.toml")).unwrap();
    std::fs::write(&path, text.replacen("lead = 2\nbeta", "lead = 7\nbeta", 1)).unwrap();
    let out = lbt(&["currents", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("reservoirs[1].lead: unknown lead 7"), "{err}");
}

#[test]
fn quench_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    let out = lbt(&[
        "quench", "--config", "configs/bound_state.toml", "--lead-length", "100", "--window", "15:30", "--samples", "11",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("t,j_1,phi_1,j_2,phi_2"));
    assert_eq!(text.lines().count(), 12);
    let summary = std::fs::read_to_string(dir.path().join("q.csv.summary.json")).unwrap();
    assert!(summary.contains("\"bound_state_warning\": true"));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.lines().any(|l| l.starts_with("WARN: event=bound_state energy=")), "{err}");
}

#[test]
fn missing_reservoirs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/friedrichs.toml")).unwrap();
    let cut = text.find("[[reservoirs]]").unwrap();
    std::fs::write(&path, &text[..cut]).unwrap();
    let out = lbt(&["entropy", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("reservoirs"));
    // tmatrix does not need reservoirs
    assert!(lbt(&["tmatrix", "--config", path.to_str().unwrap(), "--grid", "0.1:0.2:2"]).status.success());
}

#[test]
fn bad_grid_is_rejected() {
    let out = lbt(&["tmatrix", "--config", "configs/friedrichs.toml", "--grid", "1:-1:5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("grid"));
}
