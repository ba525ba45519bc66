use std::process::Command;

fn smqs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smqs"))
}

#[test]
fn lists_every_scenario() {
    let out = smqs().arg("--list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for tag in [
        "honest",
        "iqft-attack",
        "modified-honest",
        "modified-attack",
        "eve-decoy",
    ] {
        assert!(text.lines().any(|l| l.starts_with(tag)), "{tag} missing");
    }
}

#[test]
fn writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let status = smqs()
        .args([
            "run",
            "--scenario",
            "iqft-attack",
            "--d",
            "10",
            "--n",
            "3",
            "--m",
            "1",
        ])
        .args([
            "--trials",
            "3",
            "--seed",
            "1",
            "--secrets",
            "4,5,6",
            "--fake-r",
            "2",
            "--out",
        ])
        .arg(&path)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    for key in [
        "scenario",
        "params",
        "per_trial",
        "aggregates",
        "oracle_predictions",
        "schema_version",
    ] {
        assert!(doc.get(key).is_some(), "{key} missing");
    }
    assert_eq!(
        doc["per_trial"][0]["announced"],
        serde_json::json!([[7], [8]])
    );
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = smqs()
        .args(["run", "--scenario", "honest", "--d", "1", "--out"])
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = smqs()
        .args(["run", "--scenario", "nope", "--out", "x.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = smqs()
        .args(["run", "--scenario", "honest", "--trials", "2", "--out"])
        .arg(dir.path().join("missing").join("r.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
