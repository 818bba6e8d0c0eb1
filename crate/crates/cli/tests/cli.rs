use std::path::Path;
use std::process::Command;

use opl_core::index::index_k_projection;
use opl_core::operator::{export_operator, import_operator, Encoding, TruncationWindow};
use opl_core::report::{example_config, Experiment};

fn opl(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_opl"))
        .args(args)
        .env_remove("OPL_OUT")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_fields_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "index-sweep"}"#).unwrap();
    let out = opl(&["run", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing field `seed`"), "{err}");
}

#[test]
fn stage_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = opl(&["index", s(&dir.path().join("absent.opmat"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_writes_manifest_and_honors_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example_config(Experiment::IndexSweep, &dir.path().join("ignored"), 1);
    let path = dir.path().join("c.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let out = opl(&["run", "--config", s(&path), "--seed", "5", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 5);
    assert!(out_dir.join("index_vs_k.svg").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn index_and_convert() {
    let dir = tempfile::tempdir().unwrap();
    let w = TruncationWindow::line(16).unwrap().shared();
    let (base, p) = index_k_projection(2, w).unwrap();
    let (bp, pp) = (dir.path().join("base.opmat"), dir.path().join("p.opmat"));
    export_operator(&base, &bp, Encoding::Binary).unwrap();
    export_operator(p.operator(), &pp, Encoding::Binary).unwrap();
    let out = opl(&["index", s(&pp), "--base", s(&bp)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], 2);

    let b64 = dir.path().join("base.b64.opmat");
    assert!(opl(&["convert", s(&bp), s(&b64), "--encoding", "base64"]).status.success());
    assert_eq!(import_operator(&b64).unwrap(), base);
}

#[test]
fn probe_and_certify() {
    let dir = tempfile::tempdir().unwrap();
    let w = TruncationWindow::line(32).unwrap().shared();
    let (base, p) = index_k_projection(-1, w.clone()).unwrap();
    let (bp, pp) = (dir.path().join("base.opmat"), dir.path().join("p.opmat"));
    export_operator(&base, &bp, Encoding::Binary).unwrap();
    export_operator(p.operator(), &pp, Encoding::Base64).unwrap();
    let out = opl(&["probe", s(&pp), "--base", s(&bp), "--probes", "set[-12,12]", "--degree", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["trivial_suspect"], serde_json::json!([]));

    let u = opl_core::ensembles::line_local_unitary(w, 3, 4).unwrap();
    let up = dir.path().join("u.opmat");
    export_operator(&u, &up, Encoding::Binary).unwrap();
    let cert = dir.path().join("cert");
    let out = opl(&["certify", s(&up), "--samples", "5", "--out", s(&cert)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(cert.join("certificate.json").exists());
    assert!(cert.join("unitarity_defect.svg").exists());

    let out = opl(&["certify", s(&up), "--arc-pair", "(1,0)..(0,1)"]);
    assert_eq!(out.status.code(), Some(2));
}
