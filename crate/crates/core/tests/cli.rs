use std::path::Path;
use std::process::{Command, Output};

use qecsearch::artifact::CodeArtifact;
use qecsearch::catalog;

fn qecsearch(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qecsearch")).args(args).current_dir(dir).output().expect("spawn qecsearch")
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.17}")).collect::<Vec<_>>().join(",")
}

#[test]
fn verify_non_cws_enumerators() {
    let dir = tempfile::tempdir().unwrap();
    let r = catalog::enumerators_623_non_cws();
    let (a, b) = (list(&r.a), list(&r.b));
    let out = qecsearch(
        &["verify", "--builtin", "6-2-3-non-cws", "--distance", "3", "--expect-a", &a, "--expect-b", &b],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["report"]["distance"], 3);
    assert!(doc["failures"].as_array().unwrap().is_empty());

    let mut wrong = r.a.clone();
    wrong[2] += 0.5;
    let out = qecsearch(&["verify", "--builtin", "6-2-3-non-cws", "--expect-a", &list(&wrong)], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stabilizer_file_and_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("perfect.txt");
    std::fs::write(&file, "# five-qubit code\nXZZXI\nIXZZX\nXIXZZ\nZXIXZ\n").unwrap();
    let out = qecsearch(
        &["verify", file.to_str().unwrap(), "--distance", "3", "--equivalence", "5-2-3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["equivalence"]["equivalent"], true);
}

#[test]
fn search_writes_artifact_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = qecsearch(&["search", "--preset", "4-4-2", "--seed", "0", "-o", "code.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let art = CodeArtifact::read(&dir.path().join("code.json")).unwrap();
    assert_eq!(art.basis_states.len(), 4);
    assert!(art.replay_deviation().unwrap().unwrap() < 1e-9);
    let trace = std::fs::read_to_string(dir.path().join("code.trace.csv")).unwrap();
    assert!(trace.lines().count() > 1);

    let out = qecsearch(&["verify", "code.json", "--distance", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // corrupt one amplitude: exits through the invariant error, not a panic
    let text = std::fs::read_to_string(dir.path().join("code.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["basis_states"][0][3][0] = serde_json::json!(0.9);
    std::fs::write(dir.path().join("bad.json"), v.to_string()).unwrap();
    let out = qecsearch(&["verify", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant violated"));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n = 3\nk = 2\nlayers_max = 2\n\n[graph]\nkind = \"edges\"\nn = 3\nedges = [[0, 7]]\n\n[errors]\nkind = \"pauli-weight\"\nd = 2\n";
    std::fs::write(dir.path().join("bad.toml"), cfg).unwrap();
    let out = qecsearch(&["search", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("bad.json").exists());

    let out = qecsearch(&["search", "--preset", "no-such-preset"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = qecsearch(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn concat_and_qfim_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = qecsearch(&["concat", "3", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "9");

    let out = qecsearch(
        &["qfim", "--graph", "ring", "--n", "3", "--K", "1", "--L-sweep", "1:3", "--samples", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "layers,n_params,rank,dc_max");
    // 2^3 states, K = 1: the Grassmannian has real dimension 14
    assert!(rows.last().unwrap().ends_with(",14,14"), "{csv}");
}
