use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permstab")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_defect_stabilize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let xt = dir.path().join("xt.json");
    assert!(run(&["gen", "--family", "xt", "--d", "2", "--t", "5", "-o", p(&xt)]).status.success());
    let out = run(&["defect", "--instance", p(&xt), "--equations", "commutators"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["local_defect"], "1/8");
    assert_eq!(v["n"], 24);

    let psi = dir.path().join("psi.json");
    let out = run(&["stabilize", "--instance", p(&xt), "-o", p(&psi)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["command"], "stabilize");
    assert_eq!(v["constants"]["mode"], "certified");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["holds"] == true || c["binding"] == false));
    let out = run(&["defect", "--instance", p(&psi)]);
    assert_eq!(json(&out)["local_defect"], "0");
}

#[test]
fn scaled_overrides_and_file_constants() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    assert!(run(&["gen", "--family", "torus", "--sides", "100,100", "--perturb", "1", "--seed", "3", "-o", p(&t)])
        .status
        .success());
    let report = dir.path().join("r.json");
    let out = run(&[
        "stabilize", "--instance", p(&t), "--mode", "scaled", "--scale-cd", "1", "--scale-cbox", "1/4", "--scale-te",
        "2", "--report", p(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["constants"]["C_Box"], "1/4");
    assert_eq!(v["constants"]["h"], "33");
    assert!(v["tiles"].as_u64().unwrap() > 0);

    // constant_scale in the file is used unless the command line overrides it
    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(&t).unwrap()).unwrap();
    file["presentation"]["constant_scale"] = serde_json::json!({"C_d": "1", "C_Box": "1/4", "t_E": "2", "h": "5"});
    std::fs::write(&t, file.to_string()).unwrap();
    let out = run(&["stabilize", "--instance", p(&t), "--mode", "scaled", "--scale-h", "9"]);
    let v = json(&out);
    assert_eq!(v["constants"]["C_Box"], "1/4");
    assert_eq!(v["constants"]["h"], "9");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let xt = dir.path().join("xt.json");
    assert!(run(&["gen", "--family", "xt", "--d", "2", "--t", "4", "-o", p(&xt)]).status.success());
    assert_eq!(run(&["stabilize", "--instance", p(&xt), "--scale-cd", "2"]).status.code(), Some(2));
    assert_eq!(run(&["defect", "--instance", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--family", "xt", "-o", p(&xt)]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn tester_oracles_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let xt = dir.path().join("xt.json");
    assert!(run(&["gen", "--family", "xt", "--d", "2", "--t", "3", "-o", p(&xt)]).status.success());
    let v = json(&run(&["test", "--instance", p(&xt), "--trials", "50000", "--seed", "4"]));
    assert_eq!(v["expected_rate"], "3/8");
    assert_eq!(v["within_band"], true);
    let v = json(&run(&["test", "--instance", p(&xt), "--amplified", "--epsilon", "1/2"]));
    assert_eq!(v["iterations"], 1);

    let small = dir.path().join("small.json");
    assert!(run(&["gen", "--family", "xt", "--d", "2", "--t", "2", "-o", p(&small)]).status.success());
    let v = json(&run(&["oracle", "g", "--instance", p(&small), "--equations", "commutators"]));
    assert!(v["global_defect"].as_str().unwrap() != "0");

    let a = dir.path().join("a.json");
    assert!(run(&["gen", "--family", "random", "--n", "4", "--m", "2", "--seed", "1", "-o", p(&a)]).status.success());
    let v = json(&run(&["oracle", "ds", "--instance", p(&a), "--other", p(&a)]));
    assert_eq!(v["d_s"], "0");

    let csv = dir.path().join("b.csv");
    let out = run(&["bench", "--family", "xt", "--t-values", "3,4", "-o", p(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("family,n,t,distance"));
    assert!(lines[1].starts_with("xt,8,3,"));
}

#[test]
fn quotient_and_dilution() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    assert!(run(&["gen", "--family", "torus", "--sides", "4,3", "--dilute", "1/2", "-o", p(&c)]).status.success());
    let out = run(&["quotient", "--instance", p(&c), "--word", "e1^2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["n"], 24);
    assert_eq!(v["abiding"], 12);
}
