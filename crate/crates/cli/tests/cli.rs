use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const IDENTITY: &str = r#"{"version":1,"input_qubits":1,"gates":[]}"#;
const X: &str = r#"{"version":1,"input_qubits":1,"gates":[{"kind":"x","targets":[0]}]}"#;
const DEPHASE: &str = r#"{"version":1,"input_qubits":1,"gates":[{"kind":"ancilla"},{"kind":"h","targets":[0]},{"kind":"cnot","targets":[0,1]},{"kind":"traceout","targets":[1]}]}"#;
const THREE_QUBITS: &str = r#"{"version":1,"input_qubits":3,"gates":[{"kind":"h","targets":[2]}]}"#;

fn phase_doc(theta: f64) -> String {
    let (s, c) = theta.sin_cos();
    format!(
        r#"{{"version":1,"input_qubits":1,"gates":[{{"kind":"u","targets":[0],"matrix":[[1,0],[0,0],[0,0],[{c},{s}]]}}]}}"#
    )
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }
}

fn run(args: &[&str]) -> Output {
    run_with_env(args, None)
}

fn run_with_env(args: &[&str], cap: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_channelforge"));
    cmd.args(args).env_remove("CHANNELFORGE_DIM_CAP");
    if let Some(cap) = cap {
        cmd.env("CHANNELFORGE_DIM_CAP", cap);
    }
    cmd.output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn compile_identity_gives_identity_choi() {
    let ws = Workspace::new();
    let out = run(&["compile", p(&ws.file("id.json", IDENTITY))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["dim_in"], 2);
    assert_eq!(doc["dim_out"], 2);
    let entries: Vec<f64> = doc["matrix"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e[0].as_f64().unwrap())
        .collect();
    let expected = [
        1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1.,
    ];
    assert_eq!(entries, expected);

    let out = run(&["compile", "--stinespring", p(&ws.file("x.json", X))]);
    assert_eq!(code(&out), 0);
    assert!(stdout_json(&out).get("u").is_some());
}

#[test]
fn parse_and_config_errors_exit_2() {
    let ws = Workspace::new();
    let out = run(&[
        "compile",
        p(&ws.file(
            "bad.json",
            r#"{"version":1,"input_qubits":1,"gates":[{"kind":"h","targets":["a"]}]}"#,
        )),
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("gates[0].targets[0]"),
        "{}",
        stderr(&out)
    );

    let out = run(&["compile", p(&ws.file("trunc.json", "{\"version\":1,"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));

    assert_eq!(code(&run(&["compile", "/nonexistent/circuit.json"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(
        code(&run_with_env(
            &["compile", p(&ws.file("id.json", IDENTITY))],
            Some("lots")
        )),
        2
    );
}

#[test]
fn size_errors_exit_3() {
    let ws = Workspace::new();
    let big = ws.file("big.json", THREE_QUBITS);
    let out = run_with_env(&["compile", p(&big)], Some("4"));
    assert_eq!(code(&out), 3);
    assert!(
        stderr(&out).contains("dimension cap exceeded"),
        "{}",
        stderr(&out)
    );

    let x = ws.file("x.json", X);
    assert_eq!(
        code(&run_with_env(&["repeat", p(&x), "-k", "4"], Some("64"))),
        3
    );
    assert_eq!(
        code(&run_with_env(
            &["embed", p(&x), "--mode", "antidegradable"],
            Some("8")
        )),
        3
    );
}

#[test]
fn embed_verifies_identity_both_ways() {
    let ws = Workspace::new();
    let id = ws.file("id.json", IDENTITY);
    for mode in ["degradable", "antidegradable"] {
        let out = run(&["embed", p(&id), "--mode", mode, "--verify"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let doc = stdout_json(&out);
        assert_eq!(doc["flavor"], mode);
        let report: Value = serde_json::from_str(stderr(&out).trim()).unwrap();
        assert_eq!(report["passed"], true);
        assert!(report["max_deviation"].as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn verify_checks_embedding_documents() {
    let ws = Workspace::new();
    let x = ws.file("dephase.json", DEPHASE);
    let out = run(&["embed", p(&x), "--mode", "degradable"]);
    assert_eq!(code(&out), 0);
    let good = ws.file("good.json", &String::from_utf8(out.stdout.clone()).unwrap());
    let out = run(&["verify", p(&good)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["passed"], true);

    // Drop the mate's X gate so it no longer degrades the embedding.
    let mut doc = stdout_json(&run(&["embed", p(&x), "--mode", "degradable"]));
    let gates = doc["mate"]["gates"].as_array_mut().unwrap();
    let before = gates.len();
    gates.retain(|g| !(g["kind"] == "x" && g["targets"] == serde_json::json!([0])));
    assert_eq!(gates.len(), before - 1);
    let bad = ws.file("bad.json", &doc.to_string());
    let out = run(&["verify", p(&bad)]);
    assert_eq!(code(&out), 4);
    assert_eq!(stdout_json(&out)["passed"], false);

    // A mate that does not fit the embedding at all.
    doc["mate"] = serde_json::from_str(IDENTITY).unwrap();
    let out = run(&["verify", p(&ws.file("wrong.json", &doc.to_string()))]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn distinguish_exit_codes() {
    let ws = Workspace::new();
    let id = ws.file("id.json", IDENTITY);
    let x = ws.file("x.json", X);
    let gap = ws.file("gap.json", &phase_doc(std::f64::consts::FRAC_PI_3));

    let out = run(&["distinguish", p(&id), p(&x), "--a", "1.9", "--b", "0.1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["decision"], "yes");

    let out = run(&["distinguish", p(&id), p(&id), "--a", "1.9", "--b", "0.1"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["decision"], "no");

    let out = run(&["distinguish", p(&id), p(&gap), "--a", "1.9", "--b", "0.1"]);
    assert_eq!(code(&out), 5);
    assert_eq!(stdout_json(&out)["decision"], "indeterminate");

    assert_eq!(
        code(&run(&[
            "distinguish",
            p(&id),
            p(&x),
            "--a",
            "0.1",
            "--b",
            "1.9"
        ])),
        2
    );
}

#[test]
fn dnorm_reports_certificates() {
    let ws = Workspace::new();
    let id = ws.file("id.json", IDENTITY);
    let gap = ws.file("gap.json", &phase_doc(std::f64::consts::FRAC_PI_2));
    let out = run(&["dnorm", p(&id), p(&gap), "--witness"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = stdout_json(&out);
    let value = doc["value"].as_f64().unwrap();
    assert!((value - 2f64.sqrt()).abs() < 1e-6);
    assert!(doc["dual_bound"].as_f64().unwrap() - doc["primal_bound"].as_f64().unwrap() <= 1e-7);
    assert!(doc.get("witness").is_some_and(|w| !w.is_null()));

    // Choi documents are accepted in place of circuits.
    let choi = ws.file(
        "choi.json",
        &String::from_utf8(run(&["compile", p(&gap)]).stdout).unwrap(),
    );
    let out = run(&["dnorm", p(&id), p(&choi)]);
    assert!((stdout_json(&out)["value"].as_f64().unwrap() - value).abs() < 1e-7);
    assert_eq!(code(&run(&["dnorm", p(&id), p(&gap), "--tol", "-1"])), 2);
}

#[test]
fn repeat_and_params() {
    let ws = Workspace::new();
    let x = ws.file("x.json", X);
    let once = stdout_json(&run(&["repeat", p(&x), "-k", "1"]));
    let compiled = stdout_json(&run(&["compile", p(&x)]));
    assert_eq!(once, compiled);
    let twice = stdout_json(&run(&["repeat", p(&x), "-k", "2"]));
    assert_eq!(twice["dim_in"], 4);

    let out = run(&["params", "--a", "1.8", "--b", "0.2"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["k"], 37);
    assert!((doc["epsilon"].as_f64().unwrap() - 0.2 / 37.0).abs() < 1e-12);
    assert_eq!(code(&run(&["params", "--a", "0.2", "--b", "1.8"])), 2);
}

#[test]
fn feasibility_exit_codes() {
    let ws = Workspace::new();
    let id = ws.file("id.json", IDENTITY);
    let out = run(&[
        "feasibility",
        p(&id),
        "--property",
        "degradable",
        "--certificate",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["property"], "degradable");
    assert_eq!(doc["feasible"], true);
    assert!(doc["certificate"].is_object());

    let out = run(&["feasibility", p(&id), "--property", "antidegradable"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["feasible"], false);
}

#[test]
fn demo_runs_and_validates_tolerance() {
    let out = run(&["demo"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = stdout_json(&out);
    assert_eq!(doc["passed"], true);
    assert!(doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));
    assert_eq!(code(&run(&["demo", "--tol", "10"])), 2);
}

#[test]
fn pretty_output_and_output_file() {
    let ws = Workspace::new();
    let out = run(&["params", "--a", "1.8", "--b", "0.2", "--pretty"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.lines()
            .any(|l| l.starts_with("k ") && l.trim_end().ends_with("37")),
        "{text}"
    );

    let x = ws.file("x.json", X);
    let out = run(&["compile", p(&x), "--pretty"]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("<4x4 complex matrix>"));

    let target = ws.dir.path().join("out.json");
    let out = run(&["compile", p(&x), "-o", p(&target)]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(written["dim_out"], 2);
}
