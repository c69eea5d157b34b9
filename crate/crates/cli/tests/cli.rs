use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn surgetrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surgetrace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn write_qasm(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(
        &p,
        format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n{body}"),
    )
    .unwrap();
    p.to_str().unwrap().to_string()
}

/// L1 trace file from row-major frames.
fn write_l1(dir: &Path, rows: usize, cols: usize, frames: &[&[u8]]) -> String {
    let p = dir.join("trace.json");
    let t = serde_json::json!({ "level": 1, "rows": rows, "cols": cols, "frames": frames });
    fs::write(&p, t.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn unambiguous_round_trip_matches_truth() {
    let tmp = TempDir::new().unwrap();
    let qasm = write_qasm(
        tmp.path(),
        "c.qasm",
        "qreg q[3];\ncx q[0],q[1];\ncx q[1],q[2];\n",
    );
    let t = tmp.path().join("t");
    let out = surgetrace(&[
        "trace",
        &qasm,
        "--layout",
        "intermediate",
        "--out",
        path(&t),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let l1 = json(&t.join("trace.json"));
    assert_eq!(l1["level"], 1);
    assert_eq!(l1["frames"].as_array().unwrap().len(), 2);

    let r = tmp.path().join("r");
    let out = surgetrace(&["recover", path(&t.join("trace.json")), "--out", path(&r)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&r.join("dag.json")), json(&t.join("truth_dag.json")));
    let m = json(&r.join("metrics.json"));
    assert_eq!(m["status"], "success");
    assert_eq!(m["ambiguity_pct"], 0.0);
}

#[test]
fn empty_circuit_has_no_frames() {
    let tmp = TempDir::new().unwrap();
    let qasm = write_qasm(tmp.path(), "e.qasm", "qreg q[2];\nh q[0];\n");
    let t = tmp.path().join("t");
    assert!(surgetrace(&["trace", &qasm, "--out", path(&t)])
        .status
        .success());
    assert_eq!(
        json(&t.join("trace_l3.json"))["frames"]
            .as_array()
            .unwrap()
            .len(),
        0
    );
}

#[test]
fn fixed_layout_too_small_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let qasm = write_qasm(tmp.path(), "c.qasm", "qreg q[4];\ncx q[0],q[3];\n");
    let layout = tmp.path().join("layout.json");
    fs::write(
        &layout,
        r#"{"kind":"compact","rows":3,"cols":1,"qubit_tiles":[[0,0],[2,0]]}"#,
    )
    .unwrap();
    let out = surgetrace(&[
        "trace",
        &qasm,
        "--layout-file",
        path(&layout),
        "--out",
        path(&tmp.path().join("t")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("needs 4 qubits"), "{err}");
    assert!(err.contains("c.qasm"), "{err}");
}

#[test]
fn odd_endpoints_exit_with_their_own_code() {
    let tmp = TempDir::new().unwrap();
    let trace = write_l1(tmp.path(), 1, 3, &[&[1, 1, 0], &[1, 1, 1]]);
    let r = tmp.path().join("r");
    let out = surgetrace(&["recover", &trace, "--out", path(&r)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd ambiguity error: frame 1"));
    let m = json(&r.join("metrics.json"));
    assert_eq!(m["endpoint_pairing_success"], false);
    assert_eq!(m["frame"], 1);
}

#[test]
fn unresolvable_frame_exits_with_its_own_code() {
    // frames 0 and 1 reveal (0,0) and (1,1); frame 2 is a 2×2 block with
    // endpoints on a diagonal, which no simple path covers
    #[rustfmt::skip]
    let frames: &[&[u8]] = &[
        &[1, 0, 0,
          1, 0, 0,
          1, 0, 0],
        &[0, 0, 0,
          0, 1, 1,
          0, 0, 0],
        &[1, 1, 0,
          1, 1, 0,
          0, 0, 0],
    ];
    let tmp = TempDir::new().unwrap();
    let trace = write_l1(tmp.path(), 3, 3, frames);
    let r = tmp.path().join("r");
    let out = surgetrace(&["recover", &trace, "--out", path(&r)]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = json(&r.join("metrics.json"));
    assert_eq!(m["unresolvable"][0]["frame"], 2);
    // the partial DAG is still written
    assert_eq!(
        json(&r.join("dag.json"))["nodes"].as_array().unwrap().len(),
        2
    );
}

#[test]
fn synth_trace_recover_match() {
    let tmp = TempDir::new().unwrap();
    let s = tmp.path().join("s");
    assert!(surgetrace(&[
        "synth",
        "--recipe",
        "mix_9",
        "--seed",
        "3",
        "--out",
        path(&s)
    ])
    .status
    .success());
    let record = json(&s.join("mix_9_s3.json"));
    assert_eq!(record["constituents"][0]["name"], "add_3");

    let t = tmp.path().join("t");
    let qasm = s.join("mix_9_s3.qasm");
    assert!(surgetrace(&[
        "trace",
        path(&qasm),
        "--layout",
        "compact",
        "--out",
        path(&t)
    ])
    .status
    .success());
    let r = tmp.path().join("r");
    assert_eq!(
        surgetrace(&["recover", path(&t.join("trace.json")), "--out", path(&r)])
            .status
            .code(),
        Some(0)
    );

    let m = tmp.path().join("m");
    let out = surgetrace(&[
        "match",
        path(&r.join("dag.json")),
        "--timeout-secs",
        "30",
        "--out",
        path(&m),
    ]);
    assert!(out.status.success());
    let report = json(&m.join("matches.json"));
    let status = |name: &str| {
        report
            .as_array()
            .unwrap()
            .iter()
            .find(|e| e["subroutine"] == name)
            .unwrap()["status"]
            .clone()
    };
    assert_eq!(status("add_3"), "found");
    assert_eq!(status("qft_4"), "found");
    assert_eq!(status("t_npe_5"), "not_found");
}

#[test]
fn match_with_custom_library_and_zero_timeout() {
    let tmp = TempDir::new().unwrap();
    let lib = tmp.path().join("lib");
    fs::create_dir(&lib).unwrap();
    write_qasm(&lib, "pair.qasm", "qreg q[2];\ncx q[0],q[1];\n");
    write_qasm(
        &lib,
        "chain.qasm",
        "qreg q[3];\ncx q[0],q[1];\ncx q[1],q[2];\n",
    );
    let qasm = write_qasm(
        tmp.path(),
        "c.qasm",
        "qreg q[3];\ncx q[0],q[1];\ncx q[1],q[2];\n",
    );
    let t = tmp.path().join("t");
    assert!(surgetrace(&["trace", &qasm, "--out", path(&t)])
        .status
        .success());

    let out = surgetrace(&[
        "match",
        path(&t.join("truth_dag.json")),
        "--library",
        path(&lib),
    ]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<_> = report
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["subroutine"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["chain", "pair"]);
    assert!(report
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["status"] == "found"));

    let out = surgetrace(&[
        "match",
        path(&t.join("truth_dag.json")),
        "--library",
        path(&lib),
        "--timeout-secs",
        "0",
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["status"] == "timeout"));
}

#[test]
fn bench_and_report() {
    let tmp = TempDir::new().unwrap();
    let b = tmp.path().join("b");
    let out = surgetrace(&[
        "bench",
        "--recipes",
        "mix_9,mix_10",
        "--perturbations",
        "3",
        "--timeout-secs",
        "30",
        "--out",
        path(&b),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(b.join("cases.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 18);
    let matches = fs::read_to_string(b.join("matches.csv")).unwrap();
    assert!(
        matches.starts_with("recipe,perturbation,seed,layout,subroutine,present,status,elapsed_ms")
    );
    let agg = json(&b.join("aggregate.json"));
    assert_eq!(agg["layouts"]["compact"]["cases"], 6);

    fs::remove_file(b.join("aggregate.json")).unwrap();
    let out = surgetrace(&["report", path(&b)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("intermediate"));
    assert!(b.join("aggregate.json").exists());
}

#[test]
fn trace_output_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let s = tmp.path().join("s");
    assert!(surgetrace(&[
        "synth",
        "--recipe",
        "qft_5,t_npe_4",
        "--seed",
        "9",
        "--out",
        path(&s)
    ])
    .status
    .success());
    let qasm = s.join("qft_5+t_npe_4_s9.qasm");
    let mut runs = Vec::new();
    for i in 0..2 {
        let t = tmp.path().join(format!("t{i}"));
        assert!(surgetrace(&[
            "trace",
            path(&qasm),
            "--layout",
            "sparse",
            "--seed",
            "4",
            "--out",
            path(&t)
        ])
        .status
        .success());
        runs.push(fs::read(t.join("trace_l3.json")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn unknown_layout_is_rejected() {
    let out = surgetrace(&[
        "trace",
        "x.qasm",
        "--layout",
        "hexagonal",
        "--out",
        "unused",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown layout"));
}
