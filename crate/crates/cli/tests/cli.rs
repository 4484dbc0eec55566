use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn facegraph(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facegraph"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = facegraph(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--n-images", "60", "--out", "fx"];
    args.extend_from_slice(extra);
    ok(&args, dir);
}

fn analyze(dir: &Path, out: &str, extra: &[&str]) -> String {
    let mut args = vec![
        "analyze",
        "--faces",
        "fx/faces.jsonl",
        "--enrolled",
        "fx/enrolled.jsonl",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    ok(&args, dir)
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

fn graph(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&read(dir, name)).unwrap()
}

#[test]
fn synth_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--n-images", "40", "--out", "a"], d);
    ok(&["synth", "--n-images", "40", "--out", "b"], d);
    for f in ["faces.jsonl", "enrolled.jsonl", "ground_truth.json"] {
        assert_eq!(read(d, &format!("a/{f}")), read(d, &format!("b/{f}")), "{f}");
    }
    ok(&["synth", "--n-images", "40", "--seed", "8", "--out", "c"], d);
    assert_ne!(read(d, "a/faces.jsonl"), read(d, "c/faces.jsonl"));
    let bad = facegraph(&["synth", "--n-subjects", "0", "--out", "z"], d);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn analyze_writes_artifacts_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &[]);
    let stdout = analyze(d, "out", &[]);
    for f in [
        "connectivity.json",
        "layout.json",
        "graph.json",
        "graph.svg",
        "presence.json",
        "matches.json",
        "report.txt",
    ] {
        assert!(d.join("out").join(f).is_file(), "{f}");
    }
    let report = String::from_utf8(read(d, "out/report.txt")).unwrap();
    for key in ["images (n)", "faces (m)", "enrolled subjects", "MAE", "stress", "rejected records"] {
        assert!(report.contains(key), "{key}");
        assert!(stdout.contains(key));
    }
    analyze(d, "again", &[]);
    assert_eq!(read(d, "out/graph.json"), read(d, "again/graph.json"));
    assert_eq!(read(d, "out/graph.svg"), read(d, "again/graph.svg"));
}

#[test]
fn stages_chain_to_the_same_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &[]);
    analyze(d, "full", &["--seed", "3"]);
    ok(&["match", "--faces", "fx/faces.jsonl", "--enrolled", "fx/enrolled.jsonl", "--out", "s"], d);
    ok(&["connect", "--faces", "fx/faces.jsonl", "--matches", "s/matches.json", "--out", "s"], d);
    ok(&["layout", "--connectivity", "s/connectivity.json", "--seed", "3", "--out", "s"], d);
    ok(
        &[
            "render",
            "--connectivity",
            "s/connectivity.json",
            "--layout",
            "s/layout.json",
            "--presence",
            "s/presence.json",
            "--out",
            "s",
        ],
        d,
    );
    assert_eq!(read(d, "full/graph.json"), read(d, "s/graph.json"));
    assert_eq!(read(d, "full/graph.svg"), read(d, "s/graph.svg"));
}

#[test]
fn errors_name_the_path_and_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &[]);
    let out = facegraph(
        &["analyze", "--faces", "fx/faces.jsonl", "--enrolled", "missing.jsonl", "--out", "o"],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.jsonl") && err.contains("[ingest]"), "{err}");

    let out = facegraph(&["layout", "--out", "o"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--connectivity"));

    let out = facegraph(&["analyze", "--faces", "fx/faces.jsonl", "--enrolled", "fx/enrolled.jsonl", "--theta", "2"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[match]"));
}

#[test]
fn malformed_records_are_reported_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &[]);
    let mut faces = std::fs::OpenOptions::new()
        .append(true)
        .open(d.join("fx/faces.jsonl"))
        .unwrap();
    writeln!(faces, "{{\"face_id\": 1}}").unwrap();
    let stdout = analyze(d, "o", &[]);
    assert!(stdout.contains("rejected records:      1"), "{stdout}");
}

#[test]
fn config_file_loses_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &[]);
    std::fs::write(
        d.join("run.toml"),
        "faces = \"fx/faces.jsonl\"\nenrolled = \"fx/enrolled.jsonl\"\nseed = 5\ntheta = 0.5\n",
    )
    .unwrap();
    ok(&["analyze", "--config", "run.toml", "--seed", "9", "--out", "o"], d);
    let g = graph(d, "o/graph.json");
    assert_eq!(g["metadata"]["seed"], 9);
    assert_eq!(g["metadata"]["config"]["theta"].as_f64(), Some(0.5));

    std::fs::write(d.join("bad.toml"), "sede = 5\n").unwrap();
    let out = facegraph(&["analyze", "--config", "bad.toml"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
}

#[test]
fn singleton_groups_have_no_edges() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &["--n-subjects", "4", "--n-groups", "4"]);
    analyze(d, "o", &[]);
    let g = graph(d, "o/graph.json");
    assert_eq!(g["edges"].as_array().unwrap().len(), 0);
    let c: serde_json::Value = serde_json::from_slice(&read(d, "o/connectivity.json")).unwrap();
    let total: f64 = c["c"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()))
        .sum();
    assert_eq!(total, 0.0);
}

fn http_get(addr: &str, path: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    let status = resp.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, resp)
}

#[test]
fn serve_answers_then_shuts_down_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &[]);
    analyze(d, "o", &[]);
    let mut child = Command::new(env!("CARGO_BIN_EXE_facegraph"))
        .args(["serve", "--graph", "o/graph.json", "--port", "0"])
        .current_dir(d)
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap().to_string();

    let (status, body) = http_get(&addr, "/api/graph");
    assert_eq!(status, 200);
    assert!(body.ends_with(&String::from_utf8(read(d, "o/graph.json")).unwrap()));
    assert_eq!(http_get(&addr, "/api/subjects/99").0, 404);

    let port = addr.rsplit(':').next().unwrap();
    let busy = facegraph(&["serve", "--graph", "o/graph.json", "--port", port], d);
    assert_eq!(busy.status.code(), Some(3));

    let killed = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(killed.success());
    assert_eq!(child.wait().unwrap().code(), Some(0));
}

#[test]
fn serve_rejects_a_bad_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("graph.json"), "{not json").unwrap();
    let out = facegraph(&["serve", "--graph", "graph.json"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph.json"));
}
