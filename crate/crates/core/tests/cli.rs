use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_ipils");
const T1: &str = "4 2\n6\n2 3 4\n3 5 2\n4 1 5\n5 4 3\n";

fn ipils(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn front_of_t1() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "t1.txt", T1);
    for method in ["auto", "enumerate", "dp"] {
        let out = ipils(&["front", "--instance", &inst, "--method", method]);
        assert!(out.status.success());
        assert_eq!(String::from_utf8_lossy(&out.stdout), "8 6 1100\n4 9 1010\n");
    }
}

#[test]
fn experiment_writes_curves_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "t1.txt", T1);
    let refs = write(dir.path(), "refs.txt", "# second reference\n5,0\n");
    let out_dir = dir.path().join("out");
    let out = ipils(&[
        "experiment",
        "--instance",
        &inst,
        "--ref",
        "4,6",
        "--refs-file",
        &refs,
        "--runs",
        "3",
        "--evals",
        "2500",
        "--seed",
        "7",
        "--weights",
        "11",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<_> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        [
            "mean_1.csv",
            "mean_2.csv",
            "run_1_0.csv",
            "run_1_1.csv",
            "run_1_2.csv",
            "run_2_0.csv",
            "run_2_1.csv",
            "run_2_2.csv",
            "summary.txt"
        ]
    );
    let run = std::fs::read_to_string(out_dir.join("run_1_0.csv")).unwrap();
    assert_eq!(
        run,
        "evaluations,M\n0,1.000000\n1000,1.000000\n2000,1.000000\n2500,1.000000\n"
    );
    let mean = std::fs::read_to_string(out_dir.join("mean_2.csv")).unwrap();
    assert!(mean.starts_with("evaluations,meanM,stddev,n\n0,"));
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("exact front size: 2"));
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "4 2\n6\n2 3 4\n");
    let out = ipils(&["front", "--instance", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let inst = write(dir.path(), "t1.txt", T1);
    let out = ipils(&[
        "experiment",
        "--instance",
        &inst,
        "--ref",
        "1,2,3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = ipils(&["experiment", "--instance", &inst, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let three = write(dir.path(), "k3.txt", "2 3\n5\n2 1 1 1\n3 2 2 2\n");
    let out = ipils(&[
        "experiment",
        "--instance",
        &three,
        "--ref",
        "0,0,0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));

    let out = ipils(&["front", "--instance", "/does/not/exist"]);
    assert_eq!(out.status.code(), Some(7));
}

#[test]
fn generate_is_deterministic() {
    let a = ipils(&["generate", "--items", "10", "--seed", "4"]);
    let b = ipils(&["generate", "--items", "10", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.starts_with("10 2\n"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn serve_speaks_json_lines() {
    let mut child = Command::new(BIN)
        .arg("serve")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        let create = serde_json::json!({"id": 1, "method": "session.create", "params": {"instance": T1}});
        writeln!(stdin, "{create}").unwrap();
        writeln!(
            stdin,
            r#"{{"id": 2, "method": "session.accept", "params": {{"session": "s1", "solution": 0}}}}"#
        )
        .unwrap();
        writeln!(
            stdin,
            r#"{{"id": 3, "method": "session.start", "params": {{"session": "s1"}}}}"#
        )
        .unwrap();
    }
    drop(child.stdin.take());
    let out = child.wait_with_output().unwrap();
    let lines: Vec<serde_json::Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["result"]["session"], "s1");
    assert_eq!(lines[1]["result"]["id"], 0);
    assert_eq!(lines[2]["error"]["kind"], "invalid-state");
}

#[test]
fn serve_flushes_subscriptions_at_end_of_input() {
    let mut child = Command::new(BIN)
        .arg("serve")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        let create = serde_json::json!({"id": 1, "method": "session.create",
            "params": {"instance": T1, "config": {"max_evaluations": 300}}});
        writeln!(stdin, "{create}").unwrap();
        writeln!(
            stdin,
            r#"{{"id": 2, "method": "session.subscribe", "params": {{"session": "s1"}}}}"#
        )
        .unwrap();
        writeln!(
            stdin,
            r#"{{"id": 3, "method": "session.start", "params": {{"session": "s1"}}}}"#
        )
        .unwrap();
    }
    drop(child.stdin.take());
    let out = child.wait_with_output().unwrap();
    let events: Vec<serde_json::Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v.get("subscription").is_some())
        .map(|v| v["event"].clone())
        .collect();
    assert_eq!(events[0]["type"], "bounds");
    let last = events.last().unwrap();
    assert_eq!(last["type"], "state");
    assert_eq!(last["payload"]["state"], "paused");
    assert_eq!(last["evaluations"], 300);
}
