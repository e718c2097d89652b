use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

fn settle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_settle")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn corpus_validates() {
    for name in ["minimal.json", "all_water.json", "two_house.json", "demo.json"] {
        let o = settle(&["validate", path(&data(name))]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn invalid_scenario_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(data("two_house.json")).unwrap()).unwrap();
    s["houses"][1]["x"] = s["houses"][0]["x"].clone();
    s["houses"][1]["y"] = s["houses"][0]["y"].clone();
    let file = dir.path().join("overlap.json");
    std::fs::write(&file, s.to_string()).unwrap();
    let o = settle(&["validate", path(&file)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("west") && stderr(&o).contains("east"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let water = data("all_water.json");
    let cases: [&[&str]; 5] = [
        &["view360", path(&water), "--point", "50,50,5", "--n", "2"],
        &["validate", "/nonexistent/scenario.json"],
        &["view", path(&water), "--camera", "sea", "--bogus"],
        &["frobnicate"],
        &["view360", path(&water), "--point", "50,50"],
    ];
    for args in cases {
        let o = settle(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = settle(cases[0]);
    assert!(stderr(&o).contains("n must be ≥ 3"), "{}", stderr(&o));
    // an unknown camera is the caller's mistake too
    let o = settle(&["view", path(&water), "--camera", "nobody"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flow_without_transect_is_a_failure() {
    let o = settle(&["flow", path(&data("minimal.json")), "--h", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("transect"));
}

#[test]
fn open_water_view_reports_one_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let water = data("all_water.json");
    let run = |name: &str| {
        let report = dir.path().join(name);
        let image = dir.path().join(format!("{name}.ppm"));
        let o = settle(&[
            "view", path(&water), "--camera", "sea", "--px", "64", "48", "--out", path(&image), "--report", path(&report),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(std::fs::read(&image).unwrap().starts_with(b"P6\n64 48\n"));
        std::fs::read_to_string(report).unwrap()
    };
    let first = run("a.json");
    assert!(first.contains("\"V\": 1.0"), "{first}");
    assert_eq!(first, run("b.json"));
}

#[test]
fn view360_sweep() {
    let o = settle(&["view360", path(&data("all_water.json")), "--point", "50,50,5", "--n", "4", "--px", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["V360"], 1.0);
    assert_eq!(report["n"], 4);
}

#[test]
fn flow_writes_fields_streamlines_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (vtk, lines, report) = (dir.path().join("f.vtk"), dir.path().join("s.json"), dir.path().join("r.json"));
    let o = Command::new(env!("CARGO_BIN_EXE_settle"))
        .args([
            "flow",
            path(&data("two_house.json")),
            "--h",
            "4",
            "--seeds",
            "6",
            "--out",
            path(&vtk),
            "--streamlines",
            path(&lines),
            "--report",
            path(&report),
        ])
        .env("SETTLE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&vtk).unwrap().starts_with("# vtk DataFile"));
    let lines: Vec<Vec<[f64; 2]>> = serde_json::from_str(&std::fs::read_to_string(&lines).unwrap()).unwrap();
    assert_eq!(lines.len(), 6);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report["streamlines"]["count"], 6);
    assert_eq!(report["parts"], 3);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_settle"))
        .args(["validate", path(&data("minimal.json"))])
        .env("SETTLE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn view_against_a_running_server() {
    let mut server = Command::new(env!("CARGO_BIN_EXE_settle"))
        .args(["serve", "--scenario", path(&data("all_water.json")), "--port", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let o = settle(&["view", "--server", &url, "--camera", "sea", "--px", "32", "24"]);
    server.kill().unwrap();
    server.wait().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"V\": 1.0"));
}
