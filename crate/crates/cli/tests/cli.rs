use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn engel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_engel")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace { dir: tempfile::tempdir().unwrap() };
        ws.file("square0.json", r#"{"type":"square","alpha":0}"#);
        ws.file("disc.json", r#"{"type":"disc","radius":1}"#);
        ws
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }
}

/// Rows of a trajectory CSV as numbers, header checked.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x,y,z,v,theta,u1,u2,h1,h2,h3,h4,E,eq_residual");
    lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn classify_abnormal() {
    let ws = Workspace::new();
    let out = engel(&["classify", "--region", &ws.path("square0.json"), "--phi", "0,0,0,1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["tag"], "Abnormal");
}

#[test]
fn classify_disc_oscillation() {
    let ws = Workspace::new();
    let out = engel(&["classify", "--region", &ws.path("disc.json"), "--phi", "1,0,0,1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["tag"], "PendOscillate");
    assert_eq!(v["subtag"], "3.2");
    assert_eq!(v["theta1"].as_f64().unwrap(), 0.0);
    assert!((v["theta2"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    for key in ["theta0", "E", "E0", "Em1", "uniqueness", "warnings"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn classify_normalize_matches_scaled() {
    let ws = Workspace::new();
    let region = ws.path("square0.json");
    let a = engel(&["classify", "--region", &region, "--phi", "2,0,2,0", "--normalize"]);
    let b = engel(&["classify", "--region", &region, "--phi", "1,0,1,0"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn classify_exit_codes() {
    let ws = Workspace::new();
    let region = ws.path("square0.json");
    let off_polar = engel(&["classify", "--region", &region, "--phi", "3,0,0,1"]);
    assert_eq!(code(&off_polar), 2);
    assert!(String::from_utf8_lossy(&off_polar.stderr).contains("polar"));
    assert_eq!(code(&engel(&["classify", "--region", &region, "--phi", "0,0,1,1"])), 2);
    assert_eq!(code(&engel(&["classify", "--region", &region, "--phi", "0,0,0,0"])), 3);
    let bad_phi = engel(&["classify", "--region", &region, "--phi", "1,0,x,0"]);
    assert_eq!(code(&bad_phi), 1);
    assert!(String::from_utf8_lossy(&bad_phi.stderr).contains("phi3"));
    assert_eq!(code(&engel(&["classify", "--region", &ws.path("missing.json"), "--phi", "1,0,0,0"])), 1);
    ws.file("open.json", r#"{"type":"polygon","vertices":[[1,1],[2,1],[2,2]]}"#);
    assert_eq!(code(&engel(&["classify", "--region", &ws.path("open.json"), "--phi", "1,0,0,0"])), 1);
    ws.file("garbled.json", r#"{"type":"hexagon"}"#);
    assert_eq!(code(&engel(&["classify", "--region", &ws.path("garbled.json"), "--phi", "1,0,0,0"])), 1);
}

#[test]
fn trace_disc_closes_circle() {
    let ws = Workspace::new();
    let out_path = ws.path("circle.csv");
    let tau = std::f64::consts::TAU.to_string();
    let out = engel(&["trace", "--region", &ws.path("disc.json"), "--phi", "1,0,1,0", "--T", &tau, "--n", "629", "--out", &out_path]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(Path::new(&out_path));
    assert_eq!(r.len(), 629);
    let last = r.last().unwrap();
    assert!(last[1].abs() < 1e-6 && last[2].abs() < 1e-6, "{last:?}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ws.path("circle.validation.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn trace_isoperimetrix_period() {
    let ws = Workspace::new();
    let region = ws.path("square0.json");
    let out = engel(&["trace", "--region", &region, "--phi", "1,0,1,0", "--T", "8", "--n", "2000", "--out", &ws.path("iso.csv")]);
    assert_eq!(code(&out), 0);
    assert_eq!(rows(&ws.dir.path().join("iso.csv")).len(), 2000);
    // with 2001 samples, t + 4 is exactly 1000 rows later
    let out = engel(&["trace", "--region", &region, "--phi", "1,0,1,0", "--T", "8", "--n", "2001", "--out", &ws.path("grid.csv")]);
    assert_eq!(code(&out), 0);
    let r = rows(&ws.dir.path().join("grid.csv"));
    for k in 0..=1000 {
        let (a, b) = (&r[k], &r[k + 1000]);
        assert!((b[0] - a[0] - 4.0).abs() < 1e-12);
        assert!((a[1] - b[1]).abs() < 1e-6 && (a[2] - b[2]).abs() < 1e-6, "t = {}", a[0]);
    }
}

#[test]
fn trace_abnormal_columns_vanish() {
    let ws = Workspace::new();
    let out_path = ws.path("ab.csv");
    let out = engel(&["trace", "--region", &ws.path("square0.json"), "--phi", "0,0,0,1", "--T", "1", "--n", "11", "--out", &out_path]);
    assert_eq!(code(&out), 0);
    for row in rows(Path::new(&out_path)) {
        assert_eq!([row[1], row[3], row[4]], [0.0, 0.0, 0.0]);
    }
}

#[test]
fn trace_is_deterministic() {
    let ws = Workspace::new();
    let run = |name: &str| {
        let p = ws.path(name);
        let out = engel(&["trace", "--region", &ws.path("square0.json"), "--phi", "-0.5,0.5,0.25,-0.5", "--T", "-3", "--n", "301", "--out", &p]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(&p).unwrap(), std::fs::read(ws.path(&name.replace(".csv", ".validation.json"))).unwrap())
    };
    let (a, b) = (run("one.csv"), run("two.csv"));
    assert_eq!(a, b);
}

#[test]
fn trace_json_format() {
    let ws = Workspace::new();
    let out = engel(&["trace", "--region", &ws.path("disc.json"), "--phi", "1,0,1,0", "--T", "1", "--n", "5", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["samples"].as_array().unwrap().len(), 5);
    assert_eq!(v["validation"]["passed"], true);
    assert_eq!(v["class"]["tag"], "Isoperimetrix");
}

#[test]
fn trace_argument_errors() {
    let ws = Workspace::new();
    let region = ws.path("disc.json");
    assert_eq!(code(&engel(&["trace", "--region", &region, "--phi", "1,0,1,0", "--T", "0"])), 1);
    assert_eq!(code(&engel(&["trace", "--region", &region, "--phi", "1,0,1,0", "--n", "1"])), 1);
    let sched = ws.file("sched.json", r#"[{"endpoint":1,"dwell":1.0,"reflect":true,"shift_k":0}]"#);
    let out = engel(&["trace", "--region", &region, "--phi", "1,0,0,1", "--schedule", sched.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    let bad = ws.file("bad.json", r#"[{"endpoint":3}]"#);
    assert_eq!(code(&engel(&["trace", "--region", &region, "--phi", "1,0,0,1", "--schedule", bad.to_str().unwrap()])), 4);
    let garbled = ws.file("garbled.json", "[{endpoint:1");
    assert_eq!(code(&engel(&["trace", "--region", &region, "--phi", "1,0,0,1", "--schedule", garbled.to_str().unwrap()])), 1);
}

#[test]
fn validate_round_trip_and_tamper() {
    let ws = Workspace::new();
    let region = ws.path("square0.json");
    let csv = ws.path("t.csv");
    assert_eq!(code(&engel(&["trace", "--region", &region, "--phi", "0.5,0.5,0.5,0.25", "--T", "4", "--n", "201", "--out", &csv])), 0);
    let ok = engel(&["validate", "--region", &region, "--phi", "0.5,0.5,0.5,0.25", "--input", &csv]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(json(&ok)["passed"], true);

    // move one sample off the extremal: the linear integral no longer holds
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[100].split(',').map(String::from).collect();
    cols[1] = format!("{:.16e}", cols[1].parse::<f64>().unwrap() + 1e-3);
    lines[100] = cols.join(",");
    let tampered = ws.file("bad.csv", &(lines.join("\n") + "\n"));
    let bad = engel(&["validate", "--region", &region, "--phi", "0.5,0.5,0.5,0.25", "--input", tampered.to_str().unwrap()]);
    assert_eq!(code(&bad), 5);
    assert_eq!(json(&bad)["passed"], false);
}

#[test]
fn validate_fresh_trace() {
    let ws = Workspace::new();
    let out = engel(&["validate", "--region", &ws.path("disc.json"), "--phi", "0,1,0.5,-1", "--T", "5", "--n", "101"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["samples"], 101);
}

#[test]
fn phi_grid_keeps_input_order() {
    let ws = Workspace::new();
    let grid = ws.file("grid.txt", "# covectors\n1,0,0,1\n0,0,0,1\n3,0,0,1\n0,1,1,0\n");
    let out = engel(&["classify", "--region", &ws.path("square0.json"), "--phi-grid", grid.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 4);
    assert_eq!(list[1]["tag"], "Abnormal");
    assert_eq!(list[2]["exit_code"], 2);
    assert_eq!(list[3]["tag"], "Isoperimetrix");

    let template = ws.path("batch.csv");
    let out = engel(&["trace", "--region", &ws.path("square0.json"), "--phi-grid", grid.to_str().unwrap(), "--T", "2", "--n", "21", "--out", &template]);
    assert_eq!(code(&out), 2);
    for k in [0, 1, 3] {
        assert_eq!(rows(&ws.dir.path().join(format!("batch_{k:04}.csv"))).len(), 21);
    }
    assert!(!ws.dir.path().join("batch_0002.csv").exists());
}

#[test]
fn polar_square_is_diamond() {
    let ws = Workspace::new();
    let out = engel(&["polar", "--region", &ws.path("square0.json"), "--n", "8"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "theta,r,dr_minus,dr_plus,h1,h2,corner");
    for line in lines {
        let c: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        // polar of the unit square is |h1| + |h2| = 1
        assert!((c[4].abs() + c[5].abs() - 1.0).abs() < 1e-12, "{line}");
        let on_axis = (c[0] / std::f64::consts::FRAC_PI_2).fract().abs() < 1e-12;
        assert_eq!(c[6] == 1.0, on_axis, "{line}");
    }
}
