use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use shrinklab::report::SCHEMA;
use shrinklab_core::immersion::fixtures;
use shrinklab_core::mesh::{build_mesh, TriangleMeshN};

fn shrinklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shrinklab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_schema(report: &Value) {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn measurement(report: &Value, name: &str) -> f64 {
    report["measurements"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["name"] == name)
        .unwrap_or_else(|| panic!("no measurement {name}"))["value"]
        .as_f64()
        .unwrap()
}

fn write_mesh(dir: &Path, name: &str, mesh: &TriangleMeshN) -> String {
    let p = dir.join(name);
    std::fs::write(&p, mesh.to_json()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn fixtures_list_names_every_fixture() {
    let o = shrinklab(&["fixtures", "list"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(names, ["plane", "sphere2", "sphere3", "circle", "clifford", "al-curve", "graph-zm"]);
}

#[test]
fn unknown_fixture_is_a_usage_error() {
    let o = shrinklab(&["entropy", "--fixture", "torus9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("torus9"));
}

#[test]
fn fixture_and_mesh_conflict() {
    let o = shrinklab(&["entropy", "--fixture", "sphere2", "--mesh", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn subject_is_required() {
    assert_eq!(shrinklab(&["entropy"]).status.code(), Some(2));
}

#[test]
fn bad_flag_values_are_usage_errors() {
    assert_eq!(shrinklab(&["entropy", "--fixture", "sphere2", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(shrinklab(&["spectrum", "--fixture", "sphere2", "--resolution", "1"]).status.code(), Some(2));
    assert_eq!(shrinklab(&["spectrum", "--fixture", "sphere2", "--count", "0"]).status.code(), Some(2));
}

#[test]
fn report_requires_out() {
    let o = shrinklab(&["report", "--fixture", "circle"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--out"));
}

#[test]
fn missing_mesh_file_is_an_io_error() {
    let o = shrinklab(&["entropy", "--mesh", "/nonexistent/mesh.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn help_exits_zero() {
    assert_eq!(shrinklab(&["--help"]).status.code(), Some(0));
}

#[test]
fn tight_tolerance_fails_with_exit_one() {
    let o = shrinklab(&["entropy", "--fixture", "sphere2", "--resolution", "16", "--tol", "1e-15"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn entropy_report_matches_schema_and_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.json");
    let o = shrinklab(&["entropy", "--fixture", "sphere2", "--resolution", "32", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let r = read_json(&out);
    assert_schema(&r);
    assert_eq!(r["schema"], "shrinklab/run-report/v1");
    assert_eq!(r["pass"], true);
    let lambda = &check(&r, "entropy");
    assert!((lambda["value"].as_f64().unwrap() - 4.0 / std::f64::consts::E).abs() < 1e-6);
    assert_eq!(lambda["source"], "closed-form");
    assert_eq!(r["config"]["resolution"], 32);
}

#[test]
fn clifford_spectrum_has_fourfold_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = shrinklab(&["spectrum", "--fixture", "clifford", "--count", "6", "--resolution", "48", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let r = read_json(&out);
    assert_schema(&r);
    for k in 1..=4 {
        assert!((measurement(&r, &format!("mu-{k}")) - 0.5).abs() < 1e-2);
    }
    assert_eq!(check(&r, "spectrum-multiplicity-0.5")["value"].as_f64(), Some(4.0));
}

#[test]
fn verify_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("v{i}.json"))).collect();
    for p in &paths {
        let o = shrinklab(&["verify", "--fixture", "circle", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stdout(&o));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert_schema(&read_json(&paths[0]));
}

#[test]
fn octahedron_mesh_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = build_mesh(&fixtures::sphere(2.0, 3), 2).unwrap();
    assert_eq!(mesh.genus(), 0);
    assert!(mesh.violations().is_empty());
    let path = write_mesh(dir.path(), "octa.json", &mesh);
    let out = dir.path().join("r.json");
    let o = shrinklab(&["entropy", "--mesh", &path, "--out", out.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_ne!(o.status.code(), Some(3), "{}", stderr(&o));
    let r = read_json(&out);
    assert_schema(&r);
    assert_eq!(r["subject"], "octa");
    assert_eq!(measurement(&r, "ambient-dim"), 3.0);
}

#[test]
fn open_mesh_is_rejected_naming_the_edge() {
    let dir = tempfile::tempdir().unwrap();
    let mut mesh = build_mesh(&fixtures::sphere(2.0, 3), 2).unwrap();
    let dropped = mesh.triangles.pop().unwrap();
    let path = write_mesh(dir.path(), "open.json", &mesh);
    let o = shrinklab(&["entropy", "--mesh", &path]);
    assert_eq!(o.status.code(), Some(2));
    let (a, b) = (dropped[0].min(dropped[1]), dropped[0].max(dropped[1]));
    assert!(stderr(&o).contains(&format!("edge ({a}, {b})")), "{}", stderr(&o));
}

#[test]
fn malformed_mesh_json_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"header\": 3}").unwrap();
    assert_eq!(shrinklab(&["entropy", "--mesh", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn four_dimensional_mesh_keeps_its_ambient_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = build_mesh(&fixtures::clifford(), 24).unwrap();
    assert_eq!(mesh.ambient_dim, 4);
    assert_eq!(mesh.genus(), 1);
    let path = write_mesh(dir.path(), "torus.json", &mesh);
    let out = dir.path().join("r.json");
    shrinklab(&["entropy", "--mesh", &path, "--out", out.to_str().unwrap()]);
    let r = read_json(&out);
    assert_eq!(measurement(&r, "ambient-dim"), 4.0);
}

#[test]
fn report_writes_json_and_csv_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let o = shrinklab(&["report", "--fixture", "circle", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_schema(&read_json(&out.join("run_report.json")));

    let parse = |name: &str| {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
        let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        (header, rows)
    };
    let (h, rows) = parse("spectrum.csv");
    assert_eq!(h, ["k", "mu", "multiplicity"]);
    assert_eq!(rows.len(), 9);
    assert_eq!(&rows[1][2], "2");
    let (h, rows) = parse("refinement.csv");
    assert_eq!(h, ["h", "mu1", "error", "slope"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][3], "");
    let (h, rows) = parse("curve.csv");
    assert_eq!(h, ["s", "x", "y", "theta", "k"]);
    assert!(rows.len() > 10);
}
