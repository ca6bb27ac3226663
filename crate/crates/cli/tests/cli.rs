use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nodal_core::{DomainSpec, Profile};
use tempfile::TempDir;

fn nodal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const COARSE: &str = r#""numerics": {"target_h": 0.25, "refinements": 1}"#;

#[test]
fn missing_domain_exits_with_usage() {
    let o = nodal(&["spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("--config"), "{err}");
    assert!(err.contains("Usage:"), "{err}");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(nodal(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_json_reports_position() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "{\n  \"domain\": {\"a\": 2,,}\n}\n");
    let o = nodal(&["spectrum", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2 column"), "{err}");
}

#[test]
fn unknown_preset_is_rejected() {
    let o = nodal(&["verdict", "--preset", "theorem-iii"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_domain_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"domain": {"a": 2, "b": 1, "eps": 1.5, "profile": {"kind": "constant"}, "L": 3}}"#,
    );
    assert_eq!(nodal(&["spectrum", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn run_needs_an_experiment_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"domain": {"a": 2, "b": 1, "eps": 0.2, "profile": {"kind": "constant"}, "L": 3}}"#,
    );
    let o = nodal(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment"));
}

#[test]
fn solver_failure_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"domain": {"a": 2, "b": 1, "eps": 0.2, "profile": {"kind": "constant"}, "L": 3},
            "numerics": {"target_h": 0.3, "refinements": 0, "tol": 1e-300}}"#,
    );
    let out = tmp.path().join("out");
    let o = nodal(&["spectrum", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("no convergence"));
}

#[test]
fn spec_round_trips_through_output() {
    let tmp = TempDir::new().unwrap();
    let spec = DomainSpec {
        boundary_samples: 40,
        ..DomainSpec::new(1.5, 1.0, 0.15, Profile::rational_decay(0.5), 3.25)
    };
    let body = format!(
        r#"{{"domain": {}, {COARSE}, "experiment": "spectrum", "kmax": 3}}"#,
        serde_json::to_string(&spec).unwrap()
    );
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    let o = nodal(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let back: DomainSpec = serde_json::from_str(&fs::read_to_string(out.join("spec.json")).unwrap()).unwrap();
    assert_eq!(back, spec);
    let summary = String::from_utf8_lossy(&o.stdout);
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.starts_with("spectrum config"));
}

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{"domain": {{"a": 2, "b": 1, "eps": 0.2, "profile": {{"kind": "exp_decay", "rate": 1}}, "L": 3}}, {COARSE}}}"#),
    );
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = nodal(&["bracket", "--config", &cfg, "--kmax", "4", "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("bracket.csv")).unwrap()
    };
    let first = run("a", "11");
    assert_eq!(first, run("b", "11"));
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("spec_hash,k,sector,lambda,lambda_n,lambda_d,residual\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn eps_sweep_columns_are_monotone() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sweep");
    let o = nodal(&[
        "eps-sweep",
        "--preset",
        "theorem-i",
        "--eps",
        "0.4,0.2,0.1,0.05",
        "--kmax",
        "3",
        "--target-h",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.len(), 12);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (ik, il) = (col("k"), col("lambda"));
    let rows: Vec<(usize, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(r.len(), header.len());
            (r[ik].parse().unwrap(), r[il].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 12);
    for k in 1..=3 {
        let lam: Vec<f64> = rows.iter().filter(|r| r.0 == k).map(|r| r.1).collect();
        assert!(lam.windows(2).all(|w| w[0] < w[1]), "k = {k}: {lam:?}");
    }
}

#[test]
fn sweep_without_eps_is_a_usage_error() {
    let o = nodal(&["eps-sweep", "--preset", "theorem-i"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn straight_tube_verdict_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("v");
    let o = nodal(&["verdict", "--preset", "theorem-i", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["touches_boundary"], false);
    assert_eq!(v["nodal_classification"], "axis_r");
    assert!((v["min_dist"].as_f64().unwrap() - 0.1).abs() < 1e-3);
    let svg = fs::read_to_string(out.join("domain.svg")).unwrap();
    assert!(svg.contains(r#"class="nodal""#));
    let nodal_csv = fs::read_to_string(out.join("nodal.csv")).unwrap();
    assert!(nodal_csv.starts_with("segment_id,x1,x2\n"));
}

#[test]
fn sectors_scan_reports_owner() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    let o = nodal(&[
        "sectors",
        "--preset",
        "theorem-i",
        "--target-h",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sectors.json")).unwrap()).unwrap();
    assert_eq!(v["owner"], "(anti,sym)#1");
    assert_eq!(v["measured"], "axis_r");
}

#[test]
fn render_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let render = |name: &str| {
        let out = tmp.path().join(name);
        let o = nodal(&[
            "render",
            "--preset",
            "theorem-i,theorem-ii",
            "--target-h",
            "0.1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("domain.svg")).unwrap()
    };
    let a = render("a");
    assert_eq!(a, render("b"));
    let svg = String::from_utf8(a).unwrap();
    assert_eq!(svg.matches("<g id=\"panel-").count(), 2);
    assert_eq!(svg.matches(">truncation<").count(), 4);
}
