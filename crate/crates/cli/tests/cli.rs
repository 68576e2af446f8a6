use std::path::Path;
use std::process::{Command, Output};

fn tgraph(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgraph"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("TGRAPH_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const EQUILATERAL: &str = "[triangle]\nangles = 1/3 pi, 1/3 pi, 1/3 pi\n[lambda]\nangle = 0.37\n[window]\nradius = 20\n";

#[test]
fn validate_equilateral_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "eq.cfg", EQUILATERAL);
    let out = tgraph(&["validate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("validate.json")).unwrap()).unwrap();
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["segments_passed"], true);
    assert_eq!(v["tiling_passed"], true);
    assert_eq!(v["params"]["radius"], 20);
}

#[test]
fn build_svg_counts_faces() {
    let dir = tempfile::tempdir().unwrap();
    let out = tgraph(&["build", "--radius", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let svg = std::fs::read_to_string(dir.path().join("window.svg")).unwrap();
    let side = 2 * 7 + 1;
    assert_eq!(svg.matches("<line ").count(), side * side);
    assert_eq!(svg.matches("<polygon ").count(), side * side);
    assert_eq!(svg.matches(" fill=\"#").count(), side * side);
}

#[test]
fn cov_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["cov", "--walks", "2000", "--steps", "20", "--seed", "42"];
    assert_eq!(tgraph(&args, a.path()).status.code(), Some(0));
    assert_eq!(tgraph(&args, b.path()).status.code(), Some(0));
    let x = std::fs::read(a.path().join("cov.json")).unwrap();
    let y = std::fs::read(b.path().join("cov.json")).unwrap();
    assert_eq!(x, y);
    let c = tempfile::tempdir().unwrap();
    let other = ["cov", "--walks", "2000", "--steps", "20", "--seed", "43"];
    assert_eq!(tgraph(&other, c.path()).status.code(), Some(0));
    assert_ne!(x, std::fs::read(c.path().join("cov.json")).unwrap());
}

#[test]
fn walk_csv_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["walk", "--horizon", "10", "--count", "3", "--seed", "5"];
    assert_eq!(tgraph(&args, a.path()).status.code(), Some(0));
    assert_eq!(tgraph(&args, b.path()).status.code(), Some(0));
    let x = std::fs::read_to_string(a.path().join("trajectories.csv")).unwrap();
    assert_eq!(x, std::fs::read_to_string(b.path().join("trajectories.csv")).unwrap());
    assert!(x.starts_with("walker,time,m,n,x,y\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tgraph(&["frobnicate"], dir.path()).status.code(), Some(2));

    let bad = config(dir.path(), "bad.cfg", "[triangle]\nangles = 1/3 pi, 1/3 pi, 1/3 pi\n\n[window]\nradius = many\n");
    let out = tgraph(&["build", "--config", &bad], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));

    let deg = config(dir.path(), "deg.cfg", "[lambda]\nangle = 1/2 pi\n");
    assert_eq!(tgraph(&["build", "--config", &deg], dir.path()).status.code(), Some(4));

    let irrational = config(dir.path(), "irr.cfg", "[triangle]\nsides = 3, 4, 5\n");
    assert_eq!(tgraph(&["periodic", "--config", &irrational], dir.path()).status.code(), Some(3));
}

#[test]
fn periodic_and_kernel_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = tgraph(&["periodic", "--blocks", "20000"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("periodic.json")).unwrap()).unwrap();
    assert_eq!(v["period"]["p"], 3);
    assert_eq!(v["states"], 9);
    assert!(v["balance_residual"].as_f64().unwrap() <= 1e-12);
    let rows = std::fs::read_to_string(dir.path().join("stationary.csv")).unwrap();
    assert_eq!(rows.lines().count(), 10);

    let out = tgraph(&["kernel", "--radius", "12"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("kernel.json")).unwrap()).unwrap();
    let probs: Vec<f64> = v["edge_probabilities"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
}

#[test]
fn render_overlays_and_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tgraph"))
        .args(["render", "--radius", "8", "--walk-horizon", "20", "--cut", "0.5"])
        .env("TGRAPH_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("render.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray"));
    assert!(svg.contains("<polyline id=\"walk\""));
}
