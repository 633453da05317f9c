use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use attractor_core::geometry::{hausdorff_distance, set_from_str};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_attractor"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn hausdorff_of_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "x,y\n0,0\n1,2\n-3,0.5\n");
    let v = json(&ok(&["hausdorff", &a, &a]));
    assert_eq!(v["hausdorff"].as_f64(), Some(0.0));
}

#[test]
fn hausdorff_of_singletons_is_their_distance() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "x,y\n0,0\n");
    let b = write(dir.path(), "b.csv", "x,y\n3,4\n");
    let v = json(&ok(&["hausdorff", &a, &b]));
    assert_eq!(v["hausdorff"].as_f64(), Some(5.0));
    assert_eq!(v["semi_ab"].as_f64(), Some(5.0));
}

#[test]
fn hausdorff_matches_the_library_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let mut ta = String::from("x,y\n");
    let mut tb = String::from("x,y\n");
    for k in 0..500 {
        let t = k as f64 * 0.0137;
        ta.push_str(&format!("{},{}\n", t.sin(), (2.0 * t).cos()));
        tb.push_str(&format!("{},{}\n", (t + 0.3).sin() * 1.01, t.cos() * 0.7));
    }
    let a = write(dir.path(), "a.csv", &ta);
    let b = write(dir.path(), "b.csv", &tb);
    let v = json(&ok(&["hausdorff", &a, &b]));
    let lib = hausdorff_distance(&set_from_str(&ta).unwrap(), &set_from_str(&tb).unwrap()).unwrap();
    assert_eq!(v["hausdorff"].as_f64().unwrap().to_bits(), lib.to_bits());
}

#[test]
fn tent_attractor_hull() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("tent");
    let v = json(&ok(&["attractor", "--family", "tent", "--s", "1.5", "-o", prefix.to_str().unwrap()]));
    let (lo, hi) = (v["hull"]["lo"][0].as_f64().unwrap(), v["hull"]["hi"][0].as_f64().unwrap());
    assert!((lo - 0.375).abs() < 1e-6 && (hi - 0.75).abs() < 1e-6, "[{lo}, {hi}]");
    assert!(dir.path().join("tent.csv").exists() && dir.path().join("tent.json").exists());
}

#[test]
fn lozi_attractor_is_chaotic() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("lozi");
    let v =
        json(&ok(&["attractor", "--family", "lozi", "--a", "1.7", "--b", "0.3", "--n-samples", "100000", "-o", prefix.to_str().unwrap()]));
    assert!(v["lyapunov_max"].as_f64().unwrap() > 0.0, "{v}");
}

#[test]
fn escape_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("far");
    let out = run(&["attractor", "--family", "lozi", "--a", "1.7", "--b", "0.3", "--x0", "100,100", "-o", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn contracting_lozi_does_not_escape() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("far");
    let out = run(&[
        "attractor",
        "--family",
        "lozi",
        "--a",
        "0.1",
        "--b",
        "0.3",
        "--x0",
        "100,100",
        "--n-samples",
        "1000",
        "-o",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn invalid_input_exits_with_code_two() {
    assert_eq!(run(&["attractor", "--family", "tent", "--s", "2.5"]).status.code(), Some(2));
    assert_eq!(run(&["quad", "--s", "1.8", "--omega", "0.7"]).status.code(), Some(2));
    assert_eq!(run(&["--workers", "0", "quad", "--s", "1.8", "--omega", "0.2"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\"samples\": 10, \"typo\": 1}");
    assert_eq!(run(&["bands", "--config", &cfg]).status.code(), Some(2));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

/// Slopes at which column `col` changes, in increasing order.
fn steps_in(rows: &[Vec<String>], col: usize) -> Vec<f64> {
    rows.windows(2).filter(|w| w[0][col] != w[1][col]).map(|w| w[1][0].parse::<f64>().unwrap()).collect()
}

#[test]
fn bands_sweep_steps_at_the_doubling_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bands.json", r#"{"s_min": 1.05, "s_max": 2.0, "samples": 2000}"#);
    let rows = csv_rows(&ok(&["bands", "--config", &cfg]));
    assert_eq!(rows.len(), 2000);
    let cell = (2.0 - 1.05) / 2000.0;
    let mut got = steps_in(&rows, 1);
    got.reverse();
    let want = [2f64.powf(0.5), 2f64.powf(0.25), 2f64.powf(0.125)];
    assert_eq!(got.len(), 3, "{got:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= cell, "step at {g}, expected {w}");
    }
}

#[test]
fn orbit_band_counts_agree_with_the_construction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bands.json", r#"{"s_min": 1.1, "s_max": 1.9, "samples": 40, "orbit_samples": 100000}"#);
    let rows = csv_rows(&ok(&["bands", "--config", &cfg]));
    for r in &rows {
        assert_eq!(r[1], r[5], "s = {}", r[0]);
    }
}

#[test]
fn coupled_sweep_boundary_is_half_inverse_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "coupled.json", r#"{"kind": "coupled", "s": [1.65, 1.95], "ns": 4, "omega": [0.2, 0.35], "nomega": 31}"#);
    let rows = csv_rows(&ok(&["sweep", "--config", &cfg]));
    let num = |x: &str| x.parse::<f64>().unwrap();
    for s in [1.65, 1.75, 1.85, 1.95] {
        let first = rows.iter().find(|r| (num(&r[0]) - s).abs() < 1e-9 && r[2] == "diagonal").map(|r| num(&r[1])).unwrap();
        assert!((first - 1.0 / (2.0 * s)).abs() <= 0.005 + 1e-12, "s {s}: {first}");
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = [
        ("bands", r#"{"samples": 200, "orbit_samples": 5000}"#),
        ("sweep", r#"{"nx": 6, "ny": 5, "n_samples": 5000, "lyapunov_steps": 2000}"#),
        ("continue", r#"{"steps": 8, "n_samples": 5000}"#),
    ];
    for (cmd, cfg) in jobs {
        let c = write(dir.path(), &format!("{cmd}.json"), cfg);
        let one = ok(&["--workers", "1", cmd, "--config", &c]);
        let eight = ok(&["--workers", "8", cmd, "--config", &c]);
        assert_eq!(one, eight, "{cmd}");
    }
    let p1 = dir.path().join("w1");
    let p8 = dir.path().join("w8");
    let base = ["attractor", "--family", "lozi", "--a", "1.7", "--b", "0.3", "--n-samples", "20000", "--basin-radius", "0.1"];
    ok(&[&["--workers", "1"][..], &base[..], &["-o", p1.to_str().unwrap()][..]].concat());
    ok(&[&["--workers", "8"][..], &base[..], &["-o", p8.to_str().unwrap()][..]].concat());
    for ext in ["csv", "json"] {
        let a = std::fs::read(dir.path().join(format!("w1.{ext}"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("w8.{ext}"))).unwrap();
        assert!(a == b, "attractor .{ext} differs");
    }
}

#[test]
fn continue_reports_the_tent_path_without_flags() {
    let out = ok(&["continue"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 65);
    assert!(rows.iter().all(|r| r.last().unwrap() == "0"));
}

#[test]
fn quad_and_lozi_geometry_report_their_constructions() {
    let q = json(&ok(&["quad", "--s", "1.8", "--omega", "0.2"]));
    assert_eq!(q["vertices"].as_array().unwrap().len(), 4);
    assert!((q["diagonal_omega"].as_f64().unwrap() - 1.0 / 3.6).abs() < 1e-15);
    let g = json(&ok(&["lozi-geometry", "--a", "1.7", "--b", "0.3"]));
    assert_eq!(g["region"]["holds"], Value::Bool(true));
    assert_eq!(g["bounds"].as_array().unwrap().len(), 4);
    let g = json(&ok(&["lozi-geometry", "--a", "1.7", "--b", "0.5"]));
    assert!(g["geometry"].is_null());
}

#[test]
fn cycle_reports_the_lrl_orbit() {
    let v = json(&ok(&["cycle", "--family", "bcnf", "--tau-l", "0.5", "--tau-r", "-2.6", "--itinerary", "LRL"]));
    assert_eq!(v["period"].as_u64(), Some(3));
    assert!((v["det"].as_f64().unwrap() - 0.027).abs() < 1e-12);
}
