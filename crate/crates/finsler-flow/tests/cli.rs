use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler-flow")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn geom_value(stdout: &[u8], key: &str) -> f64 {
    let text = String::from_utf8_lossy(stdout);
    let line = text.lines().find(|l| l.starts_with(&format!("{key},"))).unwrap_or_else(|| panic!("no {key} in\n{text}"));
    line.split(',').nth(1).unwrap().parse().unwrap()
}

const SMALL_FLOW: &str = r#"
[structure]
name = "round_sphere"

[grid]
nx1 = 9
nx2 = 9
bounds = [[-0.5, 0.5], [-0.5, 0.5]]
boundary = "pinned"
ntheta = 16

[flow]
kind = "ricci"
dt = 1e-3
t_end = 0.1
snapshot_stride = 100
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn geom_examples() {
    let o = bin(&["geom", "--structure", "round_sphere", "--at", "0.5,0", "--dir", "1,0"]);
    assert_eq!(code(&o), 0);
    assert!((geom_value(&o.stdout, "G^1") + 0.4).abs() < 1e-12);
    assert!(geom_value(&o.stdout, "G^2").abs() < 1e-12);
    assert!((geom_value(&o.stdout, "Ric") - 1.0).abs() < 1e-10);

    let o = bin(&["geom", "--structure", "rosenau", "--param", "t0=-1", "--at", "0,0", "--dir", "1,0"]);
    assert_eq!(code(&o), 0);
    assert!((geom_value(&o.stdout, "Ric") - 0.656518).abs() < 1e-6);

    let o = bin(&["--format", "json", "geom", "--structure", "randers_flat", "--param", "b=0.3", "--at", "-1,2", "--dir", "0,1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["F"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["ricci"].as_f64().unwrap(), 0.0);
    assert_eq!(v["hh_curvature"][1][0][1][0].as_f64().unwrap(), 0.0);
}

#[test]
fn usage_and_input_errors_exit_2() {
    assert_eq!(code(&bin(&["frobnicate"])), 2);
    assert_eq!(code(&bin(&["geom", "--structure", "round_sphere", "--at", "0", "--dir", "1,0"])), 2);
    assert_eq!(code(&bin(&["geom", "--structure", "atlantis", "--at", "0,0", "--dir", "1,0"])), 2);
    assert_eq!(code(&bin(&["geom", "--structure", "round_sphere", "--at", "0,0", "--dir", "0,0"])), 2);
    assert_eq!(code(&bin(&["geom", "--structure", "rosenau", "--param", "t0=1", "--at", "0,0", "--dir", "1,0"])), 2);
    assert_eq!(code(&bin(&["validate", "--suite", "everything"])), 2);
}

#[test]
fn non_convex_sampled_indicatrix_exits_3() {
    // F = 1 + 0.5 cos 4θ on every base point: the indicatrix is not convex
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap.csv");
    let mut text = String::from("t,i1,i2,itheta,x1,x2,theta,F,Ric\n");
    let (n, nt) = (9, 16);
    for i1 in 0..n {
        for i2 in 0..n {
            for k in 0..nt {
                let th = 2.0 * std::f64::consts::PI * k as f64 / nt as f64;
                let f = 1.0 + 0.5 * (4.0 * th).cos();
                text += &format!("0,{i1},{i2},{k},{},{},{th},{f},0\n", i1 as f64 / 8.0, i2 as f64 / 8.0);
            }
        }
    }
    std::fs::write(&path, text).unwrap();
    let o = bin(&["geom", "--structure", "grid_sampled", "--param", &format!("path={}", path.display()), "--at", "0.5,0.5", "--dir", "1,0"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flow_writes_outputs_and_scales_the_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_FLOW);
    let out = dir.path().join("out");
    let o = bin(&["--out", out.to_str().unwrap(), "--threads", "2", "flow", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["snapshots.csv", "diagnostics.csv", "events.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    // F²(0.1) / F²(0) = 1 − 2·0.1 at every node
    let mut rdr = csv::Reader::from_path(out.join("snapshots.csv")).unwrap();
    let mut first = std::collections::HashMap::new();
    let mut worst: f64 = 0.0;
    for r in rdr.records() {
        let r = r.unwrap();
        let key = (r[1].to_string(), r[2].to_string(), r[3].to_string());
        let (t, f): (f64, f64) = (r[0].parse().unwrap(), r[7].parse().unwrap());
        if t == 0.0 {
            first.insert(key, f);
        } else {
            assert!((t - 0.1).abs() < 1e-12);
            worst = worst.max((f * f / (first[&key] * first[&key]) - 0.8).abs());
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn flow_json_output_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_FLOW);
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        assert_eq!(code(&bin(&["--out", out.to_str().unwrap(), "--format", "json", "flow", &cfg])), 0);
        out
    };
    let (a, b) = (run("a"), run("b"));
    assert!(!a.join("snapshots.csv").exists());
    let bytes = std::fs::read(a.join("run.json")).unwrap();
    assert_eq!(bytes, std::fs::read(b.join("run.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert!(v.is_object());
}

#[test]
fn euclidean_flow_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_FLOW.replace("round_sphere", "euclidean"));
    let out = dir.path().join("out");
    assert_eq!(code(&bin(&["--out", out.to_str().unwrap(), "flow", &cfg])), 0);
    let mut rdr = csv::Reader::from_path(out.join("snapshots.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2 * 9 * 9 * 16);
    let (first, last) = rows.split_at(9 * 9 * 16);
    for (a, b) in first.iter().zip(last) {
        assert_eq!(&b[0], "0.1");
        assert_eq!(a[7].parse::<f64>().unwrap(), b[7].parse::<f64>().unwrap());
        assert!((a[7].parse::<f64>().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(&b[8], "0");
    }
}

#[test]
fn config_error_exits_2_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for bad in [
        SMALL_FLOW.replace("dt = 1e-3", "dt = -1"),
        SMALL_FLOW.replace("ntheta = 16", "ntheta = 16\ncolour = 3"),
        SMALL_FLOW.replace("round_sphere", "atlantis"),
        SMALL_FLOW.replace("nx1 = 9", "nx1 = 2"),
    ] {
        let cfg = write_config(dir.path(), &bad);
        assert_eq!(code(&bin(&["--out", out.to_str().unwrap(), "flow", &cfg])), 2);
        assert!(!out.exists());
    }
    assert_eq!(code(&bin(&["--out", out.to_str().unwrap(), "flow", "/nonexistent/run.toml"])), 2);
    assert!(!out.exists());
}

#[test]
fn early_stop_exits_4_and_reports_reason() {
    let text = SMALL_FLOW
        .replace("name = \"round_sphere\"", "name = \"conformal_randers\"\nparams = { b = 0.2 }")
        .replace("nx1 = 9\nnx2 = 9", "nx1 = 13\nnx2 = 13")
        .replace("ntheta = 16", "ntheta = 32")
        .replace("t_end = 0.1", "t_end = 0.5\nfiber_projection = \"none\"");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = bin(&["--out", out.to_str().unwrap(), "flow", &cfg]);
    assert_eq!(code(&o), 4);
    let events = std::fs::read_to_string(out.join("events.csv")).unwrap();
    assert!(events.lines().last().unwrap().contains(",stop,"), "{events}");
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn deturck_flow_writes_diffeomorphisms() {
    let text = r#"
[structure]
name = "torus_bump"
params = { eps = 0.1 }

[background]
name = "round_torus"

[grid]
nx1 = 9
nx2 = 9
bounds = [[0, 6.283185307179586], [0, 6.283185307179586]]
boundary = "periodic"
ntheta = 16

[flow]
kind = "deturck"
dt = 5e-3
t_end = 0.02
snapshot_stride = 2
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), text);
    let out = dir.path().join("out");
    assert_eq!(code(&bin(&["--out", out.to_str().unwrap(), "flow", &cfg])), 0);
    let mut rdr = csv::Reader::from_path(out.join("diffeo.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "i1", "i2", "phi1", "phi2", "J11", "J12", "J21", "J22"]);
    let last = rdr.records().last().unwrap().unwrap();
    assert!((last[0].parse::<f64>().unwrap() - 0.02).abs() < 1e-12);
}

#[test]
fn validate_exit_codes() {
    let o = bin(&["validate", "--suite", "kernel"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).lines().filter(|l| l.starts_with("PASS")).count() >= 10);

    let o = bin(&["--format", "json", "validate", "--suite", "kernel", "--mutate", "flip-cartan"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}
