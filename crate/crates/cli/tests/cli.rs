use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn mpk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpk")).args(args).env("MPK_THREADS", "1").output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn sympcheck_identity() {
    let dir = tempfile::tempdir().unwrap();
    let i4 = write(dir.path(), "I4.json", r#"{"d": 2, "rows": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#);
    let v = stdout_json(&mpk(&["sympcheck", "--input", &i4]));
    assert_eq!(v["relations_satisfied"], true);
    assert_eq!(v["symplectic_residual"].as_f64().unwrap(), 0.0);
    assert_eq!(v["rank_b"], 0);
}

#[test]
fn validation_and_guard_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"d": 1, "rows": [[1,1],[0,2]]}"#);
    let o = mpk(&["sympcheck", "--input", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "NotSymplectic");

    let o = mpk(&["demo", "classical-hardy", "--n", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(serde_json::from_slice::<Value>(&o.stderr).is_ok());

    let o = mpk(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));

    // a wide input under a strong chirp aliases; --strict escalates the warning
    let q = write(dir.path(), "chirp.json", r#"{"d": 1, "rows": [[1,0],[30,1]]}"#);
    let o = mpk(&["apply", "--input", &q, "--n", "64", "--L", "4", "--strict"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "AliasRisk");
}

#[test]
fn classical_hardy_demo() {
    let v = stdout_json(&mpk(&["demo", "classical-hardy", "--a", "1", "--b", "1"]));
    assert_eq!(v["verdict"], "Extremal");
    assert!(v["witness_rel_l2"].as_f64().unwrap() < 1e-10);
    let v = stdout_json(&mpk(&["demo", "classical-hardy", "--a", "2", "--b", "1"]));
    assert_eq!(v["verdict"], "Vanishing");
}

#[test]
fn demos_exit_zero() {
    for (name, extra) in [
        ("example-1-4", vec![]),
        ("sharpness-1-4", vec![]),
        ("frft-corollary", vec![]),
        ("anisotropic-oscillator", vec!["--a", "1.3", "--t1", "0.9"]),
        ("harmonic-oscillator", vec!["--omega", "1,2"]),
        ("knutsen-comparison", vec!["--t1", "1.0471975511965976"]),
    ] {
        let mut args = vec!["demo", name];
        args.extend(extra);
        let v = stdout_json(&mpk(&args));
        assert_eq!(v["demo"], name);
    }
    let v = stdout_json(&mpk(&["demo", "example-1-4"]));
    assert!(v["rel_l2_vs_unitary_amplitude"].as_f64().unwrap() < 1e-3);
    let v = stdout_json(&mpk(&["demo", "knutsen-comparison", "--t1", "1.0471975511965976"]));
    assert_eq!(v["report"]["agree"], true);
}

#[test]
fn apply_writes_grid_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let j = write(dir.path(), "J.csv", "0,1\n-1,0\n");
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let o = mpk(&["apply", "--input", &j, "--n", "128", "--L", "5.656854249492381", "--output-dir", out.to_str().unwrap()]);
        stdout_json(&o);
    }
    let a = std::fs::read(out1.join("apply.mpgf")).unwrap();
    let b = std::fs::read(out2.join("apply.mpgf")).unwrap();
    assert_eq!(a, b);
    let g = mpk::io::grid_from_bytes(&a).unwrap();
    // the Fourier transform fixes the standard Gaussian
    let want = mpk::GridFunction::from_fn(1, 128, 5.656854249492381, |x| {
        mpk::Complex64::new((-std::f64::consts::PI * x[0] * x[0]).exp(), 0.0)
    })
    .unwrap();
    assert!(mpk::grid::relative_l2(g.samples(), want.samples()) < 1e-8);
}

#[test]
fn hardy_and_wigner() {
    let dir = tempfile::tempdir().unwrap();
    let j = write(dir.path(), "J.json", r#"{"d": 1, "rows": [[0,1],[-1,0]]}"#);
    let cert = write(dir.path(), "c.json", r#"{"M": [[1.5]], "N": [[1.0]]}"#);
    let v = stdout_json(&mpk(&["hardy", "--input", &j, "--cert", &cert]));
    assert_eq!(v["status"], "Vanishing");
    let v = stdout_json(&mpk(&["wigner", "--input", &j, "--n", "64", "--L", "4"]));
    assert!(v["covariance"]["discrepancy"].as_f64().unwrap() < 1e-3);
    let out = dir.path().join("w");
    let o = mpk(&["wigner", "--n", "32", "--L", "4", "--format", "csv", "--output-dir", out.to_str().unwrap()]);
    stdout_json(&o);
    let csv = std::fs::read_to_string(out.join("wigner.csv")).unwrap();
    assert!(csv.starts_with("x1,xi1,w\n"));
    assert_eq!(csv.lines().count(), 1 + 32 * 32);
}

#[test]
fn evolve_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", r#"{"preset": "anisotropic_oscillator_2d"}"#);
    let cert = write(dir.path(), "c.json", r#"{"M": [[0,0],[0,1.3]], "N": [[0,0],[0,1.0]]}"#);
    let out = dir.path().join("e");
    let v = stdout_json(&mpk(&[
        "evolve", "--input", &h, "--cert", &cert, "--steps", "4", "--t-end", "3.141592653589793", "--n", "32", "--L", "4",
        "--output-dir", out.to_str().unwrap(),
    ]));
    assert_eq!(v["d"], 2);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,norm_a,norm_b,norm_c,norm_d,lambda1,lambda2,status");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].ends_with("DegenerateTime"));
    assert!(lines[3].ends_with("Vanishing"));
    assert!(out.join("state.mpgf").exists());
}

#[test]
fn sweeps() {
    let o = mpk(&["sweep", "--kind", "frft", "--steps", "0", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "param,criterion,max_eigenvalue,status\n");

    // ab = 2: vanishing exactly where sin²t1 > 1/2
    let o = mpk(&["sweep", "--kind", "oscillator", "--a", "2", "--b", "1", "--from", "0.05", "--to", "3.09", "--steps", "40", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let t: f64 = cols[0].parse().unwrap();
        let vanishing = cols[3] == "Vanishing";
        assert_eq!(vanishing, t.sin().powi(2) > 0.5, "{line}");
    }
    // FrFT, ab = 1: the boundary sits at θ = π/2
    let o = mpk(&["sweep", "--kind", "frft", "--from", "0.1", "--to", "3.041592653589793", "--steps", "31", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let statuses: Vec<String> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect();
    assert_eq!(statuses[15], "Extremal");
    assert!(statuses.iter().enumerate().all(|(i, s)| i == 15 || s == "Admissible"));
    let a = mpk(&["sweep", "--steps", "7"]);
    let b = mpk(&["sweep", "--steps", "7"]);
    assert_eq!(a.stdout, b.stdout);
}
