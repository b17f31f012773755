use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kl")).args(args).env("KL_LOG", "quiet").output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn zero_loads_are_certified() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "zero.cfg", "model = plate\ngrid.n = 9\n");
    let out = d.path().join("out");
    let o = kl(&["certify", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["verdict"], "certified-global");
    assert_eq!(r["certificate"]["gap"], 0.0);
    assert!(r.get("wall_time").is_none());
}

#[test]
fn compressive_membrane_is_refused() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.cfg",
        "grid.n = 9\nloads.P = sin-product\nloads.P.amplitude = 1e-4\ncertificate.membrane = compressive\ncertificate.amplitude = 1\n",
    );
    let out = d.path().join("out");
    let o = kl(&["certify", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["verdict"], "not-certified: A4 failed");
    assert!(r["certificate"]["lambda_min_a4"].as_f64().unwrap() < 0.0);
}

#[test]
fn config_errors_name_the_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "bad.cfg", "model = plate\nmaterial.nu = 0.7\n");
    let o = kl(&["solve", &cfg, "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nu out of range (-1, 0.5) at line 2"), "{err}");
    assert!(err.contains("cli.config"), "{err}");

    let cfg = write(d.path(), "bad2.cfg", "grid.nq = 9\n");
    let o = kl(&["solve", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key 'grid.nq' at line 1"));

    let o = kl(&["solve", d.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn module_errors_carry_codes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "g.cfg", "grid.nx = 4\n");
    let o = kl(&["solve", &cfg, "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid.invalid") && err.contains("stencil width"), "{err}");
}

#[test]
fn other_subcommands_and_dumps() {
    let d = tempfile::tempdir().unwrap();
    let plate = write(
        d.path(),
        "p.cfg",
        "grid.n = 9\nloads.P = const\nloads.P.amplitude = 1e-3\nloads.P1 = sin-product\nloads.P1.amplitude = 1e-3\n",
    );
    let out = d.path().join("t0");
    let o = kl(&["build-t0", &plate, "--dump-fields", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert!(r["t0"]["residual"].as_f64().unwrap() < 1e-8);
    let csv = std::fs::read_to_string(out.join("T0_11.csv")).unwrap();
    assert!(csv.starts_with("x,y,value\n"));
    assert_eq!(csv.lines().count(), 82);

    let out = d.path().join("probe");
    let o = kl(&["probe-coercivity", &plate, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out)["probe"]["values"].as_array().unwrap().len(), 4);

    let shell = write(d.path(), "s.cfg", "model = shell\nshell.surface = sphere\nshell.R = 2.0\ngrid.n = 17\n");
    let out = d.path().join("geo");
    let o = kl(&["geometry-check", &shell, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let g = &report(&out)["geometry"];
    assert!(g["gauss_max_deviation"].as_f64().unwrap() < 1e-10);
    assert_eq!(g["gauss_expected"], 0.25);
}

#[test]
fn shell_solve_and_batch_jobs() {
    let d = tempfile::tempdir().unwrap();
    let a = write(
        d.path(),
        "cyl.cfg",
        "model = shell\nshell.surface = cylinder\nshell.R = 2.0\ngrid.n = 9\nloads.P = sin-product\nloads.P.amplitude = 1e-4\n",
    );
    let b = write(d.path(), "flat.cfg", "grid.n = 9\nloads.P = gaussian\nloads.P.amplitude = 1e-4\n");
    let out = d.path().join("batch");
    let o = kl(&["certify", &a, &b, "--jobs", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["cyl", "flat"] {
        let r = report(&out.join(name));
        assert_eq!(r["verdict"], "certified-global", "{name}");
    }
}
