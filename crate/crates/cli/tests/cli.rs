use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(cmd: &str, config: &Path, out: &Path, envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dualwave"));
    c.args([cmd, "--config"]).arg(config).arg("--out").arg(out);
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("failed to launch dualwave")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn report(bundle: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(bundle.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn pv_writes_history_and_reruns_from_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pv.json", "{}");
    let out = dir.path().join("out");
    let o = run("pv", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bundle = out.join("pv");
    let rep = report(&bundle);
    assert_eq!(rep["converged"], true);
    assert!(rep["details"]["c_history"].as_array().unwrap().len() <= 60);
    let history = fs::read_to_string(bundle.join("history.csv")).unwrap();
    assert!(history.starts_with("iteration,c_tilde,residual"));
    let profile = fs::read_to_string(bundle.join("profile.csv")).unwrap();
    assert!(profile.starts_with("x,f,w,u_inf"));
    assert_eq!(profile.lines().count(), 1001);

    let again = dir.path().join("again");
    let o = run("pv", &bundle.join("config.json"), &again, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&again.join("pv"))["status"], rep["status"]);
}

#[test]
fn nie_profile_evolves_as_a_traveling_wave() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // h = 1/160 keeps the O(h^2) quadrature error of the profile below 1e-4;
    // the gradient carries a factor h, so the tolerance is tightened with it
    let cfg = write_config(
        dir.path(),
        "nie.json",
        r#"{ "grid": { "half_length": 10.0, "points": 3200 }, "u_inf": 0.0, "solver": { "grad_tol": 1e-11 }, "spectrum": false }"#,
    );
    let o = run("solve-nie", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bundle = out.join("nie_u+0.000000");
    let rep = report(&bundle);
    assert!(rep["verification"]["nie_residual_inf"].as_f64().unwrap() < 1e-7);
    let dual = fs::read_to_string(bundle.join("dual.csv")).unwrap();
    assert!(dual.starts_with("x,nu"));

    let profile = bundle.join("profile.csv");
    let cfg = write_config(dir.path(), "evolve.json", &format!(r#"{{ "profile": {:?} }}"#, profile));
    let o = run("evolve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let err = report(&out.join("evolve"))["details"]["translation_error"].as_f64().unwrap();
    assert!(err < 1e-4, "translation error {err}");
}

#[test]
fn spectrum_of_stored_profile_has_translation_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "nie.json",
        r#"{ "grid": { "half_length": 10.0, "points": 200 }, "u_inf": -0.2, "spectrum": false }"#,
    );
    assert_eq!(run("solve-nie", &cfg, &out, &[]).status.code(), Some(0));
    let profile = out.join("nie_u-0.200000/profile.csv");
    let cfg = write_config(dir.path(), "spec.json", &format!(r#"{{ "profile": {:?} }}"#, profile));
    let o = run("spectrum", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = report(&out.join("spectrum"));
    assert!(rep["spectral"]["kappa1"].as_f64().unwrap().abs() < 1e-8);
    let kappa = fs::read_to_string(out.join("spectrum/kappa.csv")).unwrap();
    assert_eq!(kappa.lines().count(), 201);
}

#[test]
fn sweep_writes_one_bundle_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{ "grid": { "half_length": 10.0, "points": 200 }, "u_end": [-0.05, 0.05] }"#,
    );
    let o = run("sweep", &cfg, &out, &[("DUALWAVE_THREADS", "2")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["nie_u-0.050000", "nie_u-0.025000", "nie_u+0.000000", "nie_u+0.025000", "nie_u+0.050000"] {
        assert!(out.join(name).join("profile.csv").exists(), "{name} missing");
    }
    assert_eq!(report(&out.join("sweep_summary"))["converged"], true);
}

#[test]
fn dde_bundle_and_refinement_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "verify.json", r#"{ "meshes": [200, 400] }"#);
    let o = run("verify", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = report(&out.join("verify"))["verification"]["d_of_m"].as_f64().unwrap();
    assert!((0.5..=2.1).contains(&d), "D(200) = {d}");
    let rep = report(&out.join("dde_m400"));
    assert_eq!(rep["converged"], true);
    assert!(rep["verification"]["err_max_interior"].as_f64().unwrap() < 1e-1);
    let dx = rep["details"]["dx"].as_f64().unwrap();
    let profile = fs::read_to_string(out.join("dde_m400/profile.csv")).unwrap();
    assert_eq!(profile.lines().count(), (16.0 / dx).round() as usize + 2);
}

#[test]
fn nonconvergence_exits_with_two_and_keeps_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "dde.json",
        r#"{ "elements": 200, "base": { "family": "gaussian", "gamma": -1.9 }, "solver": { "max_newton": 1 } }"#,
    );
    let o = run("solve-dde", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let rep = report(&out.join("dde_m200"));
    assert_eq!(rep["converged"], false);
    assert_eq!(rep["status"], "max_newton");
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = write_config(
        dir.path(),
        "file.json",
        r#"{ "elements": 200, "base": { "family": "file", "path": "/nonexistent/base.csv" } }"#,
    );
    assert_eq!(run("solve-dde", &missing, &out, &[]).status.code(), Some(1));

    let grid = write_config(dir.path(), "grid.json", r#"{ "grid": { "half_length": 25.0, "points": 999 } }"#);
    let o = run("solve-nie", &grid, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not an integer"), "{}", stderr(&o));

    let unknown = write_config(dir.path(), "unknown.json", r#"{ "u_infinity": 1.0 }"#);
    assert_eq!(run("solve-nie", &unknown, &out, &[]).status.code(), Some(1));

    let sweep = write_config(dir.path(), "sweep.json", "{}");
    assert_eq!(run("sweep", &sweep, &out, &[("DUALWAVE_THREADS", "zero")]).status.code(), Some(1));

    let csv = dir.path().join("bad.csv");
    let cfg = write_config(dir.path(), "evolve.json", &format!(r#"{{ "profile": {:?} }}"#, csv));
    fs::write(&csv, "x,f,w,u_inf\n0,0,0,0\n1,zero,0,0\n").unwrap();
    let o = run("evolve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("row 2") && msg.contains("column 'f'"), "{msg}");
}
