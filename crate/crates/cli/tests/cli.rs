use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn fbphase(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fbphase"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = fbphase(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    out
}

/// Header plus data rows, metadata stripped.
fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let rows = body(csv);
    let idx = rows[0].split(',').position(|h| h == name).unwrap();
    rows[1..].iter().map(|r| r.split(',').nth(idx).unwrap().to_string()).collect()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn default_trajectory_row_count_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    ok(&["trajectory", "--out", out.to_str().unwrap()]);
    let text = read(&out);
    // round(2 pi / 0.005 / 0.01) = 125664 steps, every 10th kept
    assert_eq!(body(&text).len() - 1, 125_664 / 10 + 1);
    assert!(text.contains("# tau = 1256.64\n"));
    assert!(text.contains("# dt = 0.01\n"));
    assert!(text.contains("# steps = 125664\n"));
    assert!(text.contains(&format!("# version = {}\n", env!("CARGO_PKG_VERSION"))));
    assert_eq!(
        body(&text)[0],
        "t,px,py,pz,purity,e_plus,alpha,phi_unwrapped,connection_partial"
    );
}

#[test]
fn unitary_trajectory_keeps_unit_purity() {
    let csv = ok(&["trajectory", "--gamma", "0", "--omega", "0.05", "--thin", "7"]);
    let purity = column(&csv, "purity");
    assert_eq!(purity.len(), 12_566 / 7 + 1);
    for p in purity {
        assert!((p.parse::<f64>().unwrap() - 1.0).abs() <= 1e-8, "{p}");
    }
}

#[test]
fn trajectory_json_mirrors_csv_fields() {
    let v = json(&ok(&["trajectory", "--omega", "0.5", "--format", "json", "--thin", "100"]));
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 1257 / 100 + 1);
    for key in ["t", "px", "py", "pz", "purity", "e_plus", "alpha", "phi_unwrapped", "connection_partial"] {
        assert!(samples[3].get(key).is_some(), "{key}");
    }
    assert_eq!(v["metadata"]["steps"], 1257);
}

#[test]
fn berry_limit_phase_is_half_turn() {
    let v = json(&ok(&["phase", "--gamma", "0", "--format", "json"]));
    let pi_units = v["result"]["gamma_g_pi"].as_f64().unwrap();
    assert!((pi_units.abs() - 1.0).abs() <= 0.02, "{pi_units}");
    assert!(v["result"]["error"].is_null());
}

#[test]
fn pinned_pole_has_zero_phase() {
    let v = json(&ok(&["phase", "--theta-pi", "0", "--a-pi", "0", "--format", "json"]));
    assert_eq!(v["result"]["gamma_g_rad"].as_f64(), Some(0.0));
    assert_eq!(v["metadata"]["config"]["cap_theta_pi"].as_f64(), Some(0.0));
}

#[test]
fn zero_and_pi_feedback_give_identical_records() {
    let a = json(&ok(&["phase", "--a-pi", "0", "--omega", "0.05", "--format", "json"]));
    let b = json(&ok(&["phase", "--a-pi", "1", "--omega", "0.05", "--format", "json"]));
    assert_eq!(a["result"], b["result"]);
    assert_ne!(a["metadata"], b["metadata"]);
}

#[test]
fn degenerate_phase_exits_3_with_error_field() {
    let (code, out, err) = fbphase(&[
        "phase", "--gamma", "3", "--a-pi", "0.5", "--cap-theta-pi", "0", "--omega", "0.05", "--format", "json",
    ]);
    assert_eq!(code, 3, "{err}");
    let v = json(&out);
    assert_eq!(v["result"]["error"]["kind"], "degenerate");
    assert!(v["result"]["gamma_g_rad"].is_null());
    assert_eq!(v["result"]["degenerate"], true);
}

#[test]
fn sweep_grid_is_row_major_and_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "sweep", "--axis1", "a:0:1:17", "--axis2", "beta:0:2:17", "--omega", "0.2", "--workers", workers,
            "--out", out.to_str().unwrap(),
        ]);
        read(&out)
    };
    let one = run("1", "one.csv");
    let three = run("3", "three.csv");
    assert_eq!(body(&one), body(&three));
    assert_ne!(one, three, "metadata records the worker count");
    let rows = body(&one);
    assert_eq!(rows.len() - 1, 289);
    assert_eq!(rows[0], "axis1_value,axis2_value,gamma_g_rad,gamma_g_pi,degenerate,status");
    let first: Vec<f64> = column(&one, "axis1_value").iter().map(|s| s.parse().unwrap()).collect();
    assert!(first.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(column(&one, "axis2_value")[16], format!("{:?}", std::f64::consts::TAU));
}

#[test]
fn strong_damping_preset_has_no_nan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    ok(&["sweep", "--preset", "fig1:3", "--resolution", "9", "--out", out.to_str().unwrap(), "--plot"]);
    let text = read(&out);
    assert!(text.contains("# config.gamma = 3.0\n"));
    assert!(text.contains("# extra.axis1.name = A\n"));
    let g = column(&text, "gamma_g_rad");
    let flags = column(&text, "degenerate");
    assert_eq!(g.len(), 81);
    for (g, flag) in g.iter().zip(&flags) {
        if flag == "false" {
            assert!(g.parse::<f64>().unwrap().is_finite());
        }
    }
    let png = out.with_extension("png");
    assert!(std::fs::metadata(&png).unwrap().len() > 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test run\ngamma = 0.2\nomega = 0.5 # fast\nbeta_pi = 0.3\nformat = json\n").unwrap();
    let v = json(&ok(&["phase", "--config", cfg.to_str().unwrap(), "--gamma", "0.1"]));
    let c = &v["metadata"]["config"];
    assert_eq!(c["gamma"], 0.1);
    assert_eq!(c["omega"], 0.5);
    assert!((c["beta_pi"].as_f64().unwrap() - 0.3).abs() <= 1e-15);
    assert_eq!(v["metadata"]["steps"], 1257);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "gama = 0.2\n").unwrap();
    for args in [
        vec!["phase", "--config", cfg.to_str().unwrap()],
        vec!["phase", "--gamma", "-1"],
        vec!["phase", "--dt", "0"],
        vec!["phase", "--theta-pi", "0.5", "--theta-rad", "1"],
        vec!["phase", "--format", "xml"],
        vec!["sweep", "--preset", "fig3:1"],
        vec!["sweep", "--axis1", "a:0:1:1", "--axis2", "beta:0:2:5"],
        vec!["sweep", "--axis1", "a:0:1:5", "--axis2", "a:0:2:5"],
        vec!["trajectory", "--thin", "0"],
        vec!["frobnicate"],
    ] {
        let (code, _, err) = fbphase(&args);
        assert_eq!(code, 2, "{args:?}: {err}");
    }
}

#[test]
fn verify_passes_and_reports_drift_check() {
    let out = ok(&["verify", "--trajectory-draws", "3", "--pure-phase-draws", "1"]);
    assert!(out.contains("PASS drift vs superoperator"));
    assert!(out.contains("(100 samples)"));
    assert!(!out.contains("FAIL"));
}
