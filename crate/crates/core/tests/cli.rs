use std::fs;
use std::path::Path;
use std::process::Command;

use mjds::cli::run;
use mjds::Error;

fn args<'a>(dir: &'a Path, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["mjds", "--out-dir", dir.to_str().unwrap()];
    v.extend_from_slice(rest);
    v
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_runs_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let err = run(args(tmp.path(), &["simulate", "--runs", "0"])).unwrap_err();
    assert!(matches!(&err, Error::Config { field, .. } if field == "runs"));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn simulate_writes_csvs_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    run(args(
        tmp.path(),
        &[
            "simulate",
            "--seed",
            "7",
            "--runs",
            "20",
            "--horizon",
            "10",
            "--trajectories",
            "2",
        ],
    ))
    .unwrap();
    let ens = fs::read_to_string(tmp.path().join("ensemble.csv")).unwrap();
    let mut lines = ens.lines();
    assert_eq!(
        lines.next(),
        Some("k,mean_sq,min_norm,max_norm,std,ci99_halfwidth")
    );
    assert_eq!(lines.count(), 11);
    let traj = fs::read_to_string(tmp.path().join("trajectory_1.csv")).unwrap();
    assert!(traj.starts_with("k,x_1,mode\n"));
    assert!(traj.trim_end().ends_with(','));

    let m = read_json(&tmp.path().join("simulate-manifest.json"));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["version"], mjds::cli::version_string());
    assert_eq!(m["resolved"]["runs"], 20);
    assert_eq!(m["resolved"]["initial_mode"], "uniform");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(
        &cfg,
        r#"{ "model": { "system": "sat", "gamma": 1.0, "delta": 2, "alphabet": [[0],[2]] },
             "tpm": [[0.9, 0.1], [0.5, 0.5]], "runs": 5, "horizon": 4, "seed": 1,
             "xi0": { "slots": [[0.5], [0.0], [1.0]] }, "initial_mode": { "fixed": 2 } }"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    run(args(
        &out,
        &["--config", cfg.to_str().unwrap(), "simulate", "--runs", "9"],
    ))
    .unwrap();
    let m = read_json(&out.join("simulate-manifest.json"));
    assert_eq!(m["resolved"]["runs"], 9);
    assert_eq!(m["resolved"]["horizon"], 4);
    assert_eq!(m["seed"], 1);
    assert_eq!(m["resolved"]["system"]["gamma"], 1.0);
    assert_eq!(m["resolved"]["system"]["tpm"][1][0], 0.5);
    assert_eq!(m["resolved"]["initial_mode"]["fixed"], 2);
}

#[test]
fn config_errors_name_the_position() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, "{\n  \"runs\": 5,\n  \"horizn\": 4\n}\n").unwrap();
    let err = run(args(
        tmp.path(),
        &["--config", cfg.to_str().unwrap(), "simulate"],
    ))
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("bad.json:3:"), "{msg}");
    assert!(msg.contains("horizn"), "{msg}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn missing_config_is_io() {
    let tmp = tempfile::tempdir().unwrap();
    let err = run(args(
        tmp.path(),
        &["--config", "/nonexistent/run.json", "region"],
    ))
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn region_grid_of_one() {
    let tmp = tempfile::tempdir().unwrap();
    run(args(
        tmp.path(),
        &["region", "--gamma", "1", "--c", "e", "--grid", "1"],
    ))
    .unwrap();
    let csv = fs::read_to_string(tmp.path().join("region.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "p,q,feasible,lambda_ratio,L_B,U_B,omega1,omega2,alpha3"
    );
    assert!(lines[1].starts_with("5.0000000000000000e-1,5.0000000000000000e-1,false,"));
    assert!(tmp.path().join("frontier.csv").exists());
}

#[test]
fn region_at_c_e_is_nonempty() {
    let tmp = tempfile::tempdir().unwrap();
    run(args(
        tmp.path(),
        &["region", "--gamma", "1", "--c", "e", "--grid", "200"],
    ))
    .unwrap();
    let csv = fs::read_to_string(tmp.path().join("region.csv")).unwrap();
    assert_eq!(csv.lines().count(), 40_001);
    assert!(csv.lines().any(|l| l.split(',').nth(2) == Some("true")));
}

#[test]
fn certify_above_cap_reports_no_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    run(args(
        tmp.path(),
        &["certify", "--gamma", "1", "--p", "0.99", "--q", "0.3"],
    ))
    .unwrap();
    let r = read_json(&tmp.path().join("certificate.json"));
    assert_eq!(r["verdict"], "no-certificate");
    assert!(r["caveat"].as_str().unwrap().contains("not necessary"));
    assert!(r["chain"].is_null());
}

#[test]
fn certify_with_ratio_outside_interval() {
    let tmp = tempfile::tempdir().unwrap();
    run(args(
        tmp.path(),
        &[
            "certify",
            "--gamma",
            "1",
            "--p",
            "0.97",
            "--q",
            "0.05",
            "--lambda-ratio",
            "100",
        ],
    ))
    .unwrap();
    let r = read_json(&tmp.path().join("certificate.json"));
    assert_eq!(r["verdict"], "no-certificate");
    let w1 = r["omegas"]["omega1"].as_f64().unwrap();
    let w2 = r["omegas"]["omega2"].as_f64().unwrap();
    assert!(w1.min(w2) <= 0.0);
}

#[test]
fn certify_feasible_point_emits_chain() {
    let tmp = tempfile::tempdir().unwrap();
    run(args(
        tmp.path(),
        &["certify", "--gamma", "1", "--p", "0.97", "--q", "0.05"],
    ))
    .unwrap();
    let r = read_json(&tmp.path().join("certificate.json"));
    assert_eq!(r["verdict"], "certified");
    assert_eq!(r["alpha3_provenance"], "analytic");
    let zeta = r["chain"]["certificate"]["zeta"].as_f64().unwrap();
    assert!(zeta > 0.0 && zeta < 1.0);
    for key in ["alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta3"] {
        assert!(r["chain"][key].as_f64().unwrap() > 0.0, "{key}");
    }
}

#[test]
fn fit_from_input_csv_and_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let cert = tmp.path().join("cert");
    let fit = tmp.path().join("fit");
    run(args(&sim, &["simulate", "--seed", "3"])).unwrap();
    run(args(&cert, &["certify", "--c", "5.2"])).unwrap();
    let input = sim.join("ensemble.csv");
    let cert_file = cert.join("certificate.json");
    run(args(
        &fit,
        &[
            "fit",
            "--input",
            input.to_str().unwrap(),
            "--certificate",
            cert_file.to_str().unwrap(),
        ],
    ))
    .unwrap();
    let f = read_json(&fit.join("fit.json"));
    let keys: Vec<_> = f.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys.len(), 4);
    assert!(f["zeta_hat"].as_f64().unwrap() < 1.0);
    assert_eq!(f["window"][0], 12);
    assert_eq!(f["window"][1], 60);
    let e = read_json(&fit.join("emss_check.json"));
    assert_eq!(e["passed"], true);
}

#[test]
fn fit_rejects_malformed_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("e.csv");
    fs::write(
        &input,
        "k,mean_sq,min_norm,max_norm,std,ci99_halfwidth\n0,1,1,1,0,0\n2,1,1,1,0,0\n",
    )
    .unwrap();
    let err = run(args(
        tmp.path(),
        &["fit", "--input", input.to_str().unwrap()],
    ))
    .unwrap_err();
    assert!(err.to_string().contains("e.csv:3"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_mjds");
    let status = |a: &[&str]| {
        Command::new(bin)
            .args(a)
            .env_remove("MJDS_THREADS")
            .output()
            .unwrap()
            .status
            .code()
    };
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(status(&["--out-dir", dir, "certify"]), Some(0));
    assert_eq!(
        status(&["--out-dir", dir, "simulate", "--runs", "0"]),
        Some(1)
    );
    assert_eq!(
        status(&["--out-dir", dir, "simulate", "--gamma", "2"]),
        Some(1)
    );
    assert_eq!(status(&["frobnicate"]), Some(1));
    assert_eq!(status(&["--help"]), Some(0));

    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let nested = blocker.join("out");
    assert_eq!(
        status(&[
            "--out-dir",
            nested.to_str().unwrap(),
            "region",
            "--grid",
            "2"
        ]),
        Some(3)
    );
}

#[test]
fn threads_env_fallback() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_mjds");
    let out = Command::new(bin)
        .args([
            "--out-dir",
            tmp.path().to_str().unwrap(),
            "region",
            "--grid",
            "2",
        ])
        .env("MJDS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MJDS_THREADS"));
}
