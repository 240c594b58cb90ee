use std::path::Path;
use std::process::{Command, Output};

fn surfperc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfperc"))
        .args(args)
        .env_remove("SURFPERC_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).expect("column present");
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn analytic_tables() {
    let y = stdout(&surfperc(&["analytic", "yfail", "--d", "2", "--py", "0.5"]));
    assert_eq!(column(&y, "P_fail"), vec![0.21875]);
    let mf = stdout(&surfperc(&["analytic", "threshold", "--ps", "0.4", "--mode", "meanfield"]));
    assert!((column(&mf, "p_x_c")[0] - 1.0 / 6.0).abs() < 1e-12);
    let an = stdout(&surfperc(&["analytic", "threshold", "--ps", "1", "--mode", "ansatz"]));
    assert!((column(&an, "p_x_c")[0] - 0.5).abs() < 1e-12);
    let lt = stdout(&surfperc(&["analytic", "lifetime", "--d", "3:7:2", "--ps", "0", "--pm", "0.95"]));
    assert_eq!(column(&lt, "tau").len(), 3);
    let fr = stdout(&surfperc(&["analytic", "fraction", "--px", "0.1", "--ps", "0.9", "--steps", "5"]));
    assert_eq!(column(&fr, "F")[0], 0.0);
}

#[test]
fn trivial_simulations() {
    let s = stdout(&surfperc(&[
        "single-round", "--d", "3", "--px", "0", "--py", "0", "--pz", "0", "--trials", "100",
    ]));
    assert_eq!(column(&s, "R"), vec![1.0]);
    let d = stdout(&surfperc(&["dynamics", "--d", "5", "--px", "1", "--ps", "0", "--trials", "10"]));
    assert_eq!(column(&d, "tau"), vec![1.0]);
    assert!(d.starts_with("d,p_x,p_y,p_z,p_s,tau,stderr,censored_frac"));
}

#[test]
fn usage_errors_exit_2() {
    let o = surfperc(&["single-round", "--d", "3", "--px", "0.6", "--pz", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p_x + p_y + p_z"));
    assert_eq!(surfperc(&["single-round", "--bogus"]).status.code(), Some(2));
    assert_eq!(surfperc(&["single-round", "--px", "0.1"]).status.code(), Some(2));
    assert_eq!(surfperc(&["--threads", "0", "experiment", "--list"]).status.code(), Some(2));
    assert_eq!(surfperc(&["experiment", "nope"]).status.code(), Some(2));
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        vec!["single-round"],
        vec!["dynamics"],
        vec!["bisect"],
        vec!["experiment"],
        vec!["layout"],
        vec!["analyze", "fit"],
        vec!["analyze", "crossing"],
        vec!["analyze", "collapse"],
        vec!["analyze", "delta"],
        vec!["analytic", "yfail"],
        vec!["analytic", "threshold"],
        vec!["analytic", "lifetime"],
        vec!["analytic", "fraction"],
    ] {
        let mut args = sub.clone();
        args.push("--help");
        let text = stdout(&surfperc(&args));
        assert!(text.contains("Usage:"), "{sub:?}");
    }
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let out = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let out_s = out.to_str().unwrap().to_string();
    full.extend(["--out", &out_s]);
    stdout(&surfperc(&full));
    std::fs::read_to_string(&out).unwrap()
}

#[test]
fn seeded_runs_are_byte_identical_and_have_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "single-round", "--d", "3,5", "--sweep", "pz=0.3:0.7:0.1", "--trials", "300", "--seed", "7",
    ];
    let a = run_to(dir.path(), "a.csv", &args);
    let mut threaded = vec!["--threads", "3"];
    threaded.extend(args);
    let b = run_to(dir.path(), "b.csv", &threaded);
    assert_eq!(a, b);
    assert!(!a.contains('\r'));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["layout_sha256"].as_object().unwrap().len(), 2);
    assert_eq!(manifest["config"]["trials"], 300);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"d": "3", "pz": 0.5, "trials": 50, "seed": 2}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = stdout(&surfperc(&["--config", c, "single-round"]));
    assert_eq!(column(&from_file, "p_z"), vec![0.5]);
    let overridden = stdout(&surfperc(&["--config", c, "single-round", "--pz", "0.25"]));
    assert_eq!(column(&overridden, "p_z"), vec![0.25]);
    std::fs::write(&cfg, r#"{"dd": 3}"#).unwrap();
    assert_eq!(surfperc(&["--config", c, "single-round"]).status.code(), Some(2));
}

#[test]
fn written_tables_feed_the_analysis() {
    let dir = tempfile::tempdir().unwrap();
    run_to(dir.path(), "z.csv", &[
        "single-round", "--d", "3,5,7", "--sweep", "pz=0.3:0.7:0.05", "--trials", "2000", "--seed", "1",
    ]);
    let z = dir.path().join("z.csv");
    let crossing: serde_json::Value =
        serde_json::from_str(&stdout(&surfperc(&["analyze", "crossing", z.to_str().unwrap()]))).unwrap();
    assert_eq!(crossing["x"], "p_z");
    assert!((crossing["crossing"].as_f64().unwrap() - 0.5).abs() < 0.05);
    let collapse: serde_json::Value = serde_json::from_str(&stdout(&surfperc(&[
        "analyze", "collapse", "--nu", "1.3333", "--beta", "0.13889", z.to_str().unwrap(),
    ])))
    .unwrap();
    assert!(collapse["score"].as_f64().unwrap() >= 0.0);

    run_to(dir.path(), "tau.csv", &[
        "dynamics", "--d", "3:9:2", "--unbiased", "0.95", "--ps", "0,1", "--trials", "300",
    ]);
    let fit: serde_json::Value = serde_json::from_str(&stdout(&surfperc(&[
        "analyze", "fit", "--models", "log,exp", dir.path().join("tau.csv").to_str().unwrap(),
    ])))
    .unwrap();
    assert_eq!(fit["groups"].as_array().unwrap().len(), 2);

    run_to(dir.path(), "bis.csv", &["bisect", "--d", "4:10:2", "--samples", "150"]);
    let delta: serde_json::Value = serde_json::from_str(&stdout(&surfperc(&[
        "analyze", "delta", dir.path().join("bis.csv").to_str().unwrap(),
    ])))
    .unwrap();
    assert!(delta["exponent"].as_f64().unwrap() > 0.0);

    let o = surfperc(&["analyze", "fit", z.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau"));
}

#[test]
fn presets_run_with_overrides() {
    let list = stdout(&surfperc(&["experiment", "--list"]));
    assert!(list.lines().any(|l| l == "appB3"));
    let t = stdout(&surfperc(&["dynamics", "--preset", "appB3", "--d", "3", "--trials", "20"]));
    assert!(t.starts_with("d,p_x,p_y,p_z,p_s,tau"));
    let l = stdout(&surfperc(&["layout", "--d", "2"]));
    let v: serde_json::Value = serde_json::from_str(&l).unwrap();
    assert_eq!(v["n_qubits"], 5);
}
