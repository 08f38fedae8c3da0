use std::path::Path;
use std::process::{Command, Output};

fn projlab(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_projlab"));
    c.args(args);
    match threads {
        Some(t) => c.env("PROJLAB_THREADS", t),
        None => c.env_remove("PROJLAB_THREADS"),
    };
    c.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_config(body: &str) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("out");
    let o = projlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    (o, dir)
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("json error on stderr")
}

#[test]
fn malformed_weights_exit_2() {
    let (o, _d) = run_config(r#"{"measure": {"example": 2, "weights": [0.9, 0.3]}, "command": "spectrum"}"#);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "validation");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn unknown_key_exit_2() {
    let (o, _d) = run_config(r#"{"measure": {"example": 2}, "command": "spectrum", "params": {"n": 10, "colour": "red"}}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn missing_config_exit_2() {
    let o = projlab(&["run", "--config", "/nonexistent/config.json"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn uncertified_gap_exit_3() {
    let (o, _d) = run_config(
        r#"{"measure": {"atoms": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]]}, "command": "regularity", "params": {"n": 20, "trials": 20}}"#,
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "gap_uncertified");
}

#[test]
fn spectrum_of_diag21_prints_log2() {
    let (o, d) = run_config(r#"{"measure": {"atoms": [[["2", "0"], ["0", "1"]]]}, "command": "spectrum", "params": {"n": 100, "trials": 8}, "seed": 5}"#);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let l: Vec<f64> = serde_json::from_value(v["lambda"].clone()).unwrap();
    assert!((l[0] - 2f64.ln()).abs() < 1e-12);
    assert!(l[1].abs() < 1e-12);
    assert_eq!(v["seed"], 5);
    let file = std::fs::read_to_string(d.path().join("out/spectrum.json")).unwrap();
    assert_eq!(serde_json::from_str::<serde_json::Value>(&file).unwrap(), v);
    assert!(d.path().join("out/spectrum.csv").exists());
}

#[test]
fn padic_structure_runs() {
    let (o, _d) = run_config(
        r#"{"measure": {"field": {"padic": 3}, "example": 2}, "command": "structure", "params": {"n": 200, "trials": 40}}"#,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["field"], "Q_3");
    assert!(v["l_mu"]["dim"].as_u64().is_some());
}

#[test]
fn stationary_run_writes_samples() {
    let (o, d) = run_config(r#"{"measure": {"example": 2}, "command": "stationary", "params": {"n": 60, "trials": 150, "n_grid": [10, 20, 40]}}"#);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let samples = std::fs::read_to_string(d.path().join("out/samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 151);
    assert!(samples.starts_with("i,x_0,x_1,x_2\n") || samples.starts_with("i,x_1,x_2,x_3\n"), "{}", &samples[..40]);
    let skew = std::fs::read_to_string(d.path().join("out/samples_skew.csv")).unwrap();
    assert!(skew.starts_with("step,t_1,xi_1,xi_2\n"));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["provenance"]["sampler"], "top-direction");
}

#[test]
fn limitset_run_writes_cloud() {
    let (o, d) = run_config(r#"{"measure": {"example": 2}, "command": "limitset", "params": {"n": 200, "trials": 40, "max_word_len": 4, "budget": 20}}"#);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let count = v["count"].as_u64().unwrap();
    assert!(count > 0);
    assert_eq!(v["in_u"], count);
    assert_eq!(v["off_l"], count);
    let cloud = std::fs::read_to_string(d.path().join("out/cloud.csv")).unwrap();
    assert_eq!(cloud.lines().count() as u64, count + 1);
    let cyl = std::fs::read_to_string(d.path().join("out/cloud_cylinder.csv")).unwrap();
    assert!(cyl.starts_with("sign,t,xi_0,xi_1,theta\n"));
    assert_eq!(cyl.lines().count() as u64, 2 * count + 1);
}

#[test]
fn reproduce_example3_reports_attractor_and_escape() {
    let (o, d) = run_config(r#"{"measure": {"example": 3}, "command": "reproduce", "params": {"trials": 200}}"#);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rec = v["attractors"].as_array().unwrap().iter().find(|a| a["atom"] == 3).expect("g3 attractor");
    let t0 = rec["t0"].as_f64().unwrap();
    assert!((t0 - 22.0 / (7.0 * 241f64.sqrt())).abs() <= 1e-9, "{t0}");
    let xi: Vec<f64> = serde_json::from_value(rec["xi0"].clone()).unwrap();
    assert!((xi[0] * 15.0 + xi[1] * 4.0).abs() < 1e-9 && xi[1] > 0.0);
    let c = &v["compactness"];
    assert!(c["noncompactness_witness"].is_null());
    assert_eq!(c["escape"][0]["map"], 1);
    assert_eq!(c["escape"][0]["escape"], true);
    assert_eq!(c["verdict"], "non-compact");
    for f in ["cylinder.csv", "s1.csv", "cylinder.svg", "s1.svg", "findings.json"] {
        assert!(d.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn reproduce_example2_has_bounded_cylinder() {
    let (o, d) = run_config(r#"{"measure": {"example": 2}, "command": "reproduce", "params": {"trials": 300}}"#);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = &v["compactness"];
    assert_eq!(c["verdict"], "compact");
    assert!(c["certificate"]["r_upper"].as_f64().unwrap() <= 0.80902);
    let bound = c["fiber_bound"]["bound"].as_f64().unwrap();
    let ext: Vec<f64> = serde_json::from_value(v["samples"]["t_extent"].clone()).unwrap();
    assert!(ext[0] >= -bound && ext[1] <= bound, "{ext:?} vs {bound}");
    let svg = std::fs::read_to_string(d.path().join("out/cylinder.svg")).unwrap();
    assert!(svg.contains(r#"class="axes""#));
    assert_eq!(svg.matches("<circle").count(), 600);
    assert_eq!(v["l_mu"]["dim"], 1);
    assert_eq!(v["u_mu"]["dim"], 3);
    assert_eq!(v["simple_top"], true);
}

#[test]
fn reproduce_example1_is_non_compact() {
    let (o, _d) = run_config(r#"{"measure": {"example": 1}, "command": "reproduce", "params": {"trials": 200}}"#);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = &v["compactness"];
    assert_eq!(c["verdict"], "non-compact");
    assert_eq!(c["certificate"]["pass"], false);
    assert_eq!(c["escape"][0]["escape"], true);
    assert_eq!(v["l_mu"]["basis"], serde_json::json!([["1", "0", "0"]]));
}

#[test]
fn reproduce_rejects_bad_example() {
    let o = projlab(&["reproduce", "--example", "4"], None);
    assert_eq!(o.status.code(), Some(2));
}
