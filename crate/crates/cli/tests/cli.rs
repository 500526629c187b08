use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn smirnov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smirnov"))
        .args(args)
        .env_remove("SMIRNOV_CONFIG")
        .output()
        .expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn error_code(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("error JSON on stderr");
    v["error"]["code"].as_str().unwrap().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const Z1: &str = r#"{"d":2,"N":1,"coeffs":[{"alpha":[1,0],"re":1.0,"im":0.0}]}"#;

#[test]
fn phi_c_writes_series_with_all_coefficients() {
    let out = smirnov(&["phi-c", "--c", "1", "--degree", "100"]);
    assert!(out.status.success());
    let v = json_out(&out);
    assert_eq!(v["d"], 1);
    assert_eq!(v["N"], 100);
    assert_eq!(v["coeffs"].as_array().unwrap().len(), 101);
    let s = smirnov_core::TruncatedSeries::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(s.degree(), 100);
}

#[test]
fn norms_of_a_coordinate() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", Z1);
    let v = json_out(&smirnov(&["norms", "--f", &f]));
    assert_eq!(v["h2d"], 1.0);
    assert!((v["sup_est"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn pair_reports_value_and_tail() {
    let dir = TempDir::new().unwrap();
    // stored through degree 4, so the decay verdict is the degenerate accept
    let f = write(&dir, "f.json", r#"{"d":2,"N":4,"coeffs":[{"alpha":[1,0],"re":1.0,"im":0.0}]}"#);
    let csv = dir.path().join("sums.csv");
    let out = smirnov(&["pair", "--f", &f, "--h", &f, "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json_out(&out);
    assert_eq!(v["value_re"], 1.0);
    assert_eq!(v["value_im"], 0.0);
    assert_eq!(v["tail_bound"], 0.0);
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("degree,abs_partial_sum\n0,"));
}

#[test]
fn schema_and_dimension_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"d":2,"N":1,"coeffs":[{"alpha":[1],"re":1,"im":0}]}"#);
    let out = smirnov(&["norms", "--f", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_code(&out), "schema");

    let garbage = write(&dir, "g.json", "{not json");
    assert_eq!(error_code(&smirnov(&["norms", "--f", &garbage])), "schema");

    let f = write(&dir, "f.json", Z1);
    let g = write(&dir, "g1.json", r#"{"d":1,"N":1,"coeffs":[{"alpha":[1],"re":1,"im":0}]}"#);
    let out = smirnov(&["pair", "--f", &f, "--h", &g]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_code(&out), "dimension_mismatch");

    let out = smirnov(&["phi-c", "--c", "-1", "--degree", "10"]);
    assert_eq!(error_code(&out), "parameter");
    assert_eq!(smirnov(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn decay_csv_export() {
    let dir = TempDir::new().unwrap();
    // a decaying law: e^{-√n}
    let coeffs: Vec<String> = (0..=200)
        .map(|n| format!(r#"{{"alpha":[{n}],"re":{:e},"im":0}}"#, (-(n as f64).sqrt()).exp()))
        .collect();
    let h = write(&dir, "h.json", &format!(r#"{{"d":1,"N":200,"coeffs":[{}]}}"#, coeffs.join(",")));
    let csv = dir.path().join("levels.csv");
    let out = smirnov(&["decay", "--h", &h, "--forms", "coeff,h2", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_out(&out);
    assert_eq!(v["verdict"], "accept");
    assert!((v["fitted_c"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("degree,coefficient,h2d_norm"));
    assert_eq!(text.lines().count(), 202);
}

#[test]
fn range_probe_and_section_csv() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", r#"{"d":1,"N":1,"coeffs":[{"alpha":[0],"re":1,"im":0},{"alpha":[1],"re":-1,"im":0}]}"#);
    let coeffs: Vec<String> = (0..=16).map(|k| format!(r#"{{"alpha":[{k}],"re":{:e},"im":0}}"#, 0.5f64.powi(k))).collect();
    let h = write(&dir, "h.json", &format!(r#"{{"d":1,"N":16,"coeffs":[{}]}}"#, coeffs.join(",")));
    let csv = dir.path().join("rows.csv");
    let sec = dir.path().join("section.csv");
    let out = smirnov(&[
        "range-probe", "--m", &m, "--h", &h, "--degrees", "4,8,16",
        "--csv", csv.to_str().unwrap(), "--section-csv", sec.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_out(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["verdict"], "bounded");
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 4);
    let section = std::fs::read_to_string(sec).unwrap();
    // 17 diagonal ones and 16 subdiagonal minus ones
    assert_eq!(section.lines().count(), 1 + 17 + 16);
}

#[test]
fn counterexample_outputs() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("kd.csv");
    let series = dir.path().join("F.json");
    let out = smirnov(&[
        "counterexample", "--zeros", "10", "--degree", "60", "--dim", "3",
        "--csv", csv.to_str().unwrap(), "--series-out", series.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_out(&out);
    assert_eq!(v["zero_count"], 10);
    assert!(v["sup_disk_max"].as_f64().unwrap() <= 2.0);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 62);
    let f = read_json(&series);
    assert_eq!(f["d"], 3);
    assert_eq!(f["N"], 120);
    assert!(f["coeffs"].as_array().unwrap().iter().all(|c| {
        let a = c["alpha"].as_array().unwrap();
        a[0] == a[1] && a[2] == 0
    }));
}

#[test]
fn metric_with_and_without_g() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", Z1);
    let v = json_out(&smirnov(&["metric", "--f", &f, "--frechet-c", "1"]));
    assert!(v["value"].as_f64().unwrap() > 0.0);
    assert_eq!(v["is_lower_bound"], true);
    assert!((v["frechet_seminorm"].as_f64().unwrap() - (-0.5f64).exp()).abs() < 1e-15);
    let v = json_out(&smirnov(&["metric", "--f", &f, "--g", &f]));
    assert_eq!(v["rho"], 0.0);
}

#[test]
fn suite_filter_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let out = smirnov(&["suite", "--filter", "decay", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&report);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["family"], "decay");
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS"));

    let out = smirnov(&["suite", "--filter", "omega", "--tolerance-scale", "0", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = read_json(&report);
    assert_eq!(v["all_passed"], false);
    assert!(v["checks"][0]["assertions"].as_array().unwrap().iter().any(|a| a["margin"].as_f64().unwrap() < 0.0));

    assert_eq!(smirnov(&["suite", "--filter", "nothing"]).status.code(), Some(2));
}

#[test]
fn suite_reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = smirnov(&["suite", "--filter", "growth,frechet", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn config_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"seed": 11, "filter": ["von_neumann"]}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_smirnov"))
        .args(["suite"])
        .env("SMIRNOV_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 11);
    assert_eq!(v["checks"][0]["criterion"], 4);

    let bad = write(&dir, "bad.json", r#"{"seed": 1, "unknown": true}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_smirnov"))
        .args(["suite"])
        .env("SMIRNOV_CONFIG", &bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_code(&out), "schema");
}

#[test]
fn outer_from_modulus_file() {
    let dir = TempDir::new().unwrap();
    // W = |2 - e^{iθ}| is the modulus of the outer function 2 - z
    let values: Vec<String> = (0..256)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / 256.0;
            format!("{:e}", ((2.0 - t.cos()).powi(2) + t.sin().powi(2)).sqrt())
        })
        .collect();
    let w = write(&dir, "w.json", &format!(r#"{{"grid":256,"values":[{}]}}"#, values.join(",")));
    let out = smirnov(&["outer", "--modulus", &w, "--degree", "8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = smirnov_core::TruncatedSeries::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let c = s.univariate_coeffs();
    assert!((c[0].re - 2.0).abs() < 1e-12 && (c[1].re + 1.0).abs() < 1e-12 && c[5].norm() < 1e-12);

    let bad = write(&dir, "bad.json", r#"{"grid":4,"values":[1,1,0,1]}"#);
    let out = smirnov(&["outer", "--modulus", &bad, "--degree", "8"]);
    assert_eq!(error_code(&out), "modulus");
    let short = write(&dir, "short.json", r#"{"grid":8,"values":[1,1]}"#);
    assert_eq!(error_code(&smirnov(&["outer", "--modulus", &short, "--degree", "8"])), "schema");
}
