use std::path::Path;
use std::process::{Command, Output};

use loschmidt::analysis::qsl_time;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loschmidt")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn dfe_sweep_layout() {
    let rows = csv_rows(&stdout(&["dfe", "--n", "10", "--boundary", "pbc", "--tau", "0:1:200"]));
    assert_eq!(rows[0], ["tau", "t", "log_echo", "f", "phase"]);
    assert_eq!(rows.len(), 202);
    assert_eq!(rows[1][0], "0.0");
    assert_eq!(rows[1][3], "0.0");
    assert_eq!(rows[201][0], "1.0");
    for r in &rows[1..] {
        assert!(r[3] == "inf" || r[3].parse::<f64>().unwrap() >= -1e-12, "{r:?}");
    }
}

#[test]
fn odd_chain_zero_serializes_as_inf() {
    let tau = format!("{:?}", qsl_time(3).unwrap().tau_qsl);
    let rows = csv_rows(&stdout(&["dfe", "--n", "3", "--tau", &tau]));
    assert_eq!(rows[1][3], "inf");
    let v: Value = serde_json::from_str(&stdout(&["dfe", "--n", "3", "--tau", &tau, "--format", "json"])).unwrap();
    assert_eq!(v["data"][0]["f"]["nonfinite"], "inf");
}

#[test]
fn critical_record() {
    let v: Value = serde_json::from_str(&stdout(&["critical"])).unwrap();
    let d = &v["data"][0];
    assert!((d["tau_cr"].as_f64().unwrap() - 0.33137171).abs() < 1e-6);
    assert!((d["ell_star"].as_f64().unwrap() - 1.1997).abs() < 1e-3);
    assert!((d["z0_imag"].as_f64().unwrap() - 1.509).abs() < 1e-3);
    assert_eq!(v["meta"]["command"], "critical");
    assert_eq!(v["data"].as_array().unwrap().len(), 1);
}

#[test]
fn qsl_rows_above_critical() {
    let rows = csv_rows(&stdout(&["qsl", "--kmax", "8"]));
    assert_eq!(rows[0], ["n", "tau_qsl", "t_zero"]);
    assert_eq!(rows.len(), 9);
    for (k, r) in rows[1..].iter().enumerate() {
        assert_eq!(r[0], (2 * k + 3).to_string());
        assert!(r[1].parse::<f64>().unwrap() > 0.3313);
    }
}

#[test]
fn other_commands_produce_documented_headers() {
    let cases: [(&[&str], &str); 6] = [
        (&["amplitude", "--n", "4", "--tau", "0:0.3:3"], "tau,t,log_abs,phase,f,zero"),
        (&["amplitude", "--n", "4", "--time", "imaginary", "--gamma", "0.2"], "gamma,beta,log_abs,phase,f,zero"),
        (&["contour", "--tau", "0.1", "--points", "8", "--boundary", "abc"], "tau,index,angle,re,im,residual"),
        (&["errors", "--n", "4", "--ell", "5/2", "--tau", "0.2"], "tau,ell,error_e"),
        (&["impurity", "--n", "6", "--pmax", "1"], "tau,t,p,re,im,planar_re,planar_im"),
        (&["thermal", "--n", "8", "--gamma", "0.3"], "gamma,beta,free_energy,derivative,planar_derivative"),
    ];
    for (args, header) in cases {
        let out = stdout(args);
        assert_eq!(out.lines().next().unwrap(), header, "{args:?}");
        assert!(out.lines().count() > 1);
    }
}

#[test]
fn pinched_contour_is_noted_not_fatal() {
    let out = run(&["contour", "--tau", "0.5"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "tau,index,angle,re,im,residual\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("pinched"));
}

#[test]
fn output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["dfe", "--n", "7", "--tau", "0:0.6:40"],
        &["dfe", "--n", "7", "--tau", "0:0.6:40", "--format", "json"],
        &["qsl", "--kmax", "5"],
    ];
    for (i, base) in cases.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = ["1", "4"]
            .iter()
            .map(|w| {
                let p = dir.path().join(format!("{i}-{w}"));
                let mut args = base.to_vec();
                args.extend(["--workers", w, "--out", p.to_str().unwrap()]);
                let out = run(&args);
                assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
                std::fs::read(p).unwrap()
            })
            .collect();
        assert_eq!(outputs[0], outputs[1], "{base:?}");
    }
    // only the outputs remain: temporaries were renamed into place
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 6);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["dfe", "--bogus"]).status.code(), Some(1));
    let bad_range = run(&["dfe", "--tau", "1:0:5"]);
    assert_eq!(bad_range.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_range.stderr).contains("--tau"));
    assert_eq!(run(&["dfe", "--n", "0"]).status.code(), Some(1));
    assert_eq!(run(&["dfe", "--n", "3", "--ell", "5/2"]).status.code(), Some(1));
    assert_eq!(run(&["impurity", "--boundary", "abc"]).status.code(), Some(1));
    let domain = run(&["contour", "--tau=-1"]);
    assert_eq!(domain.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&domain.stderr).contains("tau = -1"));
}

#[test]
fn validate_writes_report_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("report.json");
    let out = run(&["validate", "--out", p.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 10);
    let v: Value = serde_json::from_slice(&std::fs::read(&p).unwrap()).unwrap();
    let rows = v["data"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["passed"] == true || r["known_unattainable"] == true));
    assert!(Path::new(&p).exists());
}
