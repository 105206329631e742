//! End-to-end tests for the pgm binary: command behavior, exit codes and
//! byte-level determinism of reports.

use std::path::PathBuf;
use std::process::{Command, Output};

fn pgm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pgm"))
}

fn scalar(c: u64) -> serde_json::Value {
    serde_json::json!({"valuation": 0, "precision": 1, "coeffs": [[c]], "exact": true})
}

fn module_json(phi: u64, gamma: u64, delta: u64) -> serde_json::Value {
    serde_json::json!({
        "p": 3,
        "coeff": {"kind": "finite_field", "degree": 1},
        "rank": 1,
        "chi_gamma": "1+p",
        "matrices": {
            "phi": [[scalar(phi)]],
            "gamma": [[scalar(gamma)]],
            "delta": [[scalar(delta)]]
        }
    })
}

fn write_temp(name: &str, value: &serde_json::Value) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("pgm-test-{}-{name}", std::process::id()));
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    pgm().args(args).output().expect("binary runs")
}

#[test]
fn cohomology_of_trivial_module() {
    let path = write_temp("trivial.json", &module_json(1, 1, 1));
    let out = run(&["cohomology", "--input", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["h0"], 1);
    assert_eq!(v["h1"], 2);
    assert_eq!(v["h2"], 0);
    assert_eq!(v["euler_ok"], true);
    assert_eq!(v["chi_gamma_convention"], "1+p");
}

#[test]
fn identify_tate_module() {
    let path = write_temp("tate.json", &module_json(1, 1, 2));
    let out = run(&["identify", "--input", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 1);
    assert_eq!(v["a"], serde_json::json!([1]));
}

#[test]
fn validate_broken_commutation_exits_2_naming_identity() {
    let z = scalar(0);
    let one = scalar(1);
    let t = serde_json::json!({"valuation": 1, "precision": 2, "coeffs": [[1]], "exact": true});
    let broken = serde_json::json!({
        "p": 3,
        "coeff": {"kind": "finite_field", "degree": 1},
        "rank": 2,
        "chi_gamma": "1+p",
        "matrices": {
            "phi": [[one.clone(), z.clone()], [z.clone(), one.clone()]],
            "gamma": [[one.clone(), t], [z.clone(), one.clone()]],
            "delta": [[one.clone(), z.clone()], [z, one]]
        }
    });
    let path = write_temp("broken.json", &broken);
    let out = run(&["validate", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("Phi*phi(Gamma) = Gamma*gamma(Phi)"),
        "stderr must name the failing identity, got: {err}"
    );
}

#[test]
fn precision_starved_module_exits_4() {
    // a non-exact phi entry with a one-coefficient window cannot feed the
    // kernel model
    let narrow = serde_json::json!({
        "p": 3,
        "coeff": {"kind": "finite_field", "degree": 1},
        "rank": 1,
        "chi_gamma": "1+p",
        "matrices": {
            "phi": [[{"valuation": 0, "precision": 1, "coeffs": [[1]], "exact": false}]],
            "gamma": [[scalar(1)]],
            "delta": [[scalar(2)]]
        }
    });
    let path = write_temp("narrow.json", &narrow);
    let out = run(&["cohomology", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn malformed_input_exits_5() {
    let mut path = std::env::temp_dir();
    path.push(format!("pgm-test-{}-garbage.json", std::process::id()));
    std::fs::write(&path, "{ not json").unwrap();
    let out = run(&["cohomology", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn dual_output_is_a_module_file() {
    let path = write_temp("ur2.json", &module_json(2, 1, 1));
    let out = run(&["dual", "--input", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // dual of ur_2 is ur_{2^{-1}} = ur_2 at p = 3
    assert_eq!(v["matrices"]["phi"][0][0]["coeffs"], serde_json::json!([[2]]));
    assert_eq!(v["chi_gamma"], "1+p");
}

#[test]
fn twist_moves_delta() {
    let path = write_temp("trivial2.json", &module_json(1, 1, 1));
    let input = serde_json::json!({"module": module_json(1, 1, 1), "n": 1});
    let path2 = write_temp("twist-input.json", &input);
    let _ = path;
    let out = run(&["twist", "--input", path2.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["matrices"]["delta"][0][0]["coeffs"], serde_json::json!([[2]]));
}

#[test]
fn random_suite_is_byte_deterministic() {
    let cfgv = serde_json::json!({
        "p": 3, "q_degree": 1, "d_max": 2, "count": 3, "width": 96
    });
    let path = write_temp("suite.json", &cfgv);
    let out1 = run(&["random-suite", "--input", path.to_str().unwrap(), "--seed", "5"]);
    let out2 = run(&["random-suite", "--input", path.to_str().unwrap(), "--seed", "5"]);
    assert!(out1.status.success(), "{}", String::from_utf8_lossy(&out1.stderr));
    assert_eq!(out1.stdout, out2.stdout, "reports must be byte-identical");
    let v: serde_json::Value = serde_json::from_slice(&out1.stdout).unwrap();
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["cases"].as_array().unwrap().len(), 3);
    // a different seed gives a different stream
    let out3 = run(&["random-suite", "--input", path.to_str().unwrap(), "--seed", "6"]);
    assert!(out3.status.success());
    assert_ne!(out1.stdout, out3.stdout);
}

#[test]
fn lift_dim_of_trivial() {
    let input = serde_json::json!({"module": module_json(1, 1, 1), "f_dim": 1});
    let path = write_temp("liftdim.json", &input);
    let out = run(&["lift-dim", "--input", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dim"], 2);
}

#[test]
fn out_flag_writes_file() {
    let path = write_temp("trivial3.json", &module_json(1, 1, 1));
    let mut out_path = std::env::temp_dir();
    out_path.push(format!("pgm-test-{}-report.json", std::process::id()));
    let out = run(&[
        "validate",
        "--input",
        path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["height"], 0);
}
