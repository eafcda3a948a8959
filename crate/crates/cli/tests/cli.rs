use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use sonc::circuits::enumerate_circuits;
use sonc::dual_cone::verify_dual_witness;
use sonc::optimize::{extended_support, verify_certificate, SoncCertificate};
use sonc::poly_support::{parse_polynomial, DualVector, SparsePolynomial};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn sonc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sonc"))
        .args(args)
        .env_remove("SONC_SEED")
        .output()
        .unwrap()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = sonc(args);
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let (code, stdout, stderr) = run(args);
    let v = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{e}: {stdout} / {stderr}"));
    (code, v)
}

fn path(name: &str) -> String {
    data(name).to_str().unwrap().to_string()
}

#[test]
fn circuits_of_dense_quartic_support() {
    let (code, stdout, _) = run(&["circuits", &path("support_0_4.json")]);
    assert_eq!(code, 0);
    assert_eq!(stdout, golden("circuits_support_0_4.json"));
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let pairs: Vec<(Vec<u64>, u64)> = v["circuits"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["vertices"].as_array().unwrap().len() == 2)
        .map(|c| {
            let vs = c["vertices"].as_array().unwrap().iter().map(|p| p[0].as_u64().unwrap()).collect();
            (vs, c["beta"][0].as_u64().unwrap())
        })
        .collect();
    assert_eq!(
        pairs,
        [(vec![0, 2], 1), (vec![0, 4], 1), (vec![0, 4], 2), (vec![0, 4], 3), (vec![2, 4], 3)]
    );
}

#[test]
fn circuits_of_motzkin_and_single_point() {
    for input in ["motzkin.txt", "motzkin.json"] {
        let (code, stdout, _) = run(&["circuits", &path(input)]);
        assert_eq!(code, 0);
        assert_eq!(stdout, golden("circuits_motzkin.json"));
    }
    let (code, v) = run_json(&["circuits", &path("motzkin.txt")]);
    assert_eq!(code, 0);
    let proper: Vec<&Value> = v["circuits"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["vertices"].as_array().unwrap().len() > 1)
        .collect();
    assert_eq!(proper.len(), 1);
    assert_eq!(proper[0]["beta"], serde_json::json!([2, 2]));
    assert_eq!(proper[0]["mu"], serde_json::json!(["1/3", "1/3", "1/3"]));

    let (code, v) = run_json(&["circuits", &path("single_even.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["circuits"].as_array().unwrap().len(), 1);
    assert_eq!(v["circuits"][0]["vertices"], serde_json::json!([[2, 0]]));
}

#[test]
fn dual_member_accepts_separating_point() {
    let (code, stdout, _) = run(&["check", "dual-member", &path("separating.json")]);
    assert_eq!(code, 0);
    assert_eq!(stdout, golden("dual_member_separating.json"));
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["member"], true);
    assert!(report["violated_circuit"].is_null());

    // every reported witness re-verifies against the library
    let v = DualVector::from_json_value(&serde_json::from_str(&std::fs::read_to_string(data("separating.json")).unwrap()).unwrap()).unwrap();
    let catalog = enumerate_circuits(v.support()).unwrap();
    for w in report["witnesses"].as_array().unwrap() {
        let circuit = catalog.get(w["circuit"].as_u64().unwrap() as usize).unwrap();
        let tau: Vec<f64> = w["tau"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
        assert!(verify_dual_witness(circuit, &v, w["v_star"].as_f64().unwrap(), &tau, 1e-9).unwrap());
    }
}

#[test]
fn dual_member_rejects_and_names_a_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("v.json");
    // v1 = 3 exceeds the AM-GM bound sqrt(v0 v2) = 1 on the circuit (0, 2; 1)
    std::fs::write(&file, r#"{"n":1,"points":[[0],[1],[2]],"values":[1.0,3.0,1.0]}"#).unwrap();
    let (code, v) = run_json(&["check", "dual-member", file.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["member"], false);
    assert_eq!(v["violated_circuit"]["beta"], serde_json::json!([1]));

    let (code, v) = run_json(&["check", "sage-dual", file.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["member"], false);
}

#[test]
fn quartic_dual_and_psd_flag() {
    let (code, stdout, _) = run(&["check", "quartic-dual", &path("separating.json")]);
    assert_eq!(code, 0);
    assert_eq!(stdout, golden("quartic_dual_separating.json"));
    let (code, v) = run_json(&["check", "quartic-dual", &path("separating_array.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["member"], true);

    let (code, v) = run_json(&["check", "quartic-dual", "--psd", &path("separating.json")]);
    assert_eq!(code, 1);
    assert_eq!(v["member"], false);
    // det of the 3x3 Hankel matrix [[2,0,1],[0,1,1],[1,1,1]] is -1
    assert!((v["hankel_minors"][6].as_f64().unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn nonneg_circuit_motzkin() {
    let (code, v) = run_json(&["check", "nonneg-circuit", &path("motzkin_301.txt")]);
    assert_eq!(code, 1);
    assert_eq!(v["nonneg"], false);
    assert!((v["theta"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!(v["witness"].is_null());

    let (code, v) = run_json(&["check", "nonneg-circuit", &path("motzkin.txt")]);
    assert_eq!(code, 0);
    let nu: Vec<f64> = v["witness"]["nu"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(nu.iter().all(|x| (x - 1.0).abs() < 1e-12));
}

fn check_certificate(p: &SparsePolynomial, v: &Value) {
    let cert = &v["certificate"];
    let pieces = cert["pieces"].as_array().unwrap();
    let catalog = enumerate_circuits(&extended_support(p)).unwrap();
    let parsed = SoncCertificate {
        gamma: cert["gamma"].as_f64().unwrap(),
        pieces: pieces
            .iter()
            .map(|q| sonc::optimize::CertificatePiece {
                circuit_id: q["circuit"].as_u64().unwrap() as usize,
                c: q["c"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect(),
                delta: q["delta"].as_f64().unwrap(),
            })
            .collect(),
        residual: SparsePolynomial::from_json_value(&cert["residual"]).unwrap(),
    };
    verify_certificate(p, &parsed, &catalog).unwrap();
}

#[test]
fn bound_examples() {
    let (code, v) = run_json(&["bound", &path("motzkin.txt")]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "optimality_certified");
    assert!(v["p_sonc"].as_f64().unwrap().abs() < 1e-6);
    for z in v["optimal_point"].as_array().unwrap() {
        assert!((z.as_f64().unwrap().abs() - 1.0).abs() < 1e-6);
    }
    check_certificate(&parse_polynomial("1 + x1^2*x2^4 + x1^4*x2^2 - 3*x1^2*x2^2").unwrap(), &v);

    let (code, v) = run_json(&["bound", &path("quartic.txt")]);
    assert_eq!(code, 0);
    assert!((v["p_sonc"].as_f64().unwrap() + 1.25).abs() < 1e-6);
    let z = v["optimal_point"][0].as_f64().unwrap();
    assert!((z.abs() - 1.5f64.sqrt()).abs() < 1e-6);
    check_certificate(&parse_polynomial("1 + x1^4 - 3*x1^2").unwrap(), &v);

    let (code, stdout, _) = run(&["bound", &path("constant.txt")]);
    assert_eq!(code, 0);
    assert_eq!(stdout, golden("bound_constant.json"));
}

#[test]
fn bound_without_certificate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("odd.txt");
    // unbounded below: the odd top-degree term has no dominating even vertex
    std::fs::write(&file, "x1^3 + x1^2").unwrap();
    let (code, v) = run_json(&["bound", file.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["status"], "infeasible_unbounded");
    assert!(v["certificate"].is_null());
}

#[test]
fn certify_emits_catalog_indices() {
    let (code, v) = run_json(&["certify", &path("quartic.txt")]);
    assert_eq!(code, 0);
    let circuits = v["catalog"]["circuits"].as_array().unwrap();
    for piece in v["certificate"]["pieces"].as_array().unwrap() {
        let id = piece["circuit"].as_u64().unwrap() as usize;
        assert_eq!(circuits[id]["vertices"].as_array().unwrap().len(), piece["c"].as_array().unwrap().len());
    }
    let p = SparsePolynomial::from_json_value(&v["polynomial"]).unwrap();
    check_certificate(&p, &v);
}

#[test]
fn errors_exit_two() {
    for args in [
        vec!["circuits".to_string(), path("missing.txt")],
        vec!["circuits".to_string(), path("malformed.txt")],
        vec!["bound".to_string(), path("malformed.txt")],
        vec!["check".to_string(), "nonneg-circuit".to_string(), path("odd_terms.txt")],
        vec!["check".to_string(), "dual-member".to_string(), path("motzkin.txt")],
        vec!["check".to_string(), "quartic-dual".to_string(), path("support_0_4.json")],
        vec!["--tol".to_string(), "-1".to_string(), "check".to_string(), "dual-member".to_string(), path("separating.json")],
        vec!["frobnicate".to_string()],
    ] {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, stdout, stderr) = run(&args);
        assert_eq!(code, 2, "{args:?}");
        assert!(stdout.is_empty(), "{args:?}");
        assert!(!stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn output_is_deterministic() {
    let first = sonc(&["bound", &path("motzkin.txt")]).stdout;
    for _ in 0..3 {
        assert_eq!(sonc(&["bound", &path("motzkin.txt")]).stdout, first);
    }
    let a = sonc(&["--seed", "17", "certify", &path("quartic.txt")]).stdout;
    let b = Command::new(env!("CARGO_BIN_EXE_sonc"))
        .args(["certify", &path("quartic.txt")])
        .env("SONC_SEED", "17")
        .output()
        .unwrap()
        .stdout;
    assert_eq!(a, b);
}

#[test]
fn text_format_and_version() {
    let (code, stdout, _) = run(&["--format", "text", "check", "quartic-dual", "--psd", &path("separating.json")]);
    assert_eq!(code, 1);
    assert_eq!(stdout, "not psd\n");
    let (code, stdout, _) = run(&["bound", "--format", "text", &path("quartic.txt")]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("status: optimality_certified\n"));
    let (code, stdout, _) = run(&["--version"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "sonc 1");
}
