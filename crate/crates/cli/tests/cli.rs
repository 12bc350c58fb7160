use std::process::{Command, Output};

fn nshess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nshess"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn study_writes_the_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study.csv");
    let o = nshess(&[
        "study", "--function", "cubes", "--dim", "3", "--k", "2", "--beta-start", "0.1", "--beta-ratio", "0.5",
        "--beta-steps", "6", "--estimator", "nested-set", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta,error_spec,error_fro,bound,evals"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(r[1] <= r[3], "error above bound in {r:?}");
        assert_eq!(r[4], 10.0);
    }
}

#[test]
fn calculus_study_runs_on_a_product() {
    let o = nshess(&["study", "--function", "cubes,oneplussq", "--dim", "2", "--estimator", "product-qc", "--beta-steps", "5", "--symmetrize"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("beta,error_spec,error_fro,bound,evals\n"));
}

#[test]
fn unreachable_order_is_an_acceptance_failure() {
    let o = nshess(&["study", "--function", "cubes", "--dim", "2", "--beta-steps", "5", "--min-order", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_configuration_exits_with_two() {
    assert_eq!(nshess(&["study", "--function", "nope"]).status.code(), Some(2));
    assert_eq!(nshess(&["study", "--k", "9"]).status.code(), Some(2));
    assert_eq!(nshess(&["study", "--beta-ratio", "2"]).status.code(), Some(2));
    assert_eq!(nshess(&["approx", "--x0", "1,2"]).status.code(), Some(2));
    assert_eq!(nshess(&["study", "--dim", "x"]).status.code(), Some(2));
}

#[test]
fn verify_examples_passes() {
    let o = nshess(&["verify-examples", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert_eq!(checks[1]["detail"], "poised: true, minimal: false");
}

#[test]
fn approx_prints_json_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let (pts, trace, model) = (dir.path().join("p.csv"), dir.path().join("t.csv"), dir.path().join("m.csv"));
    let o = nshess(&[
        "approx", "--function", "quadratic", "--dim", "2", "--k", "1", "--beta", "0.5", "--x0", "-0.25,1",
        "--points", pts.to_str().unwrap(), "--trace", trace.to_str().unwrap(), "--model", model.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["evals"], 6);
    assert!(v["error_spec"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["model"]["hessian_upper"].as_array().unwrap().len(), 3);

    let p = std::fs::read_to_string(&pts).unwrap();
    assert_eq!(p.lines().next(), Some("x1,x2"));
    assert_eq!(p.lines().count(), 7);
    let m = std::fs::read_to_string(&model).unwrap();
    assert_eq!(m.lines().next(), Some("alpha0,alpha1,alpha2,h11,h12,h22"));
    let t = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(t.lines().next(), Some("x1,x2,value,status"));
    assert_eq!(t.lines().filter(|l| l.ends_with(",miss")).count(), 6);
    assert!(t.lines().any(|l| l.ends_with(",hit")));
}
