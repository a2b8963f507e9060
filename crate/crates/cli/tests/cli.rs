use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_petersson"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

fn number(v: &Value) -> f64 {
    v.to_string().parse().unwrap()
}

#[test]
fn kloosterman_value() {
    let (code, out) = run(&["kloosterman", "--m", "1", "--n", "1", "--c", "3"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((number(&v["value"]) + 1.0).abs() < 1e-12);
}

#[test]
fn non_fundamental_discriminant_is_a_precondition_error() {
    let (code, out) = run(&["moment", "--d", "2", "--p", "5", "--disc", "10"]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["error"]["kind"], "NotFundamental");
}

#[test]
fn usage_errors_are_structured() {
    for args in [&["frobnicate"][..], &["kloosterman", "--m", "1"], &["moment", "--d", "2", "--p", "5", "--x", "-3"]] {
        let (code, out) = run(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(json(&out)["error"]["kind"].is_string());
    }
    let (code, out) = run(&["moment", "--d", "4", "--p", "5"]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["error"]["kind"], "InvalidQuery");
}

#[test]
fn unmet_target_exits_with_budget_code() {
    let (code, out) = run(&["trace", "--m", "1", "--n", "1", "--level", "11", "--cmax", "200", "--target-tail", "1e-9"]);
    assert_eq!(code, 3);
    assert_eq!(json(&out)["error"]["kind"], "BudgetExceeded");
}

#[test]
fn certify_report_fields() {
    let (code, out) = run(&["certify", "--d", "2", "--p", "5", "--disc", "1", "--cmax", "3000"]);
    assert_eq!(code, 0);
    let v = json(&out);
    for field in ["query", "a_sums", "b_sums", "moment_dp2", "moment_dp", "newform_moment", "envelope", "certificate"] {
        assert!(!v[field].is_null(), "missing {field}");
    }
    assert_eq!(v["a_sums"].as_object().unwrap().len(), 4);
    let new = number(&v["newform_moment"]["value"]);
    let dp2 = number(&v["moment_dp2"]["value"]);
    let dp = number(&v["moment_dp"]["value"]);
    assert_eq!(new, dp2 - dp / 4.0);
}

#[test]
fn output_independent_of_threads() {
    let base = ["certify", "--d", "2", "--p", "7", "--cmax", "1500"];
    let one = run(&[&base[..], &["--threads", "1"]].concat());
    let four = run(&[&base[..], &["--threads", "4"]].concat());
    assert_eq!(one, four);
    assert_eq!(one.0, 0);
}

#[test]
fn sweep_keeps_order_and_flags_bad_rows() {
    let (code, out) = run(&["sweep", "--d", "2", "--p", "5,6,7", "--disc", "1", "--x", "selfdual", "--cmax", "500"]);
    assert_eq!(code, 0);
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["query"]["p"], 5);
    assert_eq!(rows[1]["error"]["kind"], "InvalidQuery");
    assert_eq!(rows[2]["query"]["p"], 7);

    let (code, out) = run(&["sweep", "--d", "--p", "--disc"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out), Value::Array(vec![]));

    let (code, out) = run(&["sweep", "--d", "2", "--p", "5,6", "--disc", "1", "--cmax", "100", "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[2].ends_with("InvalidQuery"));
}

#[test]
fn afe_and_coefficient_dump() {
    let (code, out) = run(&["afe", "--level", "11", "--disc", "5"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let other = json(&run(&["afe", "--level", "11", "--disc", "5", "--x", "9"]).1);
    assert!((number(&v["value"]) - number(&other["value"])).abs() < 1e-8);

    let (code, out) = run(&["afe", "--level", "11", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("n,a_n\n1,1\n2,-2\n3,-1\n"));

    let (code, out) = run(&["afe", "--level", "11", "--disc", "-11"]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["error"]["kind"], "CoprimalityViolation");
}

#[test]
fn bessel_and_identity() {
    let (code, out) = run(&["bessel", "--x", "1"]);
    assert_eq!(code, 0);
    assert!((number(&json(&out)["value"]) - 0.440_050_585_744_933_5).abs() < 1e-15);
    let (code, out) = run(&["identity", "--m", "1", "--n", "1", "--q", "4"]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["error"]["kind"], "InvalidQuery");
}
