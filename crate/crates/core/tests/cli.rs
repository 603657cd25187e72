use std::process::Command;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kornhardy"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn check_operator_is_deterministic() {
    let (c1, a) = run(&["check-operator", "--preset", "dsym-r2"]);
    let (c2, b) = run(&["check-operator", "--preset", "dsym-r2"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["status"], "pass");
    assert_eq!(v["subcommand"], "check-operator");
}

#[test]
fn curl_strict_reports_certificate() {
    let (code, out) = run(&["solve-c6", "--preset", "curl-r3-strict"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["checks"][0]["status"], "infeasible");
    assert_eq!(v["checks"][0]["verified"], true);
}

#[test]
fn operator_file_matches_preset() {
    let file = concat!(env!("CARGO_MANIFEST_DIR"), "/operators/dsym-r2.op");
    let (code, out) = run(&["verify-identities", "--operator-file", file]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 5);
}

#[test]
fn bad_usage_exits_two() {
    let (code, _) = run(&["solve-c6"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["check-operator", "--preset", "no-such-operator"]);
    assert_eq!(code, 2);
}
