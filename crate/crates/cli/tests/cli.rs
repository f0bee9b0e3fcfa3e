use std::process::Command;

fn primatlas(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_primatlas"))
        .args(args)
        .env_remove("PRIMATLAS_THETA")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn result_of(stdout: &str) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).expect("valid JSON");
    assert_eq!(v["ok"], serde_json::Value::Bool(true), "not ok: {v}");
    v["result"].clone()
}

#[test]
fn limit_sl3_vanishing_diagonal() {
    let (code, out, _) = primatlas(&[
        "limit",
        "--space",
        "sl3",
        "--profile",
        r#"{"kind":"Q0Seq","s":"0","t":"0"}"#,
        "--target",
        r#"{"kind":"Zero"}"#,
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), r#"{"ok":true,"result":true}"#);
}

#[test]
fn witness_modd_spec_values() {
    let (code, out, _) = primatlas(&["witness", "--case", "modd", "--s", "1", "--t", "1", "--m", "3"]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    assert_eq!(r["gamma"], serde_json::json!([[3, 1], [2, 1]]));
    assert_eq!(r["product"][0], "3");
    assert_eq!(r["product"][3], "1/3");
    assert_eq!(r["u"][1], "-1/3");
}

#[test]
fn heis_rep_order_two() {
    let (code, out, _) = primatlas(&["heis-rep", "--z", "1/2", "--a", "0", "--b", "0"]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    assert_eq!(r["n"], 2);
    assert_eq!(r["matX"][0][1][0], 1.0);
    assert_eq!(r["matX"][1][0][0], 1.0);
    assert_eq!(r["matY"][1][1][0], -1.0);
}

#[test]
fn res_hull_counts() {
    let (code, out, _) = primatlas(&[
        "res-hull", "--z", "1/4", "--a", "0", "--b", "1/2", "--subgroup", "gamma2",
    ]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    let pairs = r["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 4);
    assert_eq!(pairs[0]["c"], "1/8");
}

#[test]
fn deterministic_output() {
    let args = [
        "amenability", "--z", "1/2", "--a", "0", "--b", "0", "--n", "2",
    ];
    let (c1, out1, _) = primatlas(&args);
    let (c2, out2, _) = primatlas(&args);
    assert_eq!(c1, 0);
    assert_eq!(c2, 0);
    assert_eq!(out1, out2, "identical invocations must be byte-identical");
}

#[test]
fn exit_codes() {
    // domain error -> 2 with structured error JSON
    let (code, out, _) = primatlas(&["transitivity", "--n", "40"]);
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["ok"], serde_json::Value::Bool(false));
    assert_eq!(v["error"]["kind"], "BoundExceeded");
    // malformed input -> 1
    let (code, _, err) = primatlas(&["classify-sl2", "--point", "{oops"]);
    assert_eq!(code, 1);
    assert!(err.contains("bad point JSON"));
    // unknown flag -> clap usage error (exit 2 from clap); ensure nonzero
    let (code, _, _) = primatlas(&["no-such-command"]);
    assert_ne!(code, 0);
}

#[test]
fn validate_mode_skips_compute() {
    let (code, out, _) = primatlas(&[
        "limit",
        "--space",
        "prim",
        "--profile",
        r#"{"kind":"ZeroSeq"}"#,
        "--target",
        r#"{"stratum":"zero"}"#,
        "--validate",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), r#"{"ok":true,"result":"valid"}"#);
    // invalid JSON still fails under --validate
    let (code, _, _) = primatlas(&[
        "limit", "--space", "prim", "--profile", "{", "--target", "{}", "--validate",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn results_reparse_under_schema_shapes() {
    // classify output re-parses as a quasi-orbit document
    let point = r#"{"v":[{"coeffs":[["2","1"]]},{"coeffs":[["4","1"]]}],"w":[{"a":"0","b":"0"},{"a":"0","b":"0"}]}"#;
    let (code, out, _) = primatlas(&["classify-sl2", "--point", point]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    assert_eq!(r["kind"], "RationalDir");
    assert!(r["s"]["coeffs"].is_array());

    // stabilizer generators re-parse as integer matrices
    let a11 = r#"[[{"coeffs":[["1","1"]]},{"coeffs":[]},{"coeffs":[]}],[{"coeffs":[]},{"coeffs":[["1","1"]]},{"coeffs":[]}],[{"coeffs":[]},{"coeffs":[]},{"coeffs":[["1","1"]]}]]"#;
    let (code, out, _) = primatlas(&["stabilizer", "--point", a11]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    assert_eq!(r["tag"], "H3");
    assert_eq!(r["generators"].as_array().unwrap().len(), 3);
}

#[test]
fn folner_and_greenleaf() {
    let (code, out, _) = primatlas(&[
        "folner", "--group", "h3", "--n", "2", "--g", r#"{"x":1,"y":0,"z":0}"#,
    ]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    assert_eq!(r["ratio"], "2/5");
    assert_eq!(r["size"], 225);

    let (code, out, _) = primatlas(&[
        "greenleaf", "--space", "zd", "--d", "1", "--lo", "0", "--hi", "50",
        "--basepoint", "[0]",
    ]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    let reports = r["reports"].as_array().unwrap();
    assert_eq!(reports[0]["folner_ratio"], "1/25");
    assert!(reports[0]["bound_ok"].as_bool().unwrap());
}

#[test]
fn intertwine_exact_roundtrip() {
    let pi = r#"{"z":"1/2","a":"0","b":"0","rootA":0,"rootB":0}"#;
    let rho = r#"{"z":"1/2","a":"0","b":"0","rootA":1,"rootB":0}"#;
    let (code, out, _) = primatlas(&["intertwine", "--mode", "exact", "--pi", pi, "--rho", rho]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    assert_eq!(r["found"], true);
    assert!(r["defect"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn induce_and_t0() {
    let a23 = r#"[[{"coeffs":[["2","1"]]},{"coeffs":[]},{"coeffs":[]}],[{"coeffs":[]},{"coeffs":[["3","2"]]},{"coeffs":[]}],[{"coeffs":[]},{"coeffs":[]},{"coeffs":[["1","3"]]}]]"#;
    let ideal = r#"{"kind":"HeisIdeal","j":{"z":"1/2","a":"0","b":"0"}}"#;
    let (code, out, _) = primatlas(&["induce", "--point", a23, "--ideal", ideal]);
    assert_eq!(code, 0);
    let r = result_of(&out);
    assert_eq!(r["stratum"], "s0");

    let p = r#"{"stratum":"s1","r":{"coeffs":[["1","1"]]},"x":{"kind":"Pt","m":"1","t":"0"}}"#;
    let q = r#"{"stratum":"s2","r":{"coeffs":[["1","1"]]},"x":{"kind":"Pt","m":"1","t":"0"}}"#;
    let (code, out, _) = primatlas(&["t0-check", "--p", p, "--q", q]);
    assert_eq!(code, 0);
    assert_eq!(result_of(&out), serde_json::Value::Bool(true));
}

#[test]
fn theta_environment_override() {
    // a valid custom bracket still classifies sign decisions
    let point = r#"{"v":[{"coeffs":[["2","1"]]},{"coeffs":[["4","1"]]}],"w":[{"a":"0","b":"0"},{"a":"0","b":"0"}]}"#;
    let out = Command::new(env!("CARGO_BIN_EXE_primatlas"))
        .args(["classify-sl2", "--point", point])
        .env("PRIMATLAS_THETA", "3/1:7/2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert_eq!(v["result"]["kind"], "RationalDir");
}
