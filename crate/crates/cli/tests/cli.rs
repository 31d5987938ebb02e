use std::process::Command;

fn qswitch(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_qswitch"))
        .args(args)
        .output()
        .expect("spawn qswitch");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

#[test]
fn usage_errors_exit_2() {
    let (_, _, code) = qswitch(&["no-such-subcommand"]);
    assert_eq!(code, 2);
    let (_, err, code) = qswitch(&["measure", "OR"]);
    assert_eq!(code, 2);
    assert!(err.contains("needs --n"));
}

#[test]
fn measure_or3_record() {
    let (out, _, code) = qswitch(&["measure", "OR", "--n", "3", "--all"]);
    assert_eq!(code, 0);
    let rec: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    for key in ["C", "s", "bs", "dt", "deg"] {
        assert_eq!(rec["params"][key], 3, "{key}");
    }
    assert_eq!(rec["params"]["fbs"], "3");
    assert_eq!(rec["pass"], true);
}

#[test]
fn complete_example_is_exact() {
    let (out, _, code) = qswitch(&[
        "sip", "complete", "--w", "1", "--x", "0.3", "--qprime", "1/2", "--t", "2/5",
    ]);
    assert_eq!(code, 0);
    let rec: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(rec["estimate"], "0");
    assert_eq!(rec["pass"], true);
    // A triple violating the completion identity fails and exits 1.
    let (out, _, code) = qswitch(&[
        "sip", "complete", "--w", "1", "--x", "0.3", "--qprime", "1/2", "--t", "1/2",
    ]);
    assert_eq!(code, 1);
    let rec: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(rec["pass"], false);
}

#[test]
fn switch_mc_independent_of_jobs() {
    let args = |jobs: &'static str| {
        vec![
            "switch", "--fn", "OR", "--n", "4", "--x", "0", "--y", "15", "--p", "1/4",
            "--d", "1", "--mc", "--trials", "20000", "--seed", "11", "--jobs", jobs,
        ]
    };
    let (a, _, _) = qswitch(&args("1"));
    let (b, _, _) = qswitch(&args("8"));
    assert_eq!(a, b);
    // And the exact mode agrees with MC to within a loose tolerance.
    let (ex, _, code) = qswitch(&[
        "switch", "--fn", "OR", "--n", "4", "--x", "0", "--y", "15", "--p", "1/4",
        "--d", "1", "--exact",
    ]);
    assert_eq!(code, 0);
    let rec: serde_json::Value = serde_json::from_str(ex.trim()).unwrap();
    assert!(rec["estimate"].is_string());
}

#[test]
fn csv_output_has_header() {
    let (out, _, code) = qswitch(&["--csv", "gadget", "--N", "4"]);
    assert_eq!(code, 0);
    assert!(out.starts_with(qswitch_core::report::CSV_HEADER));
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("qswitch-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("records.jsonl");
    let (stdout, _, code) = qswitch(&[
        "measure", "XOR", "--n", "2", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let rec: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(rec["params"]["deg"], 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sip_params_examples() {
    let (out, _, code) = qswitch(&["sip", "params", "--m", "4", "--d", "2"]);
    assert_eq!(code, 0);
    let rec: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(rec["params"]["w"], 44);
    let (out, _, code) = qswitch(&["sip", "params", "--m", "6", "--d", "3", "--qcma"]);
    assert_eq!(code, 0);
    let rec: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(rec["params"]["t"].as_array().unwrap().len(), 7);
}
