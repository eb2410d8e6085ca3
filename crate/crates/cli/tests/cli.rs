use std::process::Command;

fn twoprover(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_twoprover")).args(args).output().unwrap()
}

#[test]
fn missing_seed_is_a_usage_error() {
    let out = twoprover(&["ldt", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(twoprover(&["ldt", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn unreadable_input_is_a_runtime_error() {
    let out = twoprover(&["value", "--game", "/nonexistent/game.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_writes_the_report_and_nothing_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = twoprover(&["value", "--builtin", "chsh", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["command"], "value");
    assert_eq!(report["result"]["rows"][0]["exact"], serde_json::json!([3, 4]));
    assert!(report["config"].get("out").is_none());
}

#[test]
fn csv_report_is_a_key_value_table() {
    let out = twoprover(&["linearity", "--n", "3", "--function", "linear:5", "--exhaustive", "--format", "csv"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<(String, String)> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert!(rows.iter().any(|(k, v)| k == "command" && v == "linearity"));
    assert!(rows.iter().any(|(k, v)| k == "config.function" && v == "linear:5"));
    assert!(rows.iter().any(|(k, v)| k.starts_with("result.exact.acceptance") && v == "1"));
}
