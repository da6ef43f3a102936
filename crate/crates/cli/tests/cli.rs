use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oneshot-qit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oneshot-qit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn convexsplit_example_passes_with_three_records() {
    let out = run(&["convexsplit", "--dim-c", "2", "--prime", "5", "--ladder", "1,2,4", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = json(&out)["records"].as_array().unwrap().clone();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r["pass"] == Value::Bool(true)));
}

#[test]
fn entropy_demo_and_circuit_pass() {
    assert_eq!(run(&["entropy", "--demo"]).status.code(), Some(0));
    let out = run(&["circuit", "--dim-c", "2", "--prime", "5", "--verify", "exhaustive"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &json(&out)["records"][0];
    assert_eq!(rec["values"]["mismatches"], Value::from(0.0));
    assert!(rec["values"]["size"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["convexsplit", "--ladder", "0"],
        vec!["convexsplit", "--dim-c", "3"],
        vec!["convexsplit", "--bogus"],
        vec!["code", "--rate", "1"],
        vec!["decode", "--eps", "0.1", "--delta", "0.1", "--sizes", "1"],
        vec!["entropy"],
        vec![],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn refusal_reports_the_cap() {
    let out = run(&["code", "--rate", "1"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("admissible maximum"));
}

#[test]
fn failed_check_exits_one() {
    let out = run(&["code", "--rate", "1", "--unchecked"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["records"][0]["pass"], Value::Bool(false));
}

#[test]
fn single_record_csv() {
    let out = run(&["bounds", "--state", "product", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("id,pass,"));
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}

#[test]
fn floats_carry_at_most_twelve_digits() {
    let out = run(&["convexsplit", "--ladder", "1,2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for cell in text.lines().skip(1).flat_map(|l| l.split(',')) {
        if let Ok(x) = cell.parse::<f64>() {
            if cell.contains('.') || cell.contains('e') {
                let mantissa = cell.split('e').next().unwrap();
                let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
                assert!(digits.trim_start_matches('0').len() <= 12 || x == 0.0, "{cell}");
            }
        }
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let (a, b, c) = (scratch("a.json"), scratch("b.json"), scratch("c.json"));
    let args = |p: &PathBuf, seed: &str| {
        vec![
            "convexsplit".to_string(),
            "--ladder".into(),
            "1,2,4".into(),
            "--states".into(),
            "2".into(),
            "--seed".into(),
            seed.into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    for (p, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        assert_eq!(bin().args(args(p, seed)).status().unwrap().code(), Some(0));
    }
    let (ta, tb, tc) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), std::fs::read(&c).unwrap());
    assert_eq!(ta, tb);
    assert_ne!(ta, tc);
}

#[test]
fn thread_count_does_not_change_the_report() {
    let base = ["decode", "--mode", "flat", "--eps", "0.001", "--delta", "0.06", "--sizes", "1,2"];
    let one = bin().args(base).env("ONESHOT_QIT_THREADS", "1").output().unwrap();
    let two = bin().args(base).env("ONESHOT_QIT_THREADS", "3").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout);
    let bad = bin().args(base).env("ONESHOT_QIT_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn json_config_echo_round_trips_through_config_file() {
    let first = run(&["convexsplit", "--ladder", "1,2", "--seed", "11", "--state", "pure"]);
    let report = json(&first);
    let config = report["config"].as_object().unwrap();
    let global = ["seed", "format", "tolerance-scale"];
    let mut text = String::from("[global]\n");
    for key in global {
        text.push_str(&format!("{key} = {}\n", config[key].as_str().unwrap()));
    }
    text.push_str("[convexsplit]\n");
    for (k, v) in config.iter().filter(|(k, _)| !global.contains(&k.as_str())) {
        text.push_str(&format!("{k} = {}\n", v.as_str().unwrap()));
    }
    let path = scratch("echo.conf");
    std::fs::write(&path, text).unwrap();
    let second = run(&["convexsplit", "--config", path.to_str().unwrap()]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn flags_override_config_and_unknown_keys_are_rejected() {
    let path = scratch("override.conf");
    std::fs::write(&path, "[global]\nseed = 5\n[convexsplit]\nladder = 1,2,4\n").unwrap();
    let out = run(&["convexsplit", "--config", path.to_str().unwrap(), "--ladder", "1", "--dump"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 5") && text.contains("ladder = 1\n"), "{text}");
    let bad = scratch("bad.conf");
    std::fs::write(&bad, "[convexsplit]\nladdr = 1\n").unwrap();
    assert_eq!(run(&["convexsplit", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn list_enumerates_every_subcommand() {
    let out = run(&["--list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["entropy", "convexsplit", "circuit", "flatten", "decode", "code", "bounds"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}
