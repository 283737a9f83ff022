use std::process::{Command, Output};

fn ctxphase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxphase"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(o: &Output) -> String {
    stdout(o).lines().skip(1).collect::<Vec<_>>().join("\n")
}

#[test]
fn header_records_seed_and_command() {
    let o = ctxphase(&["--seed", "42", "bell", "--kind", "phi+"]);
    assert!(o.status.success());
    let first = stdout(&o).lines().next().unwrap().to_string();
    assert!(first.starts_with("# seed=42 version="), "{first}");
    assert!(first.contains("command=") && first.ends_with("bell --kind phi+"));
}

#[test]
fn omitted_seed_is_printed_and_replayable() {
    let o = ctxphase(&["ensemble", "--kind", "phi-", "--frame", "x", "--n", "500"]);
    let head = stdout(&o).lines().next().unwrap().to_string();
    let seed = head
        .strip_prefix("# seed=")
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .to_string();
    let again = ctxphase(&[
        "--seed", &seed, "ensemble", "--kind", "phi-", "--frame", "x", "--n", "500",
    ]);
    assert_eq!(body(&o), body(&again));
}

#[test]
fn lift_examples() {
    let o = ctxphase(&["lift", "--kind", "psi+", "--class", "1", "--frame", "x"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("(|0'>,|0'>) + (|1'>,|-1'>)"));
    assert!(s.contains("PASS"));
    let o = ctxphase(&["lift", "--kind", "phi-", "--class", "2", "--frame", "z"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("(|0>,|0>) + (|1>,|-1>)"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["lift", "--kind", "bad"][..],
        &["lift", "--kind", "psi+", "--class", "3", "--frame", "z"],
        &["chsh", "--kind", "phi+", "--angles", "0,45"],
        &["correlate", "--kind", "phi+", "--sweep", "0:10"],
    ] {
        assert_eq!(ctxphase(args).status.code(), Some(2), "{args:?}");
    }
}

fn csv_rows(args: &[&str]) -> Vec<Vec<String>> {
    let mut full = vec!["--format", "csv", "--seed", "1"];
    full.extend_from_slice(args);
    stdout(&ctxphase(&full))
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn correlate_examples() {
    let rows = csv_rows(&["correlate", "--kind", "phi+", "--alpha", "0", "--beta", "0"]);
    let e: f64 = rows[0][2].parse().unwrap();
    assert!((e - 1.0).abs() < 1e-12);
    let rows = csv_rows(&[
        "correlate",
        "--kind",
        "phi+",
        "--alpha",
        "0",
        "--beta",
        "22.5",
    ]);
    let e: f64 = rows[0][2].parse().unwrap();
    assert!((e - 2f64.sqrt() / 2.0).abs() < 1e-12);
}

#[test]
fn sweep_covers_the_grid() {
    let o = ctxphase(&[
        "--format",
        "csv",
        "correlate",
        "--kind",
        "psi+",
        "--sweep",
        "0:90:5",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&["correlate", "--kind", "psi+", "--sweep", "0:90:5"]);
    assert_eq!(rows.len(), 19 * 19);
    for r in rows {
        let (a, b): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn csv_and_jsonl_agree() {
    let args = [
        "correlate",
        "--kind",
        "psi-",
        "--sweep",
        "0:60:15",
        "--decomposition",
        "pre2",
    ];
    let csv = csv_rows(&args);
    let mut full = vec!["--format", "jsonl", "--seed", "1"];
    full.extend_from_slice(&args);
    let json: Vec<serde_json::Value> = stdout(&ctxphase(&full))
        .lines()
        .filter(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(csv.len(), json.len());
    let cols = [
        "alpha_deg",
        "beta_deg",
        "E_analytic",
        "E_oracle",
        "diag_term",
        "offdiag_term",
    ];
    for (row, obj) in csv.iter().zip(&json) {
        for (i, col) in cols.iter().enumerate() {
            let a: f64 = row[i].parse().unwrap();
            let b = obj[col].as_f64().unwrap();
            assert_eq!(format!("{a:.14e}"), format!("{b:.14e}"), "{col}");
        }
    }
}

#[test]
fn chsh_example() {
    let o = ctxphase(&[
        "--format",
        "jsonl",
        "chsh",
        "--kind",
        "phi+",
        "--angles",
        "0,45,22.5,67.5",
    ]);
    assert!(o.status.success());
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with('{'))
        .unwrap()
        .to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert!((v["S"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn ensemble_example() {
    let o = ctxphase(&[
        "--format", "jsonl", "--seed", "7", "ensemble", "--kind", "psi-", "--frame", "z", "--n",
        "100000",
    ]);
    assert!(o.status.success());
    let line = stdout(&o)
        .lines()
        .find(|l| l.contains("\"ensemble\""))
        .unwrap()
        .to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["E"].as_f64().unwrap(), -1.0);
    let f = v["class1_fraction"].as_f64().unwrap();
    assert!((0.495..=0.505).contains(&f));
}

#[test]
fn stations_example() {
    let args = [
        "--format",
        "jsonl",
        "--seed",
        "3",
        "stations",
        "--kind",
        "psi+",
        "--n",
        "10000",
        "--policy-a",
        "random",
        "--policy-b",
        "random",
    ];
    let o = ctxphase(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .filter(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for r in recs.iter().filter(|r| r["record"] == "setting") {
        if r["setting_a"] == r["setting_b"] {
            assert_eq!(r["E"].as_f64().unwrap().abs(), 1.0);
        }
    }
    let summary = recs.iter().find(|r| r["record"] == "stations").unwrap();
    assert_eq!(summary["lost"], 0);
    assert_eq!(body(&o), body(&ctxphase(&args)));
}

#[test]
fn remaining_commands_run() {
    for args in [
        &["collapse", "--kind", "psi+", "--class", "2", "--frame", "z"][..],
        &["lift", "--kind", "phi+", "--class", "1", "--frame", "y"],
        &[
            "isolated",
            "--kind",
            "psi+",
            "--class",
            "1",
            "--prepared",
            "z",
            "--device",
            "x",
            "--n",
            "20",
        ],
        &["report"],
        &["fixtures"],
    ] {
        let o = ctxphase(args);
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = ctxphase(&[
        "mixed",
        "--kind",
        "psi+",
        "--frame-a",
        "z",
        "--frame-b",
        "x",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
