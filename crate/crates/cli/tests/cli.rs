use std::path::Path;
use std::process::{Command, Output};

fn lifteval(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lifteval"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(o: &Output) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("value "))
        .expect("value line")
        .parse()
        .unwrap()
}

#[test]
fn example_compile_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(lifteval(&["example-1d", "-o", "ex.json"], d).status.success());
    let out = lifteval(&["compile", "ex.json", "--nm", "full", "-o", "ev.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(log["trees"], 1);

    let r = lifteval(&["eval", "ev.json", "--point", "0.5"], d);
    assert_eq!(r.status.code(), Some(0));
    assert!((value(&r) - 0.5).abs() < 1e-12);

    let tie = lifteval(&["eval", "ev.json", "--point", "1.0"], d);
    assert!((value(&tie) - 2.0).abs() < 1e-12);
    assert_eq!(stdout(&tie), stdout(&lifteval(&["eval", "ev.json", "--point", "1.0"], d)));

    let neg = lifteval(&["eval", "ev.json", "--point", "-2.5"], d);
    assert!((value(&neg) - 12.5).abs() < 1e-12);

    assert_eq!(lifteval(&["eval", "ev.json", "--point", "4"], d).status.code(), Some(3));
}

#[test]
fn unmerged_compile_keeps_partitions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    lifteval(&["example-1d", "-o", "ex.json"], d);
    let out = lifteval(&["compile", "ex.json", "--nm", "0", "-o", "ev.json"], d);
    let log: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(log["trees"], 2);
    let r = lifteval(&["eval", "ev.json", "--point", "2.5"], d);
    assert!(stdout(&r).contains("partition 2"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    lifteval(&["example-1d", "-o", "ex.json"], d);
    lifteval(&["compile", "ex.json", "--nm", "full", "-o", "ev.json"], d);
    for args in [
        vec!["eval", "ev.json", "--point", "x"],
        vec!["eval", "ev.json", "--point", "1,2"],
        vec!["eval", "missing.json", "--point", "1"],
        vec!["compile", "ex.json", "--nm", "many", "-o", "o.json"],
    ] {
        assert_eq!(lifteval(&args, d).status.code(), Some(2), "{args:?}");
    }
    std::fs::write(d.join("bad.json"), r#"{"n": 1, "regions": []}"#).unwrap();
    let out = lifteval(&["compile", "bad.json", "-o", "o.json"], d);
    assert_eq!(out.status.code(), Some(2));

    // Two overlapping regions declared in one partition.
    std::fs::write(
        d.join("overlap.json"),
        r#"{"n": 1,
            "regions": [{"H": [[1.0], [-1.0]], "K": [1.0, 0.0]}, {"H": [[1.0], [-1.0]], "K": [2.0, -0.5]}],
            "functions": [{"A": [[1.0]], "B": [0.0], "C": 0.0}, {"A": [[1.0]], "B": [0.0], "C": 1.0}],
            "partition": [1, 1]}"#,
    )
    .unwrap();
    let out = lifteval(&["compile", "overlap.json", "-o", "o.json"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overlap"));
}

#[test]
fn tolerance_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_lifteval"))
        .args(["example-1d", "-o", "ex.json"])
        .env("LIFTEVAL_TOL_FEAS", "-1")
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_lifteval"))
        .args(["example-1d", "-o", "ex.json"])
        .env("LIFTEVAL_TOL_FEAS", "1e-10")
        .current_dir(d)
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn gen_from_flags_and_spec_file_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = lifteval(&["gen", "--n", "1", "--n-part", "2", "--grid", "2", "--seed", "5", "-o", "a.json"], d);
    assert!(a.status.success());
    std::fs::write(d.join("spec.json"), r#"{"n": 1, "n_part": 2, "grid": 2, "seed": 5}"#).unwrap();
    assert!(lifteval(&["gen", "--spec", "spec.json", "-o", "b.json"], d).status.success());
    let a = std::fs::read(d.join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.json")).unwrap());
    let s: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(s["regions"].as_array().unwrap().len(), 4);
    assert_eq!(s["partition"], serde_json::json!([1, 1, 2, 2]));
}

#[test]
fn bench_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    lifteval(&["gen", "--n", "1", "--n-part", "4", "--grid", "3", "--shift", "0.8", "-o", "g.json"], d);
    for out in ["r1", "r2"] {
        let o = lifteval(
            &["bench", "g.json", "--nm-list", "0,1,full", "--queries", "300", "--seed", "2", "-o", out],
            d,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for ext in ["csv", "json"] {
        let a = std::fs::read(d.join(format!("r1.{ext}"))).unwrap();
        assert_eq!(a, std::fs::read(d.join(format!("r2.{ext}"))).unwrap());
    }
    assert!(d.join("r1.timings.json").exists());
    let csv = std::fs::read_to_string(d.join("r1.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][2], "4");
    assert_eq!(rows[1][2], "2");
    assert_eq!(rows[2][2], "1");
}
