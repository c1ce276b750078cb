use std::fs;
use std::process::{Command, Output};

fn qdesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdesign")).args(args).output().expect("run qdesign")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn design_export_import_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for (dim, kind) in [("2", "sic"), ("3", "sic"), ("2", "optimized"), ("3", "superimposed")] {
        let path = dir.path().join(format!("{kind}{dim}.json"));
        let p = path.to_str().unwrap();
        let o = qdesign(&["designs", "export", "--dim", dim, "--kind", kind, "--out", p]);
        assert!(o.status.success(), "{}", stderr(&o));
        let original = fs::read_to_string(&path).unwrap();

        let o = qdesign(&["designs", "import", p]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o), original);

        let o = qdesign(&["designs", "verify", p]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains(",true"));
    }
}

#[test]
fn corrupted_design_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sic.json");
    let p = path.to_str().unwrap();
    assert!(qdesign(&["designs", "export", "--dim", "2", "--out", p]).status.success());

    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    v["vectors"][0][0][0] = serde_json::json!(0.9);
    fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();

    let o = qdesign(&["designs", "verify", p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unit_norm"), "{}", stderr(&o));
    let o = qdesign(&["designs", "import", p]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_arguments_exit_with_two() {
    for args in [
        vec!["table1", "--format", "xml"],
        vec!["table1", "--tol", "0"],
        vec!["table2", "--samples", "0"],
        vec!["table1", "--design-n", "3"],
        vec!["horodecki", "--x", "1.5"],
        vec!["designs", "export", "--dim", "5"],
        vec!["designs", "import", "/nonexistent/design.json"],
        vec!["no-such-command"],
    ] {
        let o = qdesign(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn sweeps_are_reproducible() {
    let args = ["table2", "--samples", "300", "--seed", "11"];
    let a = qdesign(&args);
    let b = qdesign(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("family,criterion,detected,sample_count,fraction,master_seed\n"));
    assert!(text.contains("random_npt_2x2,PPT,300,300,1.000000,11"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn table1_json_report() {
    let o = qdesign(&["table1", "--format", "json", "--tol", "1e-4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["thresholds"].as_array().unwrap();
    assert_eq!(rows.len(), 4 * 8);
    assert_eq!(v["tolerances"]["bisection_tol"], 1e-4);
    assert_eq!(v["designs"].as_array().unwrap().len(), 4);
    let ccnr = rows.iter().find(|r| r["family"] == "psi_minus" && r["criterion"] == "CCNR").unwrap();
    assert!((ccnr["threshold"].as_f64().unwrap() - 0.2918).abs() < 0.005);
}

#[test]
fn horodecki_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let o = qdesign(&["horodecki", "--x", "0.3,0.6", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 5);
    assert!(text.contains("horodecki_noise,0.3,PPT,1.000000"));
}
