use std::path::Path;
use std::process::{Command, Output};

use bezier_mopt::BezierSimplex;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bezier-mopt"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("error is JSON")
}

#[test]
fn solve_writes_model_and_trace_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "solve", "--problem", "scaled-med", "--n", "30", "--k", "200", "--degree", "3", "--seed", "1", "--out",
        "model.json",
    ];
    let out = run(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("model.json")).unwrap();
    let model = BezierSimplex::from_json(std::str::from_utf8(&first).unwrap()).unwrap();
    assert_eq!(model.basis().len(), 10);

    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json.trace.json")).unwrap()).unwrap();
    assert_eq!(trace["iterations"].as_array().unwrap().len(), 200);
    assert_eq!(trace["footer"]["config"]["problem"], "scaled-med");
    assert!(trace["footer"]["tool"].as_str().unwrap().starts_with("bezier-mopt"));

    assert!(run(dir.path(), &args).status.success());
    assert_eq!(std::fs::read(dir.path().join("model.json")).unwrap(), first);
}

#[test]
fn too_few_samples_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--problem", "scaled-med", "--n", "5", "--degree", "3", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("N >= 10"));
}

#[test]
fn unknown_problem_and_bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--problem", "zdt1", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["solve", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "usage");
    let out = run(dir.path(), &["solve", "--schedule", "0", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"problem":"scaled-med","samples":[20],"iterations":1000,"trials":2,"mse_samples":200}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["experiment", "--config", "c.json", "--k", "20", "--out-dir", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let agg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["config"]["iterations"], 20);
    assert_eq!(agg["config"]["samples"][0], 20);
    assert_eq!(agg["aggregates"].as_array().unwrap().len(), 1);

    std::fs::write(dir.path().join("bad.json"), r#"{"problem":"scaled-med","unknown":1}"#).unwrap();
    let out = run(dir.path(), &["experiment", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_csv_is_reproducible_and_single_trial_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| {
        vec![
            "experiment", "--problem", "scaled-med", "--n", "30", "--k", "50", "--trials", "1", "--mse-samples",
            "500", "--out-dir", o,
        ]
    };
    assert!(run(dir.path(), &args("a")).status.success());
    let mut b = args("b");
    b.extend(["--threads", "1"]);
    assert!(run(dir.path(), &b).status.success());
    let csv_a = std::fs::read_to_string(dir.path().join("a/trials.csv")).unwrap();
    let csv_b = std::fs::read_to_string(dir.path().join("b/trials.csv")).unwrap();
    // the thread count is echoed in the provenance line only
    assert_eq!(csv_a.lines().skip(1).collect::<Vec<_>>(), csv_b.lines().skip(1).collect::<Vec<_>>());
    assert!(csv_a.starts_with("# bezier-mopt"));
    assert!(!csv_a.contains('\r'));
    let agg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["aggregates"][0]["single_trial"], true);
    assert_eq!(agg["aggregates"][0]["sd"], 0.0);
}

#[test]
fn baseline_reports_and_fails_on_small_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "baseline", "--problem", "scaled-med", "--populations", "100", "--compare", "--n", "30", "--k", "100",
            "--trials", "2", "--mse-samples", "1000",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("baseline_report.json")).unwrap()).unwrap();
    assert!(report["method"].as_str().unwrap().contains("substitute"));
    assert!(report["aggregates"][0]["mean"].as_f64().unwrap() > 0.0);
    assert_eq!(report["comparison"]["rows"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("baseline_model_p100.json").exists());

    let out = run(dir.path(), &["baseline", "--problem", "scaled-med", "--populations", "9"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "insufficient_points");
}

#[test]
fn sample_rows_lie_on_the_simplex() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("zero.json"),
        r#"{"M":2,"D":1,"L":2,"index_order":[[1,0],[0,1]],"control_points":[[0.0,0.0],[0.0,0.0]]}"#,
    )
    .unwrap();
    let once = run(dir.path(), &["sample", "--model", "zero.json", "--n", "3", "--seed", "9"]);
    assert!(once.status.success());
    let twice = run(dir.path(), &["sample", "--model", "zero.json", "--n", "3", "--seed", "9"]);
    assert_eq!(once.stdout, twice.stdout);
    let text = String::from_utf8(once.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!((r[0] + r[1] - 1.0).abs() < 1e-12);
        assert_eq!(&r[2..], &[0.0, 0.0]);
    }

    std::fs::write(dir.path().join("bad.json"), r#"{"M":2,"D":1,"L":2,"index_order":[[0,1],[1,0]],"control_points":[[0.0,0.0],[0.0,0.0]]}"#).unwrap();
    let out = run(dir.path(), &["sample", "--model", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "schema");
}

#[test]
fn metrics_between_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "x_1,x_2\n1,0\n0,1\n").unwrap();
    std::fs::write(dir.path().join("y.csv"), "0,0\n").unwrap();
    let out = run(dir.path(), &["metrics", "--x", "x.csv", "--y", "y.csv"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["gd"], 1.0);
    assert_eq!(v["igd"], 1.0);

    let out = run(dir.path(), &["metrics", "--metrics", "mse", "--x", "x.csv", "--problem", "skew-3med"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagnostics_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["diagnostics", "--mode", "perturb", "--k", "25", "--repeats", "3", "--iterations", "50", "--n", "30"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("perturb.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("k,N,repeat,sup_gap,frob_gap,bound_value"));
    assert_eq!(csv.lines().count(), 5);

    let out = run(
        dir.path(),
        &["diagnostics", "--mode", "gengap", "--holdout", "200", "--trials", "2", "--iterations", "30", "--n", "30"],
    );
    assert!(out.status.success());
    let gap: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gengap.json")).unwrap()).unwrap();
    assert_eq!(gap["settings"][0]["trials"].as_array().unwrap().len(), 2);

    let out = run(dir.path(), &["diagnostics", "--mode", "lemma", "--trials", "2", "--iterations", "20", "--n", "30"]);
    assert!(out.status.success());

    let out = run(dir.path(), &["diagnostics", "--mode", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}
