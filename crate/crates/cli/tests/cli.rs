use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_structsgd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn structsgd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_solve_ref_theory_run_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds.txt");
    let ds_s = ds.to_str().unwrap();

    let o = run(&["gen", "--n", "80", "--d", "4", "--seed", "7", "--out", ds_s]);
    assert!(o.status.success(), "{o:?}");
    let text = fs::read_to_string(&ds).unwrap();
    assert!(text.starts_with("80 4 logistic\n"));

    let o = run(&["solve-ref", ds_s, "lh=2"]);
    assert!(o.status.success(), "{o:?}");
    assert!(dir.path().join("ds.txt.ref").is_file());

    let ds_key = format!("dataset={ds_s}");
    let o = run(&["theory", "--format", "csv", &ds_key, "lh=2"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.starts_with("s_F,sigma_F,eta_bar,q_bar,R_bar,eta_tilde,q_tilde,gamma_gd,gd_rate_factor,cor3_holds\n"));

    let run_dir = dir.path().join("run");
    let o = run(&[
        "run",
        "--out",
        run_dir.to_str().unwrap(),
        &ds_key,
        "lh=2",
        "iterations=100",
        "repetitions=3",
    ]);
    assert!(o.status.success(), "{o:?}");
    for f in ["trace.csv", "theory.csv", "summary.txt", "plot.svg", "config.txt"] {
        assert!(run_dir.join(f).is_file(), "{f}");
    }
    assert!(stdout(&o).contains("R_rel = "));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "n = 50\nd = 3\nlh = 1\niterations = 50\nrepetitions = 2\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "11",
        "batch_size=5",
    ]);
    assert!(o.status.success(), "{o:?}");
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("batch_size = 5"));
    assert!(summary.contains("iterations = 50"));
    let written = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(written.contains("seed = 11"));
}

#[test]
fn sweep_writes_per_point_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    let o = run(&[
        "sweep",
        "--param",
        "batch_size",
        "--values",
        "1,4",
        "--out",
        out.to_str().unwrap(),
        "--format",
        "csv",
        "n=40",
        "d=3",
        "iterations=40",
        "repetitions=2",
    ]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).lines().count(), 3);
    assert!(out.join("sweep.csv").is_file());
    assert!(out.join("batch_size_4/trace.csv").is_file());
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(run(&["run", "repetitions=0"]).status.code(), Some(2));
    assert_eq!(run(&["run", "bogus=1"]).status.code(), Some(2));
    assert_eq!(run(&["run", "step_rule=eta_tilde", "batch_size=2"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--family", "lasso"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run(&["solve-ref", "/nonexistent/ds.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/ds.txt"));
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "run",
        "--out",
        out.to_str().unwrap(),
        "n=30",
        "d=3",
        "ref_max_iters=1",
    ]);
    assert_eq!(o.status.code(), Some(3), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("converge"));
}

#[test]
fn inadmissible_fixed_step_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        "--out",
        dir.path().to_str().unwrap(),
        "n=30",
        "d=3",
        "iterations=10",
        "step_rule=fixed:100",
    ]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("bound"));
}
