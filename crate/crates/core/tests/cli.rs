use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_uq");

fn uq(args: &[&str], threads_env: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("UQ_THREADS");
    if let Some(t) = threads_env {
        cmd.env("UQ_THREADS", t);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn too_many_large_parameters_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "N = 15\nN_s = 16\noutput = out\n");
    let out = uq(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("N_s"));
}

#[test]
fn missing_config_is_a_config_error() {
    let out = uq(&["run", "/nonexistent/uq.cfg"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn default_sweep_writes_eight_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.cfg",
        "# experiment defaults\noutput = out\n",
    );
    let out = uq(&["run", &cfg], None);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "method,N_s,N_f,w,knots,pde_solves,mean,variance,corr_mean,corr_var,err_mean,err_var,wall_ms"
    );
    assert_eq!(lines.len(), 9);
    assert!(lines[1].starts_with("collocation,4,11,0,1,1,1,0,"));
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.starts_with("status: complete"));
    assert!(summary.contains("nominal QoI"));
}

#[test]
fn results_are_identical_across_thread_counts_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let body = |out: &str| {
        format!(
            "m = 17\nN_s = 2,3\nlevels = 0..2\nw_corr = 1\nmethods = collocation,hybrid,mc\n\
             mc_samples = 40\nreference = mc:50,4\nthreads = 1\noutput = {out}\n"
        )
    };
    let a = write_config(dir.path(), "a.cfg", &body("a"));
    let b = write_config(dir.path(), "b.cfg", &body("b"));
    assert_eq!(uq(&["run", &a], None).status.code(), Some(0));
    assert_eq!(uq(&["run", &b], Some("8")).status.code(), Some(0));
    let csv_a = fs::read(dir.path().join("a/results.csv")).unwrap();
    let csv_b = fs::read(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(uq(&["run", &a], Some("3")).status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("a/results.csv")).unwrap(), csv_a);
}

#[test]
fn validate_reports_and_warns() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "ok.cfg", "");
    let out = uq(&["validate", &ok], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(
        text.contains("mode_sum") && text.contains("no warnings"),
        "{text}"
    );

    let wild = write_config(dir.path(), "wild.cfg", "c = 5\n");
    let out = uq(&["validate", &wild], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("warning"));
}

#[test]
fn grid_info_counts_and_writes_knots() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("knots.csv");
    let out = uq(
        &[
            "grid-info",
            "--dim",
            "2",
            "--level",
            "2",
            "--knots",
            csv.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(
        text.lines()
            .any(|l| l.split_whitespace().collect::<Vec<_>>() == ["knots", "13"]),
        "{text}"
    );
    let knots = fs::read_to_string(csv).unwrap();
    assert_eq!(knots.lines().next(), Some("knot_id,y_1,y_2,weight"));
    assert_eq!(knots.lines().count(), 14);
}

#[test]
fn fd_check_runs_and_rejects_unknown_kinds() {
    let out = uq(&["fd-check", "ddet", "--trials", "10"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("max_rel_error"));
    assert_eq!(uq(&["fd-check", "dz"], None).status.code(), Some(2));
}
