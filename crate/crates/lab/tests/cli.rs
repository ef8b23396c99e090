use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn ewa(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ewa"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str], out: &Path) -> String {
    let o = ewa(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn config(name: &str) -> String {
    configs().join(name).to_str().unwrap().to_string()
}

#[test]
fn dyad_subcommands_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let dyad = config("dyad.json");
    run_ok(&["simulate", "--config", &dyad], out);
    let text = run_ok(&["equilibria", "--config", &dyad], out);
    assert!(text.contains("3 fixed points, 2 stable"), "{text}");
    let text = run_ok(&["vectorfield", "--config", &dyad], out);
    assert!(text.contains("3 isocline intersections"), "{text}");
    for f in ["trajectory.csv", "trajectory.svg", "equilibria.csv", "vector_field.csv", "vector_field.svg", "isocline_intersections.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let grid = std::fs::read_to_string(out.join("vector_field.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 81 * 81);
}

#[test]
fn star_influence_predicts_c() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_ok(&["influence", "--config", &config("star3.json")], dir.path());
    assert!(text.contains("prediction: C"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("influence.csv")).unwrap();
    assert!(csv.starts_with("agent,xi,v1,degree,psi,lambda,eta\n"));
}

#[test]
fn scenarios_run_from_configs() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_ok(&["cascade", "--config", &config("cascade.json"), "--no-svg"], dir.path());
    assert!(text.contains("full cascade true"), "{text}");
    assert!(!dir.path().join("cascade.svg").exists());
    let text = run_ok(&["reinforce-best", "--config", &config("reinforce.json")], dir.path());
    assert!(text.contains("gamma_hat = 1.5"), "{text}");
}

#[test]
fn small_montecarlo_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["montecarlo", "--sims", "12", "--seed", "4", "--config", &config("montecarlo.json")], dir.path());
    for f in ["records.csv", "accuracy.csv", "partial_dependence.csv", "accuracy.svg", "partial_dependence.svg"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let records = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 13);
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = ewa(&["simulate"], dir.path());
    assert!(!o.status.success());
    let o = ewa(&["vectorfield", "--config", &config("cascade.json")], dir.path());
    assert!(!o.status.success());
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"graph": {"path": 2}, "colour": 3}"#).unwrap();
    let o = ewa(&["equilibria", "--config", bad.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
}
