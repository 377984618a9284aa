//! End-to-end runs of the `scatter` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scatter::{RunReport, Status};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("scatter-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn scatter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatter")).args(args).env("SCATTER_THREADS", "1").output().unwrap()
}

fn read_report(dir: &Path) -> RunReport {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn validate_accepts_good_and_rejects_bad_grid() {
    let ok = scatter(&["validate", "--config", fixture("zero_all.toml").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("ok "));

    let bad = scatter(&["validate", "--config", fixture("bad_grid.toml").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("grid.k_max"));
}

#[test]
fn invalid_grid_aborts_before_computing() {
    let out = scratch("badgrid");
    let r = scatter(&["run", "--config", fixture("bad_grid.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn unknown_task_flag_is_a_config_error() {
    let r = scatter(&["run", "--config", fixture("zero_all.toml").to_str().unwrap(), "--task", "plots"]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn square_well_levinson_matches_golden_text() {
    let out = scratch("golden");
    let r = scatter(&["run", "--config", fixture("square_well_levinson.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stdout));
    let text = std::fs::read_to_string(out.join("report.txt")).unwrap();
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/square_well_levinson.txt")).unwrap();
    assert_eq!(text, golden);
    for i in 1..=4 {
        assert_eq!(text.matches(&format!("wn(Γ{i})")).count(), 1);
    }

    let rep = read_report(&out);
    let w = rep.winding.as_ref().unwrap();
    assert!((w.total - 1.0).abs() < 5e-3 && w.expected_index == 1);
    assert_eq!(rep.task("levinson").unwrap().status, Status::Pass);
    assert_eq!(rep.task("spectrum").unwrap().status, Status::Pass);
    assert_eq!(rep.task("waveop").unwrap().status, Status::Skipped);
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn zero_potential_all_tasks_pass_and_are_deterministic() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for d in [&a, &b] {
        let r = scatter(&["run", "--config", fixture("zero_all.toml").to_str().unwrap(), "--out", d.to_str().unwrap(), "--format", "json"]);
        assert_eq!(r.status.code(), Some(0));
    }
    let rep = read_report(&a);
    assert!(rep.tasks.iter().all(|t| t.status == Status::Pass));
    assert!(rep.eps_disc.unwrap() < 1e-6);
    assert_eq!(rep.winding.as_ref().unwrap().total, 0.0);
    let k_norm = rep.task("waveop").unwrap().values["k_frobenius"];
    assert!(k_norm < 3.0 * rep.eps_disc.unwrap());

    // round trip
    let again: RunReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(again, rep);

    // data files are byte-identical; the report differs only in timing
    let mut names: Vec<String> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert!(names.len() >= 7, "{names:?}");
    for n in names.iter().filter(|n| *n != "report.json") {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
    let (mut ra, mut rb) = (read_report(&a), read_report(&b));
    ra.meta.seconds.clear();
    rb.meta.seconds.clear();
    ra.config.output.dir = PathBuf::new();
    rb.config.output.dir = PathBuf::new();
    assert_eq!(ra, rb);

    // every CSV artifact carries the config hash
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        let text = std::fs::read_to_string(a.join(n)).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("# config_hash={}", rep.config_hash));
    }
    let ident = std::fs::read_to_string(a.join("identities.json")).unwrap();
    assert!(ident.contains(&rep.config_hash));
    std::fs::remove_dir_all(&a).unwrap();
    std::fs::remove_dir_all(&b).unwrap();
}
