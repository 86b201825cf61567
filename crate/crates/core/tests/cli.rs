use std::path::Path;
use std::process::{Command, Output};

fn isodyn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isodyn")).current_dir(dir).args(args).env_remove("ISODYN_THREADS").output().unwrap()
}

const SMALL: &str = "lattice.n1 = 8\nlattice.n2 = 8\nlattice.n3 = 9\nlattice.k_inner = 8\ninit.max_mode = 1\nrun.steps = 4\nrun.diagnostics_every = 2\noutput.csv_path = out.csv\n";

#[test]
fn simulate_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), SMALL).unwrap();
    let o = isodyn(dir.path(), &["simulate", "run.cfg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wrote 3 rows"));

    let o = isodyn(dir.path(), &["plot", "out.csv", "H"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("<svg"));
    let o = isodyn(dir.path(), &["plot", "out.csv", "gauss_l2", "-o", "g.svg"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(dir.path().join("g.svg")).unwrap().contains("<polyline"));
    assert_eq!(isodyn(dir.path(), &["plot", "out.csv", "nope"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "lattice.n1 = 8\nlattice.d_inner = 0\n").unwrap();
    let o = isodyn(dir.path(), &["simulate", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2: lattice.d_inner"), "{err}");
    assert_eq!(isodyn(dir.path(), &["simulate", "missing.cfg"]).status.code(), Some(2));
    assert_eq!(isodyn(dir.path(), &["check", "bad.cfg"]).status.code(), Some(2));
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), SMALL).unwrap();
    let o = isodyn(dir.path(), &["check", "run.cfg", "--only=scale"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.starts_with("scale: PASS") && out.contains("all 1 suites passed"), "{out}");

    let o = isodyn(dir.path(), &["check", "run.cfg", "--only=bianchi"]);
    assert_eq!(o.status.code(), Some(1));
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().filter(|l| !l.starts_with(' ')).count(), 2, "{out}");
    assert!(out.contains("1 of 1 suites failed: bianchi"));

    assert_eq!(isodyn(dir.path(), &["check", "run.cfg", "--only=nope"]).status.code(), Some(2));
}

#[test]
fn nyquist_config_reports_a_precondition() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), SMALL.replace("init.max_mode = 1", "init.max_mode = 4")).unwrap();
    let o = isodyn(dir.path(), &["check", "run.cfg", "--only=energy"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PRECONDITION FAILED"));
    let o = isodyn(dir.path(), &["simulate", "run.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition failed"));
}

#[test]
fn runtime_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("init.max_mode = 1", "init.max_mode = 3") + "lattice.dt = 5\nrun.scheme = midpoint\ninit.amplitude = 2\n";
    std::fs::write(dir.path().join("run.cfg"), cfg).unwrap();
    let o = isodyn(dir.path(), &["simulate", "run.cfg"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("snapshots/last_good.snap").exists());
}

#[test]
fn bad_thread_count_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_isodyn"))
        .current_dir(dir.path())
        .args(["check", "run.cfg", "--only=scale"])
        .env("ISODYN_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ISODYN_THREADS"));
    let o = Command::new(env!("CARGO_BIN_EXE_isodyn"))
        .current_dir(dir.path())
        .args(["check", "run.cfg", "--only=scale"])
        .env("ISODYN_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}
