use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"))
}

fn nip(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nip"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NIP_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TOY: &str = r#"
name = "mini"
[model]
kind = "toy"
generator = [[1, "0.5 + 0.3*sin(2*t)"], [0.2, -1]]
[grid]
t_end = 0.5
dt = 1e-3
sample_stride = 10
"#;

#[test]
fn run_writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = nip(
        &[
            "run",
            config("heisenberg_trivial").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS"));
    assert!(!stdout(&o).contains("FAIL"));
    assert!(out.join("heisenberg_trivial.csv").is_file());
    assert!(out.join("heisenberg_trivial_summary.csv").is_file());
}

#[test]
fn failing_check_exits_one_and_strict_promotes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let tight = dir.path().join("tight.toml");
    fs::write(
        &tight,
        format!("{TOY}\n[checks.overlap_drift]\ntolerance = 1e-300\n"),
    )
    .unwrap();
    let o = nip(&["run", tight.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL overlap_drift"));
    assert!(dir.path().join("nip-out/mini.csv").is_file());

    let advisory = dir.path().join("advisory.toml");
    fs::write(
        &advisory,
        format!("{TOY}\n[checks.overlap_drift]\ntolerance = 1e-300\nfatal = false\n"),
    )
    .unwrap();
    let o = nip(&["run", advisory.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("(diagnostic)"));
    let o = nip(&["run", advisory.to_str().unwrap(), "--strict"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_reports_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = config("toy2x2_driven");
    let o = nip(&["check", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("toy2x2_driven: ok"));

    let o = nip(
        &["check", path.to_str().unwrap(), "--dt", "0.003"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`grid.dt`"), "{}", stderr(&o));

    let broken = dir.path().join("broken.toml");
    fs::write(&broken, TOY.replace("t_end = 0.5", "t_end = [1]")).unwrap();
    let o = nip(&["check", broken.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`grid.t_end`"), "{}", stderr(&o));
    // nothing is written by check
    assert!(!dir.path().join("nip-out").exists());
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mini.toml");
    fs::write(&cfg, format!("{TOY}\n[output]\ndir = \"from-config\"\n")).unwrap();
    let o = nip(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("from-config/mini.csv").is_file());

    let o = Command::new(env!("CARGO_BIN_EXE_nip"))
        .args(["run", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .env("NIP_OUT_DIR", dir.path().join("from-env"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("from-env/mini.csv").is_file());

    let o = nip(
        &["run", cfg.to_str().unwrap(), "--out", "from-flag"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("from-flag/mini.csv").is_file());
}

#[test]
fn bench_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = nip(
        &[
            "bench",
            config("chain_bench").to_str().unwrap(),
            "--dims",
            "2,4,8",
            "--out",
            "b",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("b/chain_bench_bench.csv")).unwrap();
    assert_eq!(table.lines().count(), 7);
    assert!(table.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn cross_command() {
    let dir = tempfile::tempdir().unwrap();
    let o = nip(
        &["cross", config("cross_sigma_x").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS deviation"));

    let o = nip(
        &["cross", config("toy2x2_driven").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`model.kind`"));
}

#[test]
fn breakdown_is_an_error_with_its_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = nip(
        &["run", config("kg_tachyonic").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("metric lost positivity at t = 0.47"), "{err}");
}
