use std::fs;
use std::path::PathBuf;

use nip_core::scenario::{
    benchmark_metric_routes, check, cross_check, run, run_file, write_bench_table, RunOptions,
    ScenarioConfig, BENCH_AGREEMENT,
};
use nip_core::Error;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"))
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_path(&config_path(name)).unwrap()
}

fn parse(text: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml_str(text).unwrap()
}

fn config_error_path(result: nip_core::Result<impl std::fmt::Debug>) -> String {
    match result {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
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
[initial]
psi0 = [1, 0]
q_textbook = [[1, 0], [0, -1]]
"#;

#[test]
fn bundled_configs_pass() {
    for name in [
        "heisenberg_trivial",
        "toy2x2_driven",
        "chain_bench",
        "cross_identity",
        "cross_sigma_x",
        "cross_stationary",
        "kg_stationary",
        "kg_driven",
    ] {
        let report = run_file(&config_path(name), &RunOptions::default()).unwrap();
        let failed: Vec<_> = report
            .checks
            .iter()
            .filter(|c| c.fatal && !c.passed())
            .collect();
        assert!(failed.is_empty(), "{name}: {failed:?}");
        assert_eq!(report.exit_code(), 0, "{name}");
    }
}

#[test]
fn trivial_generator_sits_at_noise_floor() {
    let report = run(&load("heisenberg_trivial"), &RunOptions::default()).unwrap();
    for (name, value) in &report.diagnostics {
        if name == "theta_min_eigenvalue" {
            assert_eq!(*value, 1.0);
        } else {
            assert!(value.abs() < 1e-9, "{name} = {value}");
        }
    }
}

#[test]
fn driven_toy_meets_module_tolerances() {
    let report = run(&load("toy2x2_driven"), &RunOptions::default()).unwrap();
    for (name, tol) in [
        ("overlap_drift", 1e-9),
        ("gram_deviation", 1e-8),
        ("completeness_deviation", 1e-8),
        ("metric_flow_g", 1e-6),
        ("metric_flow_sigma", 1e-6),
        ("h_tilde_gap", 1e-6),
        ("h_spectrum_drift", 1e-8),
        ("q_spectrum_drift", 1e-8),
        ("heisenberg_form_gap", 1e-8),
    ] {
        let v = report.diagnostic(name).unwrap();
        assert!(v <= tol, "{name} = {v}");
    }
    let t = report.column("t").unwrap();
    assert_eq!(t.len(), 501);
    assert!(report.columns.iter().any(|c| c == "h_eig_1_re"));
    let re = report.column("normalized_re").unwrap();
    let im = report.column("normalized_im").unwrap();
    assert!(im
        .iter()
        .zip(&re)
        .all(|(i, r)| i.abs() < 1e-9 * r.abs().max(1.0)));
}

#[test]
fn tachyonic_config_reports_breakdown_time() {
    let err = run_file(&config_path("kg_tachyonic"), &RunOptions::default()).unwrap_err();
    assert!(matches!(err, Error::MetricDegenerated { .. }), "{err}");
    let t = err.time().unwrap();
    assert!((t - 0.46_f64.asin()).abs() < 2e-3, "t = {t}");
}

#[test]
fn dt_must_divide_interval() {
    let mut cfg = parse(TOY);
    cfg.grid.dt = 3e-3;
    assert_eq!(
        config_error_path(check(&cfg, &RunOptions::default())),
        "grid.dt"
    );
    let opts = RunOptions {
        dt: Some(0.3),
        ..Default::default()
    };
    assert_eq!(config_error_path(check(&parse(TOY), &opts)), "grid.dt");
}

#[test]
fn diagnostics_name_the_field() {
    let bad_type = TOY.replace("t_end = 0.5", "t_end = \"soon\"");
    assert_eq!(
        config_error_path(ScenarioConfig::from_toml_str(&bad_type)),
        "grid.t_end"
    );
    let unknown = TOY.replace("kind = \"toy\"", "kind = \"toy\"\nfoo = 1");
    assert_eq!(
        config_error_path(ScenarioConfig::from_toml_str(&unknown)),
        "model"
    );
    let expr = TOY.replace("0.5 + 0.3*sin(2*t)", "0.5 + tan(");
    assert_eq!(
        config_error_path(check(&parse(&expr), &RunOptions::default())),
        "model.generator[0][1].re"
    );
    let wrong_dim = TOY.replace("psi0 = [1, 0]", "psi0 = [1, 0, 0]");
    assert_eq!(
        config_error_path(check(&parse(&wrong_dim), &RunOptions::default())),
        "initial.psi0"
    );
    let unknown_check = format!("{TOY}\n[checks.nonsense]\ntolerance = 1.0\n");
    assert_eq!(
        config_error_path(check(&parse(&unknown_check), &RunOptions::default())),
        "checks.nonsense"
    );
    assert_eq!(
        config_error_path(cross_check(&parse(TOY), &RunOptions::default())),
        "model.kind"
    );
}

#[test]
fn identical_configs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let opts = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        let report = run(&parse(TOY), &opts).unwrap();
        assert_eq!(
            report.csv_path.as_deref(),
            Some(dir.path().join("mini.csv").as_path())
        );
    }
    for file in ["mini.csv", "mini_summary.csv"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let report = run(&parse(TOY), &opts).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("mini.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, report.columns);
    for name in [
        "t",
        "expectation_re",
        "expectation_im",
        "normalized_re",
        "normalized_im",
        "overlap_re",
        "overlap_im",
        "gram_deviation",
        "completeness_deviation",
        "quasi_hermiticity_h",
        "quasi_hermiticity_q",
        "metric_flow_sigma",
        "metric_flow_g",
        "theta_min_eigenvalue",
        "h_eig_0_re",
        "h_eig_0_im",
    ] {
        assert!(header.iter().any(|h| h == name), "missing {name}");
    }
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), report.rows.len());
    // full precision round trip
    for (row, values) in rows.iter().zip(&report.rows) {
        for (field, v) in row.iter().zip(values) {
            assert_eq!(field.parse::<f64>().unwrap().to_bits(), v.to_bits());
            assert!(field.contains('e'));
        }
    }

    let mut summary = csv::Reader::from_path(dir.path().join("mini_summary.csv")).unwrap();
    let records: Vec<csv::StringRecord> = summary.records().map(|r| r.unwrap()).collect();
    let checks: Vec<&str> = records
        .iter()
        .filter(|r| &r[1] == "check")
        .map(|r| r.get(0).unwrap())
        .collect();
    let mut unique = checks.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), checks.len());
    assert_eq!(checks.len(), report.checks.len());
}

#[test]
fn exit_status_follows_checks() {
    let tight = format!("{TOY}\n[checks.overlap_drift]\ntolerance = 1e-300\n");
    let report = run(&parse(&tight), &RunOptions::default()).unwrap();
    assert_eq!(report.exit_code(), 1);
    assert!(!report.check("overlap_drift").unwrap().passed());

    let advisory = format!("{TOY}\n[checks.overlap_drift]\ntolerance = 1e-300\nfatal = false\n");
    let report = run(&parse(&advisory), &RunOptions::default()).unwrap();
    assert_eq!(report.exit_code(), 0);
    let strict = RunOptions {
        strict: true,
        ..Default::default()
    };
    assert_eq!(run(&parse(&advisory), &strict).unwrap().exit_code(), 1);

    let disabled = format!("{TOY}\n[checks.overlap_drift]\ntolerance = 1e-300\nenabled = false\n");
    let report = run(&parse(&disabled), &RunOptions::default()).unwrap();
    assert!(report.check("overlap_drift").is_none());
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn dt_override_keeps_stride() {
    let opts = RunOptions {
        dt: Some(5e-4),
        ..Default::default()
    };
    let report = run(&parse(TOY), &opts).unwrap();
    let t = report.column("t").unwrap();
    assert!((t[1] - t[0] - 5e-3).abs() < 1e-15);
}

#[test]
fn route_benchmark_agrees() {
    let rows =
        benchmark_metric_routes(&load("chain_bench"), &[2, 4, 8, 16], &RunOptions::default())
            .unwrap();
    assert_eq!(rows.len(), 8);
    for row in &rows {
        assert!(row.valid && row.max_deviation < BENCH_AGREEMENT, "{row:?}");
    }
    assert!(rows.iter().find(|r| r.n == 2).unwrap().max_deviation < 1e-8);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    write_bench_table(&rows, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("n,route,wall_time_s,max_deviation,valid"));
    assert_eq!(text.lines().count(), 9);

    let frozen =
        benchmark_metric_routes(&load("heisenberg_trivial"), &[], &RunOptions::default()).unwrap();
    assert!(frozen.iter().all(|r| r.max_deviation == 0.0 && r.valid));
    assert!(benchmark_metric_routes(&load("cross_sigma_x"), &[], &RunOptions::default()).is_err());
}
