//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs without the libtest harness so the lines show up in
//! plain `cargo test` output.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nip_core::klein_gordon::{
    build_fv_generator, build_lattice_d, first_tachyonic_step, kg_residual, plane_wave,
    propagate_fv, stationary_kg_metric, LatticeModel, MassProfile,
};
use nip_core::linalg::{biorthogonal_eig, hermitian_eig};
use nip_core::metric::check_quasi_hermiticity;
use nip_core::scenario::{
    benchmark_metric_routes, run, ModelConfig, RunOptions, RunReport, ScenarioConfig,
    BENCH_AGREEMENT,
};
use nip_core::{Error, Result, TimeGrid, C64};

struct Outcome {
    passed: bool,
    detail: String,
}

fn config(name: &str) -> Result<ScenarioConfig> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"));
    ScenarioConfig::from_path(&path)
}

fn diag(report: &RunReport, name: &str) -> f64 {
    report.diagnostic(name).unwrap_or(f64::NAN)
}

fn toy(dt: Option<f64>) -> Result<RunReport> {
    run(
        &config("toy2x2_driven")?,
        &RunOptions {
            dt,
            ..Default::default()
        },
    )
}

fn unitarity() -> Result<Outcome> {
    let report = toy(None)?;
    let drift = diag(&report, "overlap_drift");
    Ok(Outcome {
        passed: drift <= 1e-9,
        detail: format!("max |<psi_Theta|psi> - initial| / |initial| = {drift:.2e} (<= 1e-9)"),
    })
}

fn metric_from_propagated_basis() -> Result<Outcome> {
    let coarse = diag(&toy(None)?, "metric_flow_g");
    let fine = diag(&toy(Some(5e-4))?, "metric_flow_g");
    let ratio = coarse / fine;
    Ok(Outcome {
        passed: coarse <= 1e-6 && (14.0..=18.0).contains(&ratio),
        detail: format!(
            "flow residual {coarse:.2e} at dt = 1e-3 (<= 1e-6), {fine:.2e} at dt = 5e-4, ratio {ratio:.2} (in [14, 18])"
        ),
    })
}

fn h_tilde() -> Result<Outcome> {
    let gap = diag(&toy(None)?, "h_tilde_gap");
    Ok(Outcome {
        passed: gap <= 1e-6,
        detail: format!("max |G + Sigma - H| / |H| = {gap:.2e} (<= 1e-6)"),
    })
}

fn cross_picture() -> Result<Outcome> {
    let report = run(&config("cross_sigma_x")?, &RunOptions::default())?;
    let dev = diag(&report, "deviation");
    Ok(Outcome {
        passed: dev <= 1e-7,
        detail: format!("max prediction deviation {dev:.2e} (<= 1e-7)"),
    })
}

fn route_equivalence() -> Result<Outcome> {
    let rows = benchmark_metric_routes(
        &config("chain_bench")?,
        &[2, 4, 8, 16],
        &RunOptions::default(),
    )?;
    let mut table = String::new();
    for r in &rows {
        table.push_str(&format!(
            "\n      n = {:>2}  {:<10}  {:>9.4} s  deviation {:.2e}",
            r.n,
            r.route,
            r.wall_time.as_secs_f64(),
            r.max_deviation
        ));
    }
    let worst = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    Ok(Outcome {
        passed: rows.len() == 8 && rows.iter().all(|r| r.valid),
        detail: format!("worst route deviation {worst:.2e} (<= {BENCH_AGREEMENT:e}){table}"),
    })
}

fn kg_stationary() -> Result<Outcome> {
    let model = LatticeModel::from_profile(16, 0.2, MassProfile::constant(1.0))?;
    let d = build_lattice_d(&model, 0.0);
    let h = build_fv_generator(&d);
    let qh = check_quasi_hermiticity(&h, &stationary_kg_metric(&d)?)?;
    let mut expected: Vec<f64> = hermitian_eig(&d)?
        .eigenvalues
        .iter()
        .flat_map(|l| [-l.sqrt(), l.sqrt()])
        .collect();
    expected.sort_by(f64::total_cmp);
    let found = biorthogonal_eig(&h)?.eigenvalues;
    let gap = found
        .iter()
        .zip(&expected)
        .map(|(e, x)| (e - C64::new(*x, 0.0)).norm())
        .fold(0.0, f64::max);
    Ok(Outcome {
        passed: qh <= 1e-12 && gap <= 1e-9 && found.len() == 32,
        detail: format!(
            "quasi-Hermiticity residual {qh:.2e} (<= 1e-12), eigenvalue gap to +-sqrt(lambda) {gap:.2e} (<= 1e-9)"
        ),
    })
}

fn kg_dynamics() -> Result<Outcome> {
    let mass = MassProfile {
        mu1: 0.1,
        nu: 1.0,
        ..MassProfile::constant(1.0)
    };
    let model = LatticeModel::from_profile(16, 0.2, mass)?;
    let k = model.dirichlet_wavenumber(1);
    let initial = plane_wave(&model, k, model.dispersion(k, 1.0));
    let residual = |stride: usize| -> Result<f64> {
        let grid = TimeGrid::new(0.0, 2.0, 1e-3, stride)?;
        kg_residual(&propagate_fv(&model, &initial, &grid)?, &model)
    };
    let (r40, r20, r10) = (residual(40)?, residual(20)?, residual(10)?);
    let (a, b) = (r40 / r20, r20 / r10);
    let second_order = |x: f64| (3.5..=4.5).contains(&x);
    Ok(Outcome {
        passed: second_order(a) && second_order(b) && r10 <= 1e-4,
        detail: format!(
            "residual {r40:.2e} / {r20:.2e} / {r10:.2e} at Delta = 4e-2 / 2e-2 / 1e-2, ratios {a:.2} {b:.2} (~4), final <= 1e-4"
        ),
    })
}

fn kg_unitarity() -> Result<Outcome> {
    let report = run(&config("kg_driven")?, &RunOptions::default())?;
    let overlap = diag(&report, "overlap_drift");
    let flow = diag(&report, "omega_flow");
    Ok(Outcome {
        passed: overlap <= 1e-8 && flow <= 1e-7,
        detail: format!(
            "overlap drift {overlap:.2e} (<= 1e-8), |Omega^dagger Omega - Theta| / |Theta| {flow:.2e} (<= 1e-7)"
        ),
    })
}

fn isospectral() -> Result<Outcome> {
    let report = toy(None)?;
    let q = diag(&report, "q_spectrum_drift");
    let h = diag(&report, "h_spectrum_drift");
    let forms = diag(&report, "heisenberg_form_gap");
    Ok(Outcome {
        passed: q <= 1e-8 && h <= 1e-8 && forms <= 1e-8,
        detail: format!(
            "Q drift {q:.2e}, H drift {h:.2e}, Sigma-form vs G-form {forms:.2e} (all <= 1e-8)"
        ),
    })
}

fn failure_mode() -> Result<Outcome> {
    let cfg = config("kg_tachyonic")?;
    let ModelConfig::KgLattice {
        n_sites, dx, mass, ..
    } = &cfg.model
    else {
        return Ok(Outcome {
            passed: false,
            detail: "kg_tachyonic is not a lattice model".into(),
        });
    };
    let model = LatticeModel::from_profile(*n_sites, *dx, mass.to_profile())?;
    let grid = cfg.grid.to_grid()?;
    let Some(crossing) = first_tachyonic_step(&model, &grid)? else {
        return Ok(Outcome {
            passed: false,
            detail: "no eigenvalue crossing on the grid".into(),
        });
    };
    Ok(match run(&cfg, &RunOptions::default()) {
        Err(Error::MetricDegenerated { t, .. }) => {
            let step = ((t - grid.t_start()) / grid.dt()).round() as i64;
            let off = (step - crossing as i64).abs();
            Outcome {
                passed: off <= 1,
                detail: format!(
                    "breakdown at t = {t:.4} (step {step}), eigensolve crossing at step {crossing}, {off} step(s) apart (<= 1)"
                ),
            }
        }
        other => Outcome {
            passed: false,
            detail: format!(
                "expected a metric breakdown, got {:?}",
                other.map(|r| r.name)
            ),
        },
    })
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "unitarity by compensation",
            Duration::from_secs(1),
            unitarity,
        ),
        (
            "metric from propagated basis",
            Duration::from_secs(5),
            metric_from_propagated_basis,
        ),
        ("G + Sigma = H", Duration::from_secs(5), h_tilde),
        (
            "cross-picture equivalence",
            Duration::from_secs(2),
            cross_picture,
        ),
        (
            "metric route equivalence",
            Duration::from_secs(30),
            route_equivalence,
        ),
        (
            "KG stationary metric",
            Duration::from_secs(1),
            kg_stationary,
        ),
        (
            "KG second-order residual",
            Duration::from_secs(10),
            kg_dynamics,
        ),
        (
            "KG unitarity and Dyson flow",
            Duration::from_secs(30),
            kg_unitarity,
        ),
        ("isospectral flows", Duration::from_secs(30), isospectral),
        ("tachyonic breakdown", Duration::from_secs(30), failure_mode),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok(o) => (o.passed && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {detail} [{:.2} s, budget {} s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs(),
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
