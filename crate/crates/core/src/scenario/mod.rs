//! Config-driven runs: model registry, orchestration and CSV reports.
//!
//! A scenario file names a model (an explicit toy generator, a scalable
//! driven chain, a Klein-Gordon lattice, or a Hermitian reference picture),
//! a time grid, initial data and the residual checks that decide the exit
//! status of a run.

mod config;
pub mod expr;
mod report;

pub use config::{
    BasisConfig, BoundaryChoice, CheckConfig, GaugeChoice, GridConfig, InitialConfig, MassConfig,
    ModelConfig, OutputConfig, ProfileConfig, ScenarioConfig,
};
pub use report::{fmt, CheckOutcome, RunReport};

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::basis::BiorthogonalBasis;
use crate::error::{Error, Result};
use crate::evolution::{
    nip_pipeline, propagate_basis, GeneratorFunction, PipelineOptions, ResidualLog, TimeGrid,
};
use crate::klein_gordon::{kg_residual, kg_scenario_with, plane_wave, KgOptions, LatticeModel};
use crate::linalg::{
    biorthogonal_eig_with, eigenvalues, inverse, DualStateVector, Operator, StateVector,
    Tolerances, C64,
};
use crate::metric::{
    factorize_in_gauge, metric_from_basis, solve_metric_ode, spectral_operator, SpectralHamiltonian,
};
use crate::oracle::{cross_picture_check, TextbookSnapshot, DEFAULT_PROBE_STEP};
use expr::{constant_matrix, constant_vector, MatrixExpr};
use report::write_table;

/// Command-line style overrides applied on top of a config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Where to write CSV output; falls back to `output.dir` of the config.
    /// Nothing is written when both are absent.
    pub out_dir: Option<PathBuf>,
    /// Replaces `grid.dt`; the sample stride is kept.
    pub dt: Option<f64>,
    /// Makes every enabled check fatal.
    pub strict: bool,
}

/// Checks understood by generator-driven runs.
pub const PIPELINE_CHECKS: &[&str] = &[
    "overlap_drift",
    "gram_deviation",
    "completeness_deviation",
    "quasi_hermiticity_h",
    "quasi_hermiticity_q",
    "metric_flow_sigma",
    "metric_flow_g",
    "h_tilde_gap",
    "h_spectrum_drift",
    "q_spectrum_drift",
    "heisenberg_form_gap",
];
/// Additional checks of Klein-Gordon runs.
pub const KG_CHECKS: &[&str] = &["krein_drift", "omega_flow", "kg_residual"];
/// Checks of Hermitian cross-picture runs.
pub const CROSS_CHECKS: &[&str] = &["deviation", "textbook_norm_drift", "overlap_drift"];

fn default_tolerance(name: &str) -> f64 {
    match name {
        "gram_deviation"
        | "completeness_deviation"
        | "quasi_hermiticity_q"
        | "h_tilde_gap"
        | "heisenberg_form_gap"
        | "deviation" => 1e-6,
        "metric_flow_sigma" | "metric_flow_g" => 1e-5,
        "omega_flow" => 1e-7,
        "kg_residual" => 1e-3,
        _ => 1e-8,
    }
}

fn enabled_by_default(kind: &str, name: &str) -> bool {
    match kind {
        "cross" => name == "deviation",
        _ => matches!(
            name,
            "overlap_drift"
                | "gram_deviation"
                | "completeness_deviation"
                | "quasi_hermiticity_h"
                | "h_tilde_gap"
                | "heisenberg_form_gap"
                | "krein_drift"
                | "omega_flow"
        ),
    }
}

#[derive(Clone, Debug, PartialEq)]
struct CheckSpec {
    name: String,
    tolerance: f64,
    fatal: bool,
}

#[derive(Clone, Debug)]
enum CompiledModel {
    Generator(GeneratorFunction),
    Kg(LatticeModel),
    Cross {
        omega: GeneratorFunction,
        h: GeneratorFunction,
        dt_probe: f64,
        psi0: StateVector,
        q_textbook: Operator,
    },
}

/// A validated, compiled scenario ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: TimeGrid,
    model: CompiledModel,
    checks: Vec<CheckSpec>,
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        self.config.model.kind()
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            CompiledModel::Generator(g) => g.dim(),
            CompiledModel::Kg(m) => 2 * m.n_sites(),
            CompiledModel::Cross { omega, .. } => omega.dim(),
        }
    }

    /// Names of the enabled checks, in report order.
    pub fn check_names(&self) -> Vec<&str> {
        self.checks.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Parses and validates a scenario file without running it.
pub fn check_file(path: &Path, options: &RunOptions) -> Result<Scenario> {
    check(&ScenarioConfig::from_path(path)?, options)
}

/// Validates a config: grid, model parameters, expressions (evaluated once at
/// `t_start`), dimensions of the initial data, and check names.
pub fn check(config: &ScenarioConfig, options: &RunOptions) -> Result<Scenario> {
    let mut config = config.clone();
    if let Some(dt) = options.dt {
        config.grid.dt = dt;
    }
    if config.name.is_empty()
        || config
            .name
            .chars()
            .any(|c| !(c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'))
    {
        return Err(Error::config(
            "name",
            "use letters, digits, '_', '-' or '.' only",
        ));
    }
    let grid = config.grid.to_grid()?;
    let t0 = grid.t_start();
    let model = compile_model(&config, t0)?;
    let dim = match &model {
        CompiledModel::Generator(g) => g.dim(),
        CompiledModel::Kg(m) => 2 * m.n_sites(),
        CompiledModel::Cross { omega, .. } => omega.dim(),
    };
    validate_initial(&config, &model, dim)?;
    let checks = compile_checks(&config, options.strict)?;
    Ok(Scenario {
        config,
        grid,
        model,
        checks,
    })
}

fn eval_at(g: &GeneratorFunction, t: f64, path: &str) -> Result<Operator> {
    g.eval(t)
        .map_err(|e| Error::config(path, format!("at t = {t}: {e}")))
}

fn compile_model(config: &ScenarioConfig, t0: f64) -> Result<CompiledModel> {
    Ok(match &config.model {
        ModelConfig::Toy { generator } => {
            let g = MatrixExpr::compile(generator, "model.generator")?.into_generator();
            eval_at(&g, t0, "model.generator")?;
            CompiledModel::Generator(g)
        }
        ModelConfig::Chain {
            n,
            onsite,
            forward,
            backward,
            drive,
            frequency,
        } => {
            if *n < 2 {
                return Err(Error::config("model.n", "chain needs at least 2 sites"));
            }
            for (name, value) in [
                ("onsite", onsite),
                ("forward", forward),
                ("backward", backward),
                ("drive", drive),
                ("frequency", frequency),
            ] {
                if !value.is_finite() {
                    return Err(Error::config(format!("model.{name}"), "must be finite"));
                }
            }
            CompiledModel::Generator(chain_generator(
                *n, *onsite, *forward, *backward, *drive, *frequency,
            ))
        }
        ModelConfig::KgLattice {
            n_sites,
            dx,
            boundary,
            mass,
            complex_mass,
        } => {
            if mass.gamma != 0.0 && !complex_mass {
                return Err(Error::config(
                    "model.mass.gamma",
                    "a complex mass needs `complex_mass = true`",
                ));
            }
            if let ProfileConfig::Gaussian { width, .. } = mass.profile {
                if width.is_nan() || width <= 0.0 {
                    return Err(Error::config(
                        "model.mass.profile.width",
                        "must be positive",
                    ));
                }
            }
            let model = LatticeModel::from_profile(*n_sites, *dx, mass.to_profile())?
                .with_boundary((*boundary).into())
                .with_complex_mass(*complex_mass);
            CompiledModel::Kg(model)
        }
        ModelConfig::Cross {
            omega,
            omega_dot,
            h,
            dt_probe,
        } => {
            let omega_expr = MatrixExpr::compile(omega, "model.omega")?;
            let dim = omega_expr.dim();
            let omega_fn = match omega_dot {
                Some(spec) => {
                    let dot = MatrixExpr::compile(spec, "model.omega_dot")?;
                    if dot.dim() != dim {
                        return Err(Error::config(
                            "model.omega_dot",
                            format!("dimension {} differs from omega ({dim})", dot.dim()),
                        ));
                    }
                    omega_expr
                        .into_generator()
                        .with_derivative(move |t| dot.eval(t))
                }
                None => omega_expr.into_generator(),
            };
            let h_fn = MatrixExpr::compile(h, "model.h")?.into_generator();
            if h_fn.dim() != dim {
                return Err(Error::config(
                    "model.h",
                    format!("dimension {} differs from omega ({dim})", h_fn.dim()),
                ));
            }
            let omega0 = eval_at(&omega_fn, t0, "model.omega")?;
            inverse(&omega0).map_err(|e| Error::config("model.omega", e.to_string()))?;
            let h0 = eval_at(&h_fn, t0, "model.h")?;
            let dt_probe = dt_probe.unwrap_or(DEFAULT_PROBE_STEP);
            if !(dt_probe > 0.0 && dt_probe.is_finite()) {
                return Err(Error::config("model.dt_probe", "must be positive"));
            }
            let initial = &config.initial;
            let psi0 = constant_vector(
                initial
                    .psi0
                    .as_ref()
                    .ok_or_else(|| Error::config("initial.psi0", "required for cross models"))?,
                "initial.psi0",
            )?;
            let q_textbook = constant_matrix(
                initial.q_textbook.as_ref().ok_or_else(|| {
                    Error::config("initial.q_textbook", "required for cross models")
                })?,
                "initial.q_textbook",
            )?;
            if psi0.dim() != dim {
                return Err(Error::config(
                    "initial.psi0",
                    format!("length {} differs from dimension {dim}", psi0.dim()),
                ));
            }
            if q_textbook.dim() != dim {
                return Err(Error::config(
                    "initial.q_textbook",
                    format!("dimension {} differs from {dim}", q_textbook.dim()),
                ));
            }
            TextbookSnapshot::new(h0, psi0.clone(), q_textbook.clone())
                .map_err(|e| Error::config("model.h / initial.q_textbook", e.to_string()))?;
            CompiledModel::Cross {
                omega: omega_fn,
                h: h_fn,
                dt_probe,
                psi0,
                q_textbook,
            }
        }
    })
}

fn validate_initial(config: &ScenarioConfig, model: &CompiledModel, dim: usize) -> Result<()> {
    let initial = &config.initial;
    if matches!(model, CompiledModel::Cross { .. }) {
        return Ok(());
    }
    let check_dim = |path: &str, found: usize| {
        if found == dim {
            Ok(())
        } else {
            Err(Error::config(
                path,
                format!("dimension {found} differs from the model dimension {dim}"),
            ))
        }
    };
    if let Some(e) = &initial.energies {
        check_dim("initial.energies", e.len())?;
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("initial.energies", "must be finite"));
        }
    }
    if let CompiledModel::Kg(m) = model {
        for field in ["psi0", "q", "q_textbook", "k"] {
            let given = match field {
                "psi0" => initial.psi0.is_some(),
                "q" => initial.q.is_some(),
                "q_textbook" => initial.q_textbook.is_some(),
                _ => initial.k.is_some(),
            };
            if given {
                return Err(Error::config(
                    format!("initial.{field}"),
                    "not used by kg_lattice models; the initial state is a standing wave (`mode`)",
                ));
            }
        }
        if initial.basis != BasisConfig::default() {
            return Err(Error::config(
                "initial.basis",
                "kg_lattice models always start from the eigenbasis",
            ));
        }
        let mode = initial.mode.unwrap_or(1);
        if mode == 0 || mode > m.n_sites() {
            return Err(Error::config(
                "initial.mode",
                format!("must lie in 1..={}", m.n_sites()),
            ));
        }
        return Ok(());
    }
    if initial.mode.is_some() {
        return Err(Error::config(
            "initial.mode",
            "only used by kg_lattice models",
        ));
    }
    match &initial.basis {
        BasisConfig::Named(n) if n == "eigen" || n == "standard" => {}
        BasisConfig::Named(n) => {
            return Err(Error::config(
                "initial.basis",
                format!("unknown basis `{n}`; use \"eigen\", \"standard\" or {{ kets = [...] }}"),
            ))
        }
        BasisConfig::Kets { kets } => {
            let m = constant_matrix(kets, "initial.basis.kets")?;
            check_dim("initial.basis.kets", m.dim())?;
        }
    }
    if let Some(p) = &initial.psi0 {
        check_dim("initial.psi0", constant_vector(p, "initial.psi0")?.dim())?;
    }
    if initial.q.is_some() && initial.q_textbook.is_some() {
        return Err(Error::config(
            "initial.q",
            "give either `q` or `q_textbook`, not both",
        ));
    }
    if let Some(q) = &initial.q {
        check_dim("initial.q", constant_matrix(q, "initial.q")?.dim())?;
    }
    if let Some(q) = &initial.q_textbook {
        let q = constant_matrix(q, "initial.q_textbook")?;
        check_dim("initial.q_textbook", q.dim())?;
        if q.hermiticity_residual() > 1e-10 * q.norm() {
            return Err(Error::config("initial.q_textbook", "must be Hermitian"));
        }
    }
    if let Some(k) = &initial.k {
        let k = MatrixExpr::compile(k, "initial.k")?;
        check_dim("initial.k", k.dim())?;
    }
    Ok(())
}

fn compile_checks(config: &ScenarioConfig, strict: bool) -> Result<Vec<CheckSpec>> {
    let kind = config.model.kind();
    let known: Vec<&str> = match kind {
        "cross" => CROSS_CHECKS.to_vec(),
        "kg_lattice" => PIPELINE_CHECKS.iter().chain(KG_CHECKS).copied().collect(),
        _ => PIPELINE_CHECKS.to_vec(),
    };
    for (name, check) in &config.checks {
        if !known.contains(&name.as_str()) {
            return Err(Error::config(
                format!("checks.{name}"),
                format!(
                    "unknown check for {kind} models; known: {}",
                    known.join(", ")
                ),
            ));
        }
        if let Some(tol) = check.tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::config(
                    format!("checks.{name}.tolerance"),
                    "must be positive",
                ));
            }
        }
    }
    let complex = matches!(
        config.model,
        ModelConfig::KgLattice {
            complex_mass: true,
            ..
        }
    );
    let mut out = Vec::new();
    for name in known {
        let user = config.checks.get(name);
        let enabled = user.map_or(enabled_by_default(kind, name), |c| c.enabled);
        if !enabled {
            continue;
        }
        let tolerance = user
            .and_then(|c| c.tolerance)
            .unwrap_or_else(|| default_tolerance(name));
        let fatal = strict || user.map_or(!complex, |c| c.fatal);
        out.push(CheckSpec {
            name: name.to_string(),
            tolerance,
            fatal,
        });
    }
    Ok(out)
}

/// The driven chain generator: on-site `onsite (j - (n-1)/2)`, right hopping
/// `forward (1 + drive sin(frequency t))`, left hopping `backward`. Its
/// spectrum is real and simple whenever both hoppings are positive.
pub fn chain_generator(
    n: usize,
    onsite: f64,
    forward: f64,
    backward: f64,
    drive: f64,
    frequency: f64,
) -> GeneratorFunction {
    GeneratorFunction::new(n, move |t| {
        let hop = forward * (1.0 + drive * (frequency * t).sin());
        let centre = (n as f64 - 1.0) / 2.0;
        Operator::from_matrix_unchecked(DMatrix::from_fn(n, n, |r, c| {
            C64::new(
                if r == c {
                    onsite * (r as f64 - centre)
                } else if c == r + 1 {
                    hop
                } else if r == c + 1 {
                    backward
                } else {
                    0.0
                },
                0.0,
            )
        }))
    })
}

fn initial_basis(
    config: &InitialConfig,
    g0: &Operator,
    tol: &Tolerances,
) -> Result<BiorthogonalBasis> {
    match &config.basis {
        BasisConfig::Named(n) if n == "standard" => Ok(BiorthogonalBasis::standard(g0.dim())),
        BasisConfig::Named(_) => Ok(biorthogonal_eig_with(g0, tol)?.into()),
        BasisConfig::Kets { kets } => {
            // rows of the config are the kets
            let r = constant_matrix(kets, "initial.basis.kets")?
                .matrix()
                .transpose();
            let r = Operator::from_matrix(r)?;
            let bras = inverse(&r)?.adjoint();
            let dim = r.dim();
            let kets = (0..dim)
                .map(|k| StateVector::from_vector(r.matrix().column(k).into_owned()))
                .collect();
            let bras = (0..dim)
                .map(|k| DualStateVector::from_vector(bras.matrix().column(k).into_owned()))
                .collect();
            BiorthogonalBasis::new(kets, bras)
        }
    }
}

/// `Re <L_n|G|R_n>`, the eigenvalues of `G` for an eigenbasis.
fn diagonal_energies(basis: &BiorthogonalBasis, g0: &Operator) -> Vec<f64> {
    (0..basis.len())
        .map(|n| basis.bra(n).overlap(&g0.apply(&basis.ket(n))).re)
        .collect()
}

/// Runs a scenario file.
pub fn run_file(path: &Path, options: &RunOptions) -> Result<RunReport> {
    run(&ScenarioConfig::from_path(path)?, options)
}

/// Validates and executes a config, writes its CSV files when an output
/// directory is known, and returns the report. Cross models are delegated to
/// [`cross_check`].
pub fn run(config: &ScenarioConfig, options: &RunOptions) -> Result<RunReport> {
    let scenario = check(config, options)?;
    let mut report = execute(&scenario)?;
    if let Some(dir) = options
        .out_dir
        .as_ref()
        .or(scenario.config.output.dir.as_ref())
    {
        report.write(dir)?;
    }
    Ok(report)
}

/// Runs the two-picture comparison of a cross model.
pub fn cross_check(config: &ScenarioConfig, options: &RunOptions) -> Result<RunReport> {
    if !matches!(config.model, ModelConfig::Cross { .. }) {
        return Err(Error::config(
            "model.kind",
            format!(
                "cross needs a `cross` model, found `{}`",
                config.model.kind()
            ),
        ));
    }
    run(config, options)
}

/// Executes an already validated scenario without writing anything.
pub fn execute(scenario: &Scenario) -> Result<RunReport> {
    let mut report = match &scenario.model {
        CompiledModel::Generator(g) => run_generator(scenario, g)?,
        CompiledModel::Kg(model) => run_kg(scenario, model)?,
        CompiledModel::Cross {
            omega,
            h,
            dt_probe,
            psi0,
            q_textbook,
        } => {
            let result =
                cross_picture_check(omega, h, psi0, q_textbook, &scenario.grid, *dt_probe)?;
            let traj = &result.predictions;
            let mut columns: Vec<String> = ["t", "nip_re", "nip_im", "textbook"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            columns.extend(traj.residuals.names().map(String::from));
            let rows = (0..traj.len())
                .map(|i| {
                    let (nip, reference) = traj.samples[i];
                    let mut row = vec![traj.times[i], nip.re, nip.im, reference];
                    row.extend(traj.residuals.iter().map(|(_, c)| c[i]));
                    row
                })
                .collect();
            let mut report = RunReport {
                columns,
                rows,
                ..RunReport::default()
            };
            summarize(&mut report, &traj.residuals, &scenario.checks, &[])?;
            report
        }
    };
    report.name = scenario.config.name.clone();
    report.kind = scenario.kind().to_string();
    Ok(report)
}

fn pipeline_options(scenario: &Scenario) -> PipelineOptions {
    PipelineOptions {
        gauge: scenario.config.gauge.into(),
        ..PipelineOptions::default()
    }
}

fn run_generator(scenario: &Scenario, g_fn: &GeneratorFunction) -> Result<RunReport> {
    let grid = &scenario.grid;
    let initial = &scenario.config.initial;
    let mut options = pipeline_options(scenario);
    let tol = options.tolerances;
    let g0 = g_fn.eval(grid.t_start())?;
    let basis = initial_basis(initial, &g0, &tol)?;
    let energies = initial
        .energies
        .clone()
        .unwrap_or_else(|| diagonal_energies(&basis, &g0));
    let omega0 = factorize_in_gauge(&basis, &energies, 0.0, options.gauge, &tol)?.omega;
    let q0 = if let Some(q) = &initial.q {
        constant_matrix(q, "initial.q")?
    } else if let Some(q) = &initial.q_textbook {
        let q = constant_matrix(q, "initial.q_textbook")?;
        &(&inverse(&omega0)? * &q) * &omega0
    } else {
        spectral_operator(&basis, &energies)
    };
    if let Some(p) = &initial.psi0 {
        options.psi0 = Some(constant_vector(p, "initial.psi0")?);
    }
    if let Some(k) = &initial.k {
        options.k_fn = Some(MatrixExpr::compile(k, "initial.k")?.into_generator());
    }
    let spec0 = SpectralHamiltonian::new(basis, energies)?;
    let run = nip_pipeline(g_fn, &spec0, &q0, grid, &options)?;
    let mut report = pipeline_table(&run.trajectory, &[])?;
    summarize(
        &mut report,
        &run.trajectory.residuals,
        &scenario.checks,
        &[],
    )?;
    Ok(report)
}

fn pipeline_table(
    traj: &crate::evolution::Trajectory<crate::evolution::NipSample>,
    extra: &[(&str, &[f64])],
) -> Result<RunReport> {
    let dim = traj.samples.first().map_or(0, |s| s.theta.dim());
    let mut columns: Vec<String> = [
        "t",
        "expectation_re",
        "expectation_im",
        "normalized_re",
        "normalized_im",
        "overlap_re",
        "overlap_im",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    columns.extend(traj.residuals.names().map(String::from));
    columns.extend(extra.iter().map(|(n, _)| n.to_string()));
    for k in 0..dim {
        columns.push(format!("h_eig_{k}_re"));
        columns.push(format!("h_eig_{k}_im"));
    }
    let mut rows = Vec::with_capacity(traj.len());
    for (i, s) in traj.samples.iter().enumerate() {
        let norm = s.normalized_expectation();
        let mut row = vec![
            traj.times[i],
            s.expectation.re,
            s.expectation.im,
            norm.re,
            norm.im,
            s.overlap.re,
            s.overlap.im,
        ];
        row.extend(traj.residuals.iter().map(|(_, c)| c[i]));
        row.extend(extra.iter().map(|(_, c)| c[i]));
        for e in eigenvalues(&s.h_spectral)? {
            row.push(e.re);
            row.push(e.im);
        }
        rows.push(row);
    }
    Ok(RunReport {
        columns,
        rows,
        ..RunReport::default()
    })
}

fn run_kg(scenario: &Scenario, model: &LatticeModel) -> Result<RunReport> {
    let grid = &scenario.grid;
    let initial = &scenario.config.initial;
    let t0 = grid.t_start();
    let k = model.dirichlet_wavenumber(initial.mode.unwrap_or(1));
    let mass0 = model.mass_sq(0, t0).re;
    let omega = model.dispersion(k, mass0);
    let state = plane_wave(model, k, if omega.is_finite() { omega } else { 0.0 });
    let options = KgOptions {
        energies: initial.energies.clone(),
        pipeline: pipeline_options(scenario),
    };
    let run = kg_scenario_with(model, &state, grid, &options)?;
    let extra_names = ["krein_drift", "omega_flow", "d_min_eigenvalue"];
    let extra: Vec<(&str, &[f64])> = extra_names
        .iter()
        .map(|n| (*n, run.states.residuals.column(n).unwrap_or(&[])))
        .collect();
    let mut report = pipeline_table(&run.nip.trajectory, &extra)?;

    let mut log = run.nip.trajectory.residuals.clone();
    for (n, c) in &extra {
        for &v in c.iter() {
            log.record(n, v);
        }
    }
    let wants_kg = scenario.checks.iter().any(|c| c.name == "kg_residual");
    let kg = if wants_kg || run.states.len() >= 5 {
        match kg_residual(&run.states, model) {
            Ok(r) => Some(r),
            Err(e) if wants_kg => return Err(Error::config("checks.kg_residual", e.to_string())),
            Err(_) => None,
        }
    } else {
        None
    };
    let scalars: Vec<(&str, f64)> = kg.map(|r| ("kg_residual", r)).into_iter().collect();
    summarize(&mut report, &log, &scenario.checks, &scalars)?;
    Ok(report)
}

fn summarize(
    report: &mut RunReport,
    log: &ResidualLog,
    checks: &[CheckSpec],
    scalars: &[(&str, f64)],
) -> Result<()> {
    for (name, column) in log.iter() {
        let value = if name.ends_with("min_eigenvalue") {
            column.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            log.max(name).unwrap_or(f64::NAN)
        };
        // a NaN in the column makes the fold above skip it; keep it visible
        let value = if column.iter().any(|x| x.is_nan()) {
            f64::NAN
        } else {
            value
        };
        report.diagnostics.push((name.to_string(), value));
    }
    for (name, value) in scalars {
        report.diagnostics.push((name.to_string(), *value));
    }
    for c in checks {
        let value = report.diagnostic(&c.name).ok_or_else(|| {
            Error::config(
                format!("checks.{}", c.name),
                "this residual is not available for the run (metric-flow residuals need at least 5 uniformly spaced samples)",
            )
        })?;
        report.checks.push(CheckOutcome {
            name: c.name.clone(),
            value,
            tolerance: c.tolerance,
            fatal: c.fatal,
        });
    }
    Ok(())
}

/// One row of the route benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    /// `metric_ode` (direct operator flow) or `propagated_basis` (propagated basis).
    pub route: &'static str,
    pub wall_time: Duration,
    /// Largest `|Theta_ode - Theta_basis| / |Theta_basis|` over the samples,
    /// shared by both rows of the same `n`.
    pub max_deviation: f64,
    /// Whether the routes agree to better than [`BENCH_AGREEMENT`].
    pub valid: bool,
}

/// Agreement required for a timing row to count.
pub const BENCH_AGREEMENT: f64 = 1e-6;

/// Times the two ways of obtaining `Theta(t)` for each dimension in `dims`:
/// integrating the operator equation directly, and propagating a
/// biorthonormal basis and summing its bras. Chain models are rebuilt at each
/// size; other generator models only run at their own dimension.
pub fn benchmark_metric_routes(
    config: &ScenarioConfig,
    dims: &[usize],
    options: &RunOptions,
) -> Result<Vec<BenchRow>> {
    let scenario = check(config, options)?;
    let grid = scenario.grid;
    let generators: Vec<GeneratorFunction> = match (&scenario.config.model, &scenario.model) {
        (
            ModelConfig::Chain {
                n,
                onsite,
                forward,
                backward,
                drive,
                frequency,
            },
            _,
        ) => {
            let sizes = if dims.is_empty() {
                vec![*n]
            } else {
                dims.to_vec()
            };
            if let Some(bad) = sizes.iter().find(|&&d| d < 2) {
                return Err(Error::config("dims", format!("size {bad} is below 2")));
            }
            sizes
                .iter()
                .map(|&d| chain_generator(d, *onsite, *forward, *backward, *drive, *frequency))
                .collect()
        }
        (_, CompiledModel::Generator(g)) => {
            if dims.iter().any(|&d| d != g.dim()) {
                return Err(Error::config(
                    "model.kind",
                    "only chain models can be resized; drop --dims or use a chain model",
                ));
            }
            vec![g.clone()]
        }
        (_, CompiledModel::Kg(model)) => {
            if dims.iter().any(|&d| d != 2 * model.n_sites()) {
                return Err(Error::config(
                    "model.kind",
                    "only chain models can be resized; drop --dims or use a chain model",
                ));
            }
            vec![crate::klein_gordon::fv_generator_fn(model)]
        }
        (_, CompiledModel::Cross { .. }) => {
            return Err(Error::config(
                "model.kind",
                "the route benchmark needs a generator model",
            ))
        }
    };
    let mut rows = Vec::new();
    for g in generators {
        let tol = Tolerances::default();
        let g0 = g.eval(grid.t_start())?;
        let basis = initial_basis(&scenario.config.initial, &g0, &tol)?;
        let theta0 = metric_from_basis(&basis.bra_vectors())?;

        let start = Instant::now();
        let ode = solve_metric_ode(&g, &theta0, &grid)?;
        let ode_time = start.elapsed();

        let start = Instant::now();
        let bases = propagate_basis(&g, &basis, &grid)?;
        let thetas = bases
            .samples
            .iter()
            .map(|b| metric_from_basis(&b.bra_vectors()))
            .collect::<Result<Vec<_>>>()?;
        let basis_time = start.elapsed();

        let max_deviation = ode
            .samples
            .iter()
            .zip(&thetas)
            .map(|(a, b)| a.distance(b) / b.norm())
            .fold(
                0.0,
                |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x) },
            );
        let valid = max_deviation < BENCH_AGREEMENT;
        for (route, wall_time) in [("metric_ode", ode_time), ("propagated_basis", basis_time)] {
            rows.push(BenchRow {
                n: g.dim(),
                route,
                wall_time,
                max_deviation,
                valid,
            });
        }
    }
    Ok(rows)
}

/// Writes the benchmark table as CSV.
pub fn write_bench_table(rows: &[BenchRow], path: &Path) -> Result<()> {
    let header: Vec<String> = ["n", "route", "wall_time_s", "max_deviation", "valid"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_table(
        path,
        &header,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.route.to_string(),
                fmt(r.wall_time.as_secs_f64()),
                fmt(r.max_deviation),
                r.valid.to_string(),
            ]
        }),
    )
}
