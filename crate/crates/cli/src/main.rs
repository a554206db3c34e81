//! `nip`: run, validate, benchmark and cross-check scenario files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nip_core::scenario::{self, fmt, RunOptions, RunReport, ScenarioConfig};

const DEFAULT_OUT_DIR: &str = "nip-out";

#[derive(Parser, Debug)]
#[command(
    name = "nip",
    version,
    about = "Non-Hermitian interaction picture scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its CSV files.
    Run(RunArgs),
    /// Validate a scenario without running it.
    Check {
        config: PathBuf,
        /// Override grid.dt.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Time the operator-ODE and basis routes to the metric.
    Bench {
        config: PathBuf,
        /// Comma-separated sizes, e.g. 2,4,8 (chain models only).
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[command(flatten)]
        out: OutArg,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Compare the two pictures of a `cross` scenario.
    Cross(RunArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output directory; defaults to $NIP_OUT_DIR, then output.dir of the
    /// config, then ./nip-out.
    #[arg(long, env = "NIP_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    config: PathBuf,
    #[command(flatten)]
    out: OutArg,
    /// Override grid.dt (the sample stride is kept).
    #[arg(long)]
    dt: Option<f64>,
    /// Treat every enabled check as fatal.
    #[arg(long)]
    strict: bool,
}

fn out_dir(out: &OutArg, config: &ScenarioConfig) -> PathBuf {
    out.out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn print_report(report: &RunReport) {
    println!(
        "{} ({}): {} samples",
        report.name,
        report.kind,
        report.rows.len()
    );
    for c in &report.checks {
        println!(
            "  {} {:<24} {:>12.3e} <= {:.1e}{}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            if c.fatal { "" } else { " (diagnostic)" }
        );
    }
    if let Some(p) = &report.csv_path {
        println!("  samples: {}", p.display());
    }
    if let Some(p) = &report.summary_path {
        println!("  summary: {}", p.display());
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, nip_core::Error> {
    ScenarioConfig::from_path(path)
}

fn run(args: &RunArgs, cross: bool) -> Result<ExitCode, nip_core::Error> {
    let config = load(&args.config)?;
    let options = RunOptions {
        out_dir: Some(out_dir(&args.out, &config)),
        dt: args.dt,
        strict: args.strict,
    };
    let report = if cross {
        scenario::cross_check(&config, &options)?
    } else {
        scenario::run(&config, &options)?
    };
    print_report(&report);
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args, false),
        Command::Cross(args) => run(args, true),
        Command::Check { config, dt } => load(config)
            .and_then(|c| {
                scenario::check(
                    &c,
                    &RunOptions {
                        dt: *dt,
                        ..RunOptions::default()
                    },
                )
            })
            .map(|s| {
                println!(
                    "{}: ok ({} model, dimension {}, {} steps, checks: {})",
                    s.config.name,
                    s.kind(),
                    s.dim(),
                    s.grid.steps(),
                    s.check_names().join(", ")
                );
                ExitCode::SUCCESS
            }),
        Command::Bench {
            config,
            dims,
            out,
            dt,
        } => load(config).and_then(|c| {
            let options = RunOptions {
                dt: *dt,
                ..RunOptions::default()
            };
            let rows = scenario::benchmark_metric_routes(&c, dims, &options)?;
            println!(
                "{:>5} {:<11} {:>14} {:>14} valid",
                "n", "route", "wall_time_s", "deviation"
            );
            for r in &rows {
                println!(
                    "{:>5} {:<11} {:>14} {:>14.3e} {}",
                    r.n,
                    r.route,
                    fmt(r.wall_time.as_secs_f64()),
                    r.max_deviation,
                    r.valid
                );
            }
            let dir = out_dir(out, &c);
            std::fs::create_dir_all(&dir).map_err(|source| nip_core::Error::Io {
                path: dir.clone(),
                source,
            })?;
            let path = dir.join(format!("{}_bench.csv", c.name));
            scenario::write_bench_table(&rows, &path)?;
            println!("table: {}", path.display());
            Ok(if rows.iter().all(|r| r.valid) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
