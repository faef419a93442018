//! `offload-sim`: run offloading scenarios and sweeps, write CSV.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use offload_core::config::{load_experiment, Experiment};
use offload_core::metrics::{run_scenario, run_seed, AggregateResult, CsvRow, ScenarioSpec};
use offload_core::oracle::{compare, simulate_stepped, Deviation, BYTE_TOLERANCE, TIME_TOLERANCE};
use offload_core::sweep::run_sweep;
use offload_core::{realize_route, run_trip, Error, ErrorSpec, Policy};

#[derive(Parser)]
#[command(name = "offload-sim", version, about = "Vehicular WiFi offloading simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (or every point of a sweep file) and write CSV.
    Run {
        /// Scenario or sweep file, or a bundled name such as `default_dt` or `fig2a`.
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a sweep file and write CSV, one block of rows per swept value.
    Sweep {
        /// Sweep file or bundled recipe name (`fig2a` ... `fig9b`).
        #[arg(long)]
        sweep: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Compare the trip engine with the time-stepped reference simulator.
    OracleCheck {
        #[arg(long)]
        scenario: String,
        /// Number of seeds per scenario.
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        /// Reference simulator step in seconds.
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Comma-separated policies, e.g. `prefetch-dt,no-prediction`.
    #[arg(long, value_delimiter = ',')]
    policy: Option<Vec<Policy>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    time_error: Option<f64>,
    #[arg(long = "thr-error")]
    throughput_error: Option<f64>,
}

impl RunOpts {
    fn apply(&self, spec: &mut ScenarioSpec) -> offload_core::Result<()> {
        if let Some(p) = &self.policy {
            for policy in p {
                policy.check(spec.task.class)?;
            }
            spec.policies = p.clone();
        }
        if let Some(r) = self.runs {
            if r == 0 {
                return Err(Error::Config {
                    source_name: "--runs".into(),
                    message: "must be at least 1".into(),
                });
            }
            spec.runs = r;
        }
        let e = spec.errors;
        spec.errors = ErrorSpec::new(
            self.time_error.unwrap_or(e.time_error),
            self.throughput_error.unwrap_or(e.throughput_error),
            self.seed.unwrap_or(e.seed),
        )?;
        Ok(())
    }
}

fn load(name: &str, opts: &RunOpts) -> offload_core::Result<Experiment> {
    let mut exp = load_experiment(name)?;
    match &mut exp {
        Experiment::Scenario(s) => opts.apply(s)?,
        Experiment::Sweep(s) => {
            opts.apply(&mut s.base)?;
            s.points()?;
        }
    }
    Ok(exp)
}

fn csv_text(results: &[AggregateResult]) -> offload_core::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in results {
        for row in r.csv_rows() {
            w.serialize::<&CsvRow>(&row).map_err(|e| io::Error::other(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn emit(text: &str, out: Option<&PathBuf>) -> offload_core::Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn summarize(results: &[AggregateResult]) {
    for r in results {
        eprintln!("{}", r.scenario_id);
        for p in &r.policies {
            let stats: Vec<String> = p
                .stats
                .iter()
                .map(|s| match s.ci95 {
                    Some(ci) => format!("{} {:.2} ± {:.2}", s.metric.name(), s.mean, ci),
                    None => format!("{} {:.2}", s.metric.name(), s.mean),
                })
                .collect();
            eprintln!(
                "  {:<14} {}  (missed deadline {}/{})",
                p.policy.name(),
                stats.join(", "),
                p.infeasible_count,
                p.outcomes.len()
            );
        }
    }
}

fn cmd_run(name: &str, opts: &RunOpts) -> offload_core::Result<()> {
    let results = match load(name, opts)? {
        Experiment::Scenario(s) => vec![run_scenario(&s)?],
        Experiment::Sweep(s) => run_sweep(&s)?.points,
    };
    let text = csv_text(&results)?;
    emit(&text, opts.out.as_ref())?;
    summarize(&results);
    Ok(())
}

fn cmd_sweep(name: &str, opts: &RunOpts) -> offload_core::Result<()> {
    match load(name, opts)? {
        Experiment::Sweep(s) => {
            let results = run_sweep(&s)?.points;
            emit(&csv_text(&results)?, opts.out.as_ref())?;
            summarize(&results);
            Ok(())
        }
        Experiment::Scenario(_) => Err(Error::Config {
            source_name: name.to_string(),
            message: "not a sweep file (missing `parameter`)".into(),
        }),
    }
}

/// Returns whether every seed stayed within tolerance.
fn cmd_oracle_check(name: &str, seeds: usize, dt: f64, opts: &RunOpts) -> offload_core::Result<bool> {
    if !(dt > 0.0) {
        return Err(Error::Config {
            source_name: "--dt".into(),
            message: "must be positive".into(),
        });
    }
    let scenarios = match load(name, opts)? {
        Experiment::Scenario(s) => vec![s],
        Experiment::Sweep(s) => s.points()?,
    };
    let mut report = String::from("scenario_id,seed,max_bytes_rel,max_time_s,pass\n");
    let mut all_ok = true;
    for s in &scenarios {
        let nominal = s.nominal_route()?;
        for k in 0..seeds {
            let errors = s.errors.with_seed(run_seed(s.errors.seed, k));
            let realized = realize_route(&nominal, &errors);
            let mut worst = Deviation::ZERO;
            for &p in &s.policies {
                let engine = run_trip(&realized, &nominal, &s.task, p, &errors, &s.energy)?;
                let oracle = simulate_stepped(&realized, &nominal, &s.task, p, &errors, dt)?;
                worst = worst.max(compare(&engine, &oracle, s.task.size_mb));
            }
            let ok = worst.within_tolerance();
            all_ok &= ok;
            report.push_str(&format!("{},{k},{},{},{ok}\n", s.id, worst.bytes_rel, worst.time_s));
        }
    }
    emit(&report, opts.out.as_ref())?;
    eprintln!(
        "oracle check: {} scenario(s) x {seeds} seeds at dt = {dt}s: {} (tolerance {}% bytes, {}s)",
        scenarios.len(),
        if all_ok { "pass" } else { "FAIL" },
        BYTE_TOLERANCE * 100.0,
        TIME_TOLERANCE
    );
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, opts } => cmd_run(scenario, opts).map(|_| true),
        Command::Sweep { sweep, opts } => cmd_sweep(sweep, opts).map(|_| true),
        Command::OracleCheck { scenario, seeds, dt, opts } => cmd_oracle_check(scenario, *seeds, *dt, opts),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
