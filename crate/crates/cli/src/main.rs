use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crosslink_nav::dynamics::{jacobi_constant, RotatingState};
use crosslink_nav::estimation::BiasMode;
use crosslink_nav::observability::observation_effectiveness;
use crosslink_nav::radiometrics::{link_budget_table, LinkBudgetRow, ObservableKind};
use crosslink_nav::scenario::output::{
    effectiveness_table, ensure_dir, estimates_table, measurements_table, rmse_table, truth_table, write_json,
    write_table, Cell, Table,
};
use crosslink_nav::scenario::{
    configured_observables, generate_truth, load_scenario, observability_analysis, run_monte_carlo,
    single_run_result, DynamicsModel, MonteCarloResult, OutputFormat, RunArtifacts, Scenario, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "crosslink", version, about = "Crosslink radionavigation scenarios for a cislunar spacecraft pair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fixed RK4 step (s) for truth and filter; makes reruns byte-identical.
    #[arg(long)]
    fixed_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the reference trajectories.
    Propagate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        dynamics: Option<DynamicsArg>,
    },
    /// One filter run against simulated measurements.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        bias_mode: Option<BiasArg>,
    },
    /// Monte Carlo campaign with per-epoch RMSE.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Observability Gramian along the reference trajectory.
    Observability {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        measurement: Option<MeasurementArg>,
    },
    /// Link-budget error figures.
    Linkbudget {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum DynamicsArg {
    Crtbp,
    Nbody,
}

#[derive(Clone, Copy, ValueEnum)]
enum BiasArg {
    Neglect,
    Estimate,
    Consider,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasurementArg {
    Range,
    RangeRate,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => load_scenario(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(h) = common.fixed_step {
        cfg.set_fixed_step(h)?;
    }
    Ok(cfg)
}

fn finish(out: &Path, artifacts: RunArtifacts) -> Result<()> {
    artifacts.verify()?;
    for f in &artifacts.files {
        println!("wrote {}", f.display());
    }
    eprintln!("outputs in {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct PropagationSummary {
    scenario: String,
    model: DynamicsModel,
    duration_days: f64,
    epochs: usize,
    jacobi_initial: [f64; 2],
    jacobi_final: [f64; 2],
    jacobi_relative_drift: [f64; 2],
}

fn propagate(common: &Common, dynamics: Option<DynamicsArg>) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(d) = dynamics {
        cfg.dynamics.model = match d {
            DynamicsArg::Crtbp => DynamicsModel::Crtbp,
            DynamicsArg::Nbody => DynamicsModel::Nbody,
        };
    }
    let truth = generate_truth(&cfg, false)?;
    let units = cfg.units();
    let jacobi = |k: usize, j: usize| jacobi_constant(&RotatingState::from_vector(truth.epochs[k], &truth.states[k][j]), &units);
    let last = truth.len() - 1;
    let c0 = [jacobi(0, 0)?, jacobi(0, 1)?];
    let c1 = [jacobi(last, 0)?, jacobi(last, 1)?];
    let summary = PropagationSummary {
        scenario: cfg.name.clone(),
        model: cfg.dynamics.model,
        duration_days: cfg.dynamics.duration_days,
        epochs: truth.len(),
        jacobi_initial: c0,
        jacobi_final: c1,
        jacobi_relative_drift: [(c1[0] - c0[0]) / c0[0], (c1[1] - c0[1]) / c0[1]],
    };
    ensure_dir(&common.out)?;
    let mut art = RunArtifacts::default();
    art.files.push(write_table(&common.out, "truth", &truth_table(&truth, &units), common.format.into())?);
    art.files.push(write_json(&common.out, "summary.json", &summary)?);
    println!("Jacobi drift: lumio {:.3e}, lpf {:.3e}", summary.jacobi_relative_drift[0], summary.jacobi_relative_drift[1]);
    finish(&common.out, art)
}

fn print_summary(r: &MonteCarloResult) {
    let a = &r.summary.averaged;
    println!("runs used {}/{} (excluded {})", r.runs_used, r.runs_requested, r.runs_excluded);
    println!(
        "position RMSE {:.2} m (after day {}: {:.2} m), 1-sigma {:.2} m ({:.2} m)",
        a.rms_error_pos_m.full,
        r.summary.split_day,
        a.rms_error_pos_m.post_split,
        a.rms_sigma_pos_m.full,
        a.rms_sigma_pos_m.post_split
    );
    println!(
        "velocity RMSE {:.3} mm/s ({:.3} mm/s), 1-sigma {:.3} mm/s ({:.3} mm/s)",
        a.rms_error_vel_mms.full, a.rms_error_vel_mms.post_split, a.rms_sigma_vel_mms.full, a.rms_sigma_vel_mms.post_split
    );
    match r.convergence_epoch_days {
        Some(d) => println!("converged at day {d:.3}"),
        None => println!("did not converge"),
    }
}

fn simulate(common: &Common, seed: Option<u64>, bias: Option<BiasArg>) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(s) = seed {
        cfg.montecarlo.seed = s;
    }
    if let Some(b) = bias {
        cfg.filter.bias_mode = match b {
            BiasArg::Neglect => BiasMode::Neglect,
            BiasArg::Estimate => BiasMode::Estimate,
            BiasArg::Consider => BiasMode::Consider,
        };
    }
    let scenario = Scenario::prepare(cfg)?;
    let run = scenario.run(0)?;
    let result = single_run_result(&scenario, &run);
    let units = scenario.cfg.units();
    let fmt: OutputFormat = common.format.into();
    ensure_dir(&common.out)?;
    let mut art = RunArtifacts::default();
    art.files.push(write_table(&common.out, "truth", &truth_table(&scenario.truth, &units), fmt)?);
    art.files.push(write_table(&common.out, "estimates", &estimates_table(&run, &scenario.cfg), fmt)?);
    art.files.push(write_table(&common.out, "measurements", &measurements_table(&run, &units), fmt)?);
    let eff = observation_effectiveness(&run.filter.records);
    art.files.push(write_table(&common.out, "effectiveness", &effectiveness_table(&eff, &units), fmt)?);
    art.files.push(write_json(&common.out, "summary.json", &result)?);
    if let Some(d) = run.filter.diverged_at {
        eprintln!("run diverged at day {:.3}", units.nd_to_days(d));
    }
    if let (Some(b), Some(s)) = (result.runs[0].final_bias_m, result.runs[0].final_bias_sigma_m) {
        println!("final bias estimate {b:.3} m (1-sigma {s:.3} m)");
    }
    print_summary(&result);
    finish(&common.out, art)
}

fn montecarlo(common: &Common, runs: Option<usize>, seed: Option<u64>, workers: Option<usize>) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(n) = runs {
        cfg.montecarlo.runs = n;
    }
    if let Some(s) = seed {
        cfg.montecarlo.seed = s;
    }
    if workers.is_some() {
        cfg.montecarlo.workers = workers;
    }
    let t = Instant::now();
    let scenario = Scenario::prepare(cfg)?;
    let result = run_monte_carlo(&scenario)?;
    eprintln!("{} runs in {:.1} s", result.runs_requested, t.elapsed().as_secs_f64());
    ensure_dir(&common.out)?;
    let mut art = RunArtifacts::default();
    art.files.push(write_table(&common.out, "rmse", &rmse_table(&result), common.format.into())?);
    art.files.push(write_json(&common.out, "summary.json", &result)?);
    print_summary(&result);
    finish(&common.out, art)
}

fn observability(common: &Common, measurement: Option<MeasurementArg>) -> Result<()> {
    let cfg = load(common)?;
    let kinds = match measurement {
        Some(MeasurementArg::Range) => vec![ObservableKind::Range],
        Some(MeasurementArg::RangeRate) => vec![ObservableKind::RangeRate],
        None => configured_observables(&cfg),
    };
    let report = observability_analysis(&cfg, &kinds)?;
    println!("condition number {:.4e}", report.condition_number);
    println!("unobservability index {:.4e}", report.unobservability_index);
    println!("ranking {}", report.state_ranking.join(" "));
    ensure_dir(&common.out)?;
    let art = RunArtifacts { files: vec![write_json(&common.out, "observability.json", &report)?] };
    finish(&common.out, art)
}

fn linkbudget(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let l = &cfg.link;
    let rows: Vec<LinkBudgetRow> =
        link_budget_table(&l.pn, &l.time_derived, &l.doppler, l.pn_combiner, l.time_derived_combiner);
    for r in &rows {
        println!("{:<30} {:>14.6} {}", r.quantity, r.value, r.unit);
    }
    let table = Table {
        columns: vec!["quantity".into(), "value".into(), "unit".into()],
        rows: rows
            .iter()
            .map(|r| vec![Cell::Text(r.quantity.into()), Cell::Num(r.value), Cell::Text(r.unit.into())])
            .collect(),
    };
    ensure_dir(&common.out)?;
    let art = RunArtifacts { files: vec![write_table(&common.out, "linkbudget", &table, common.format.into())?] };
    finish(&common.out, art)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Propagate { common, dynamics } => propagate(common, *dynamics),
        Command::Simulate { common, seed, bias_mode } => simulate(common, *seed, *bias_mode),
        Command::Montecarlo { common, runs, seed, workers } => montecarlo(common, *runs, *seed, *workers),
        Command::Observability { common, measurement } => observability(common, *measurement),
        Command::Linkbudget { common } => linkbudget(common),
    }
    .context("command failed")
}
