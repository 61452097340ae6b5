//! Single simulations and Monte Carlo campaigns.

use nalgebra::{DMatrix, SVector, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{MeasurementType, ScenarioConfig};
use super::truth::{filter_dynamics, generate_truth, DynamicsPair, TruthTrajectory};
use crate::dynamics::CrtbpParams;
use crate::error::{NavError, Result};
use crate::estimation::{
    augment_bias, augment_clock_drift, run_filter, BiasMode, ConsiderConfig, FilterMeasurement, FilterOptions,
    FilterRun, FilterStep, JointFilterState, JOINT_DIM,
};
use crate::observability::{accumulate_gramian, ObservabilityReport, STATE_LABELS};
use crate::radiometrics::{measurement_partials, pseudo_range, range_rate, standard_normal, ObservableKind};

/// Generated measurement in reporting units: m for ranges, mm/s for range-rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub epoch: f64,
    pub kind: MeasurementType,
    pub value: f64,
    pub sigma: f64,
    pub bias_truth: f64,
}

/// Per-measurement-type scale from reporting units to km (or km/s).
fn report_scale(kind: MeasurementType) -> f64 {
    match kind.observable() {
        ObservableKind::Range => 1e3,
        ObservableKind::RangeRate => 1e6,
    }
}

fn nd_scale(kind: MeasurementType, units: &CrtbpParams) -> f64 {
    match kind.observable() {
        ObservableKind::Range => units.l_star_km,
        ObservableKind::RangeRate => units.v_star_km_s(),
    }
}

/// Rotating non-dimensional state to km and km/s.
pub fn dimensional(x: &Vector6<f64>, units: &CrtbpParams) -> Vector6<f64> {
    let (l, v) = (units.l_star_km, units.v_star_km_s());
    Vector6::new(x[0] * l, x[1] * l, x[2] * l, x[3] * v, x[4] * v, x[5] * v)
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(standard_normal(rng), standard_normal(rng), standard_normal(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Everything shared by the runs of one scenario.
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub truth: TruthTrajectory,
    dynamics: DynamicsPair,
    /// Noise sigma of each configured type, km or km/s.
    sigmas: Vec<(MeasurementType, f64)>,
}

/// Output of one filter run.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub run: usize,
    pub initial: JointFilterState,
    pub measurements: Vec<MeasurementRecord>,
    pub filter: FilterRun,
}

impl Scenario {
    pub fn prepare(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let truth = generate_truth(&cfg, false)?;
        let dynamics = filter_dynamics(&cfg)?;
        let sigmas = cfg.link.measurements.iter().map(|&t| (t, cfg.measurement_sigma(t))).collect();
        Ok(Self { cfg, truth, dynamics, sigmas })
    }

    fn rng(&self, run: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.montecarlo.seed);
        rng.set_stream(run as u64);
        rng
    }

    fn initial_filter_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<JointFilterState> {
        let units = self.cfg.units();
        let f = &self.cfg.filter;
        let (l, v) = (units.l_star_km, units.v_star_km_s());
        let dp = f.position_error_m * 1e-3 / l;
        let dv = f.velocity_error_mm_s * 1e-6 / v;
        let mut est = self.truth.states[0];
        for x in est.iter_mut() {
            let p = random_direction(rng) * dp;
            let w = random_direction(rng) * dv;
            for i in 0..3 {
                x[i] += p[i];
                x[i + 3] += w[i];
            }
        }
        let ps = f.position_sigma_km / l;
        let vs = f.velocity_sigma_cm_s * 1e-5 / v;
        let sigma = SVector::<f64, JOINT_DIM>::from_fn(|i, _| if i % 6 < 3 { ps } else { vs });
        let mut state = JointFilterState::joint(self.truth.epochs[0], &est[0], &est[1], &sigma);
        let b0 = f.bias_prior_m * 1e-3 / l;
        let bvar = (f.bias_prior_sigma_m * 1e-3 / l).powi(2);
        state = augment_bias(&state, f.bias_mode, b0, bvar)?;
        if f.estimate_clock_drift {
            let dvar = (f.clock_drift_prior_sigma_m_s * 1e-3 / v).powi(2);
            state = augment_clock_drift(&state, 0.0, dvar)?;
        }
        Ok(state)
    }

    pub fn filter_options(&self) -> FilterOptions {
        let units = self.cfg.units();
        let f = &self.cfg.filter;
        let consider = (f.bias_mode == BiasMode::Consider).then(|| {
            ConsiderConfig::scalar(f.bias_prior_m * 1e-3 / units.l_star_km, (f.bias_prior_sigma_m * 1e-3 / units.l_star_km).powi(2))
        });
        FilterOptions {
            process_noise_sigma: f.process_noise_sigma,
            noise_form: f.noise_form,
            consider,
            divergence_factor: f.divergence_factor,
            initial_position_sigma: f.position_sigma_km / units.l_star_km,
            health_checks: f.health_checks,
        }
    }

    fn measurements<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<FilterStep>, Vec<MeasurementRecord>)> {
        let units = self.cfg.units();
        let link = &self.cfg.link;
        let mut steps = Vec::with_capacity(self.truth.len());
        let mut records = Vec::with_capacity(self.truth.len() * self.sigmas.len());
        for k in 1..self.truth.len() {
            let epoch = self.truth.epochs[k];
            let [s1, s2] = self.truth.states[k];
            let (d1, d2) = (dimensional(&s1, &units), dimensional(&s2, &units));
            let mut ms = Vec::with_capacity(self.sigmas.len());
            for &(kind, sigma) in &self.sigmas {
                let draw = standard_normal(rng);
                let draw = if link.add_noise { draw } else { 0.0 };
                let sample = match kind.observable() {
                    ObservableKind::Range => pseudo_range(epoch, &d1, &d2, sigma, link.bias_truth_m * 1e-3, draw)?,
                    ObservableKind::RangeRate => range_rate(epoch, &d1, &d2, sigma, 0.0, draw)?,
                };
                let scale = nd_scale(kind, &units);
                ms.push(FilterMeasurement {
                    epoch,
                    kind: sample.kind,
                    value: sample.value / scale,
                    sigma: sample.sigma / scale,
                });
                let r = report_scale(kind);
                records.push(MeasurementRecord {
                    epoch,
                    kind,
                    value: sample.value * r,
                    sigma: sample.sigma * r,
                    bias_truth: sample.bias_truth * r,
                });
            }
            steps.push(FilterStep { epoch, measurements: ms, truth: Some([s1, s2]) });
        }
        Ok((steps, records))
    }

    /// Run `run` of the campaign; its random stream depends only on the seed
    /// and the run index.
    pub fn run(&self, run: usize) -> Result<SimulationRun> {
        let mut rng = self.rng(run);
        let initial = self.initial_filter_state(&mut rng)?;
        let (steps, measurements) = self.measurements(&mut rng)?;
        let filter = run_filter(&initial, &steps, [&*self.dynamics[0], &*self.dynamics[1]], &self.filter_options())?;
        Ok(SimulationRun { run, initial, measurements, filter })
    }

    /// Same run with the filter in a different bias mode (same draws).
    pub fn with_bias_mode(&self, mode: BiasMode) -> Result<Self> {
        let mut cfg = self.cfg.clone();
        cfg.filter.bias_mode = mode;
        cfg.validate()?;
        Ok(Self { cfg, truth: self.truth.clone(), dynamics: self.dynamics.clone(), sigmas: self.sigmas.clone() })
    }
}

/// Squared errors and covariance traces of one run, m² and (mm/s)².
#[derive(Debug, Clone, Copy, PartialEq)]
struct EpochSample {
    pos_err2: [f64; 2],
    vel_err2: [f64; 2],
    pos_var: [f64; 2],
    vel_var: [f64; 2],
}

fn epoch_samples(run: &SimulationRun, units: &CrtbpParams) -> Vec<EpochSample> {
    let (l, v) = (units.l_star_km * 1e3, units.v_star_km_s() * 1e6);
    run.filter
        .records
        .iter()
        .map(|r| {
            let e = r.error.unwrap_or_default();
            let mut s = EpochSample { pos_err2: [0.0; 2], vel_err2: [0.0; 2], pos_var: [0.0; 2], vel_var: [0.0; 2] };
            for j in 0..2 {
                let o = 6 * j;
                s.pos_err2[j] = e.fixed_rows::<3>(o).norm_squared() * l * l;
                s.vel_err2[j] = e.fixed_rows::<3>(o + 3).norm_squared() * v * v;
                s.pos_var[j] = (0..3).map(|i| r.sigma[o + i].powi(2)).sum::<f64>() * l * l;
                s.vel_var[j] = (3..6).map(|i| r.sigma[o + i].powi(2)).sum::<f64>() * v * v;
            }
            s
        })
        .collect()
}

/// Root mean square of error norms across runs.
pub fn rmse(norms: &[f64]) -> f64 {
    if norms.is_empty() {
        return f64::NAN;
    }
    (norms.iter().map(|e| e * e).sum::<f64>() / norms.len() as f64).sqrt()
}

/// Time average of a series over the whole span and before/after the split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitValue {
    pub full: f64,
    pub pre_split: f64,
    pub post_split: f64,
}

impl SplitValue {
    pub fn of_series(values: &[f64], post: &[bool]) -> Self {
        let avg = |keep: &dyn Fn(bool) -> bool| {
            let (s, n) = values
                .iter()
                .zip(post)
                .filter(|(_, &p)| keep(p))
                .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
            if n == 0 { f64::NAN } else { s / n as f64 }
        };
        Self { full: avg(&|_| true), pre_split: avg(&|p| !p), post_split: avg(&|p| p) }
    }

    fn average(a: &Self, b: &Self) -> Self {
        Self {
            full: 0.5 * (a.full + b.full),
            pre_split: 0.5 * (a.pre_split + b.pre_split),
            post_split: 0.5 * (a.post_split + b.post_split),
        }
    }
}

/// Table-style summary for one spacecraft or for the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryBlock {
    pub rms_error_pos_m: SplitValue,
    pub rms_sigma_pos_m: SplitValue,
    pub rms_error_vel_mms: SplitValue,
    pub rms_sigma_vel_mms: SplitValue,
}

impl SummaryBlock {
    fn average(a: &Self, b: &Self) -> Self {
        Self {
            rms_error_pos_m: SplitValue::average(&a.rms_error_pos_m, &b.rms_error_pos_m),
            rms_sigma_pos_m: SplitValue::average(&a.rms_sigma_pos_m, &b.rms_sigma_pos_m),
            rms_error_vel_mms: SplitValue::average(&a.rms_error_vel_mms, &b.rms_error_vel_mms),
            rms_sigma_vel_mms: SplitValue::average(&a.rms_sigma_vel_mms, &b.rms_sigma_vel_mms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub split_day: f64,
    pub epochs_pre_split: usize,
    pub epochs_post_split: usize,
    pub lumio: SummaryBlock,
    pub lpf: SummaryBlock,
    /// Arithmetic mean of the two spacecraft blocks.
    pub averaged: SummaryBlock,
}

/// Cross-run statistics at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch_days: f64,
    pub rmse_pos_m: [f64; 2],
    pub rmse_vel_mm_s: [f64; 2],
    pub sigma_pos_m: [f64; 2],
    pub sigma_vel_mm_s: [f64; 2],
}

/// Per-run figures after the split day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run: usize,
    pub diverged_at_days: Option<f64>,
    pub failure: Option<String>,
    pub max_error_pos_m: [f64; 2],
    pub max_error_vel_mm_s: [f64; 2],
    pub max_3sigma_pos_m: [f64; 2],
    pub max_3sigma_vel_mm_s: [f64; 2],
    pub final_bias_m: Option<f64>,
    pub final_bias_sigma_m: Option<f64>,
}

impl RunSummary {
    pub fn converged(&self) -> bool {
        self.diverged_at_days.is_none() && self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub scenario: String,
    pub runs_requested: usize,
    pub runs_used: usize,
    pub runs_excluded: usize,
    pub seed: u64,
    pub summary: Summary,
    /// First epoch after which the halo-orbiter position RMSE stays below the
    /// threshold.
    pub convergence_epoch_days: Option<f64>,
    pub runs: Vec<RunSummary>,
    #[serde(skip)]
    pub epochs: Vec<EpochStats>,
}

fn run_summary(run: &SimulationRun, samples: &[EpochSample], cfg: &ScenarioConfig) -> RunSummary {
    let units = cfg.units();
    let split = cfg.montecarlo.split_day;
    let mut out = RunSummary {
        run: run.run,
        diverged_at_days: run.filter.diverged_at.map(|t| units.nd_to_days(t)),
        failure: None,
        max_error_pos_m: [0.0; 2],
        max_error_vel_mm_s: [0.0; 2],
        max_3sigma_pos_m: [0.0; 2],
        max_3sigma_vel_mm_s: [0.0; 2],
        final_bias_m: None,
        final_bias_sigma_m: None,
    };
    for (r, s) in run.filter.records.iter().zip(samples) {
        if units.nd_to_days(r.epoch) < split {
            continue;
        }
        for j in 0..2 {
            out.max_error_pos_m[j] = out.max_error_pos_m[j].max(s.pos_err2[j].sqrt());
            out.max_error_vel_mm_s[j] = out.max_error_vel_mm_s[j].max(s.vel_err2[j].sqrt());
            out.max_3sigma_pos_m[j] = out.max_3sigma_pos_m[j].max(3.0 * s.pos_var[j].sqrt());
            out.max_3sigma_vel_mm_s[j] = out.max_3sigma_vel_mm_s[j].max(3.0 * s.vel_var[j].sqrt());
        }
    }
    let f = &run.filter.final_state;
    if let Some(b) = f.bias_index {
        let m = units.l_star_km * 1e3;
        out.final_bias_m = Some(f.x[b] * m);
        out.final_bias_sigma_m = Some(f.p[(b, b)].max(0.0).sqrt() * m);
    }
    out
}

fn failed_summary(run: usize, err: &NavError) -> RunSummary {
    RunSummary {
        run,
        diverged_at_days: None,
        failure: Some(err.to_string()),
        max_error_pos_m: [f64::NAN; 2],
        max_error_vel_mm_s: [f64::NAN; 2],
        max_3sigma_pos_m: [f64::NAN; 2],
        max_3sigma_vel_mm_s: [f64::NAN; 2],
        final_bias_m: None,
        final_bias_sigma_m: None,
    }
}

fn block(stats: &[EpochStats], post: &[bool], j: usize) -> SummaryBlock {
    let series = |f: &dyn Fn(&EpochStats) -> f64| stats.iter().map(f).collect::<Vec<_>>();
    SummaryBlock {
        rms_error_pos_m: SplitValue::of_series(&series(&|s| s.rmse_pos_m[j]), post),
        rms_sigma_pos_m: SplitValue::of_series(&series(&|s| s.sigma_pos_m[j]), post),
        rms_error_vel_mms: SplitValue::of_series(&series(&|s| s.rmse_vel_mm_s[j]), post),
        rms_sigma_vel_mms: SplitValue::of_series(&series(&|s| s.sigma_vel_mm_s[j]), post),
    }
}

/// Summary statistics of the given epoch series.
pub fn summarize(stats: &[EpochStats], split_day: f64) -> Summary {
    let post: Vec<bool> = stats.iter().map(|s| s.epoch_days >= split_day).collect();
    let n_post = post.iter().filter(|&&p| p).count();
    let lumio = block(stats, &post, 0);
    let lpf = block(stats, &post, 1);
    Summary {
        split_day,
        epochs_pre_split: post.len() - n_post,
        epochs_post_split: n_post,
        averaged: SummaryBlock::average(&lumio, &lpf),
        lumio,
        lpf,
    }
}

/// First epoch from which `values` stay below `threshold` to the end.
pub fn convergence_epoch(epochs: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    let last_above = values.iter().rposition(|v| !(*v < threshold));
    match last_above {
        None => epochs.first().copied(),
        Some(i) => epochs.get(i + 1).copied(),
    }
}

/// Reduce per-run samples (runs × epochs) into per-epoch statistics.
fn epoch_stats(epoch_days: &[f64], runs: &[Vec<EpochSample>]) -> Vec<EpochStats> {
    let n = runs.len() as f64;
    epoch_days
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let mut s = EpochStats {
                epoch_days: d,
                rmse_pos_m: [0.0; 2],
                rmse_vel_mm_s: [0.0; 2],
                sigma_pos_m: [0.0; 2],
                sigma_vel_mm_s: [0.0; 2],
            };
            for j in 0..2 {
                let sum = |f: &dyn Fn(&EpochSample) -> f64| runs.iter().map(|r| f(&r[k])).sum::<f64>() / n;
                s.rmse_pos_m[j] = sum(&|e| e.pos_err2[j]).sqrt();
                s.rmse_vel_mm_s[j] = sum(&|e| e.vel_err2[j]).sqrt();
                s.sigma_pos_m[j] = sum(&|e| e.pos_var[j]).sqrt();
                s.sigma_vel_mm_s[j] = sum(&|e| e.vel_var[j]).sqrt();
            }
            s
        })
        .collect()
}

/// Statistics of a single run, shaped like a campaign result.
pub fn single_run_result(scenario: &Scenario, run: &SimulationRun) -> MonteCarloResult {
    let cfg = &scenario.cfg;
    let units = cfg.units();
    let samples = epoch_samples(run, &units);
    let summary = run_summary(run, &samples, cfg);
    let days: Vec<f64> = run.filter.records.iter().map(|r| units.nd_to_days(r.epoch)).collect();
    let stats = epoch_stats(&days, &[samples]);
    let lumio: Vec<f64> = stats.iter().map(|s| s.rmse_pos_m[0]).collect();
    MonteCarloResult {
        scenario: cfg.name.clone(),
        runs_requested: 1,
        runs_used: usize::from(summary.converged()),
        runs_excluded: usize::from(!summary.converged()),
        seed: cfg.montecarlo.seed,
        summary: summarize(&stats, cfg.montecarlo.split_day),
        convergence_epoch_days: convergence_epoch(&days, &lumio, cfg.montecarlo.convergence_threshold_km * 1e3),
        runs: vec![summary],
        epochs: stats,
    }
}

/// Run the campaign on a worker pool. Diverged or failed runs are excluded
/// from the statistics and counted.
pub fn run_monte_carlo(scenario: &Scenario) -> Result<MonteCarloResult> {
    let cfg = &scenario.cfg;
    let units = cfg.units();
    let n = cfg.montecarlo.runs;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.montecarlo.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| NavError::InvalidParameter(format!("worker pool: {e}")))?;
    let outcomes: Vec<(RunSummary, Option<Vec<EpochSample>>)> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| match scenario.run(i) {
                Ok(run) => {
                    let samples = epoch_samples(&run, &units);
                    let summary = run_summary(&run, &samples, cfg);
                    let keep = summary.converged().then_some(samples);
                    (summary, keep)
                }
                Err(e) => (failed_summary(i, &e), None),
            })
            .collect()
    });
    let used: Vec<Vec<EpochSample>> = outcomes.iter().filter_map(|(_, s)| s.clone()).collect();
    let runs: Vec<RunSummary> = outcomes.into_iter().map(|(s, _)| s).collect();
    if used.is_empty() {
        let reasons: Vec<String> = runs
            .iter()
            .take(3)
            .map(|r| r.failure.clone().unwrap_or_else(|| format!("diverged at day {:?}", r.diverged_at_days)))
            .collect();
        return Err(NavError::InvalidParameter(format!("all {n} runs diverged or failed: {}", reasons.join("; "))));
    }
    let days: Vec<f64> = scenario.truth.epochs[1..].iter().map(|&t| units.nd_to_days(t)).collect();
    let stats = epoch_stats(&days, &used);
    let lumio: Vec<f64> = stats.iter().map(|s| s.rmse_pos_m[0]).collect();
    Ok(MonteCarloResult {
        scenario: cfg.name.clone(),
        runs_requested: n,
        runs_used: used.len(),
        runs_excluded: n - used.len(),
        seed: cfg.montecarlo.seed,
        summary: summarize(&stats, cfg.montecarlo.split_day),
        convergence_epoch_days: convergence_epoch(&days, &lumio, cfg.montecarlo.convergence_threshold_km * 1e3),
        runs,
        epochs: stats,
    })
}

/// Observability of the joint state along the truth trajectory for the given
/// observables.
pub fn observability_analysis(cfg: &ScenarioConfig, kinds: &[ObservableKind]) -> Result<ObservabilityReport> {
    if kinds.is_empty() {
        return Err(NavError::InvalidParameter("no observables selected".into()));
    }
    let truth = generate_truth(cfg, true)?;
    let stms = truth.stms.as_ref().ok_or_else(|| NavError::InvalidParameter("STM missing".into()))?;
    let mut terms = Vec::with_capacity(truth.len());
    for k in 1..truth.len() {
        let [s1, s2] = truth.states[k];
        let mut phi = DMatrix::zeros(JOINT_DIM, JOINT_DIM);
        phi.view_mut((0, 0), (6, 6)).copy_from(&stms[k][0]);
        phi.view_mut((6, 6), (6, 6)).copy_from(&stms[k][1]);
        let mut h = DMatrix::zeros(kinds.len(), JOINT_DIM);
        for (row, &kind) in kinds.iter().enumerate() {
            h.row_mut(row).copy_from(&measurement_partials(&s1, &s2, kind)?);
        }
        terms.push((phi, h));
    }
    accumulate_gramian(&terms, &STATE_LABELS)
}

/// Distinct observables of the configured measurement types.
pub fn configured_observables(cfg: &ScenarioConfig) -> Vec<ObservableKind> {
    let mut kinds: Vec<ObservableKind> = Vec::new();
    for t in &cfg.link.measurements {
        let k = t.observable();
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    kinds
}
