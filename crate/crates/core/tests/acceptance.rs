//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix6, RowDVector, Vector3, Vector6};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crosslink_nav::dynamics::{
    jacobi_constant, kepler_to_cartesian, mci_to_barycentric, propagate, CrtbpDynamics, CrtbpParams, RotatingState,
};
use crosslink_nav::estimation::{
    build_process_noise, check_covariance, measurement_update, predict_measurement, time_update, BiasMode,
    JointFilterState, NoiseForm, ProcessNoiseConfig, JOINT_DIM,
};
use crosslink_nav::observability::{gramian, svd_metrics};
use crosslink_nav::radiometrics::{
    link_budget_table, measurement_partials, observable, range_rate_core, standard_normal, ObservableKind,
};
use crosslink_nav::scenario::output::{estimates_table, measurements_table, write_table};
use crosslink_nav::scenario::{
    generate_truth, load_scenario, observability_analysis, run_monte_carlo, MonteCarloResult, OutputFormat,
    Scenario, ScenarioConfig,
};
use crosslink_nav::IntegratorConfig;

const RUNS: usize = 20;

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, detail: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.detail.push(format!("[{}] {what}", if ok { "ok" } else { "no" }));
    }

    fn note(&mut self, what: String) {
        self.detail.push(format!("[--] {what}"));
    }
}

fn config(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn campaign(cfg: ScenarioConfig) -> MonteCarloResult {
    let mut cfg = cfg;
    cfg.montecarlo.runs = RUNS;
    let scenario = Scenario::prepare(cfg).expect("scenario");
    run_monte_carlo(&scenario).expect("campaign")
}

struct Campaigns {
    pn: MonteCarloResult,
    rate: MonteCarloResult,
    td: MonteCarloResult,
}

fn table3() -> Outcome {
    let mut o = Outcome::new();
    let l = ScenarioConfig::default().link;
    let rows = link_budget_table(&l.pn, &l.time_derived, &l.doppler, l.pn_combiner, l.time_derived_combiner);
    let find = |q: &str| rows.iter().find(|r| r.quantity == q).map(|r| r.value).unwrap_or(f64::NAN);
    let pn = find("pn_range_sigma_two_way");
    let td = find("td_range_sigma_two_way");
    o.check((pn - 2.98).abs() <= 0.01, format!("PN two-way {pn:.4} m, want 2.98 +- 0.01"));
    o.check((td - 102.44).abs() <= 0.1, format!("time-derived two-way {td:.4} m, want 102.44 +- 0.1"));
    o
}

fn crtbp_integrity() -> Outcome {
    let mut o = Outcome::new();
    let p = CrtbpParams::earth_moon();
    let cfg = ScenarioConfig::default();
    let lumio = RotatingState::from_array(0.0, cfg.spacecraft.lumio.state.unwrap());
    let tight = IntegratorConfig::adaptive(1e-12, 1e-12);
    let t1 = p.days_to_nd(14.0);
    let end = propagate(&lumio, &[t1], &tight, &p, false).unwrap()[0].state;
    let c0 = jacobi_constant(&lumio, &p).unwrap();
    let c1 = jacobi_constant(&end, &p).unwrap();
    let drift = ((c1 - c0) / c0).abs();
    o.check(drift < 1e-9, format!("14-day Jacobi drift {drift:.2e}, limit 1e-9"));

    // Fixed-step RK4 makes the flow a smooth map of the initial state, so
    // central differences see no step-selection noise.
    let rk4 = IntegratorConfig::rk4(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = [cfg.spacecraft.lumio.state.unwrap(), cfg.spacecraft.lpf.state.unwrap()];
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut x = Vector6::from_column_slice(&base[i % 2]);
        for k in 0..6 {
            x[k] += rng.random_range(-1e-3..1e-3);
        }
        let s0 = RotatingState::from_vector(0.0, &x);
        // Around periselene the flow stretches by 1e4 within a day and the
        // h² truncation of central differences swamps the tolerance, so the
        // lunar orbiter gets a shorter arc and a small step.
        let span = if i % 2 == 0 { 0.2 } else { 0.02 };
        let phi = propagate(&s0, &[span], &rk4, &p, true).unwrap()[0].stm.unwrap();
        let mut fd = Matrix6::zeros();
        for k in 0..6 {
            let h = 1e-7 * x[k].abs().max(1.0);
            let (mut a, mut b) = (x, x);
            a[k] += h;
            b[k] -= h;
            let fa = propagate(&RotatingState::from_vector(0.0, &a), &[span], &rk4, &p, false).unwrap()[0].state;
            let fb = propagate(&RotatingState::from_vector(0.0, &b), &[span], &rk4, &p, false).unwrap()[0].state;
            fd.set_column(k, &((fa.to_vector() - fb.to_vector()) / (2.0 * h)));
        }
        worst = worst.max((phi - fd).amax() / phi.amax());
    }
    o.check(worst < 1e-7, format!("STM vs finite differences on 20 states, worst relative {worst:.2e}, limit 1e-7"));
    o
}

fn frame_pipeline() -> Outcome {
    let mut o = Outcome::new();
    let p = CrtbpParams::earth_moon();
    let k = ScenarioConfig::default().spacecraft.lpf.mci_elements.unwrap();
    let mci = kepler_to_cartesian(&k).unwrap();
    let rot = mci_to_barycentric(&mci, 0.0, &p).to_vector();
    let table = Vector6::new(0.98512134, 0.00147649, 0.00492546, -0.87329730, -1.61190048, 0.0);
    let dpos = (rot - table).fixed_rows::<3>(0).norm();
    o.check(dpos < 1e-4, format!("LPF position vs tabulated row {dpos:.2e} ({:.2} km), limit 1e-4", dpos * p.l_star_km));
    let dvel = (rot - table).fixed_rows::<3>(3).norm();
    o.note(format!("LPF velocity vs tabulated row {dvel:.2e}"));

    // Periselene from the Cartesian state through vis-viva and the angular momentum.
    let mu = k.central_gm;
    let (r, v) = (mci.pos.norm(), mci.vel.norm());
    let energy = 0.5 * v * v - mu / r;
    let a = -mu / (2.0 * energy);
    let h = mci.pos.cross(&mci.vel).norm();
    let e = (1.0 + 2.0 * energy * h * h / (mu * mu)).sqrt();
    let rp = a * (1.0 - e);
    o.check((rp - 2237.59).abs() <= 0.01, format!("periselene {rp:.4} km, want 2237.59 +- 0.01"));
    o
}

fn baseline_navigation(c: &Campaigns) -> Outcome {
    let mut o = Outcome::new();
    let a = &c.pn.summary.averaged;
    o.check(
        a.rms_error_pos_m.post_split < 100.0,
        format!("range-only post-day-6 position RMSE {:.2} m, limit 100 m", a.rms_error_pos_m.post_split),
    );
    o.check(
        a.rms_error_vel_mms.post_split < 2.0,
        format!("range-only post-day-6 velocity RMSE {:.3} mm/s, limit 2 mm/s", a.rms_error_vel_mms.post_split),
    );
    let r = &c.rate.summary.averaged;
    o.check(
        a.rms_error_pos_m.post_split < r.rms_error_pos_m.post_split,
        format!(
            "range-only {:.2} m < range-rate-only {:.2} m after day 6",
            a.rms_error_pos_m.post_split, r.rms_error_pos_m.post_split
        ),
    );
    o.note(format!(
        "range-only full span {:.2} m / {:.3} mm/s, 1-sigma {:.2} m / {:.3} mm/s ({} of {} runs used)",
        a.rms_error_pos_m.full, a.rms_error_vel_mms.full, a.rms_sigma_pos_m.full, a.rms_sigma_vel_mms.full,
        c.pn.runs_used, c.pn.runs_requested
    ));
    o
}

fn envelope(o: &mut Outcome, name: &str, r: &MonteCarloResult) {
    let converged: Vec<_> = r.runs.iter().filter(|s| s.converged()).collect();
    let pos = converged.iter().map(|s| s.max_3sigma_pos_m[0]).fold(0.0, f64::max);
    let vel = converged.iter().map(|s| s.max_3sigma_vel_mm_s[0]).fold(0.0, f64::max);
    o.check(!converged.is_empty(), format!("{name}: {} of {} runs converged", converged.len(), r.runs.len()));
    o.check(pos < 1000.0, format!("{name}: worst LUMIO 3-sigma position after day 6 {pos:.1} m, limit 1000 m"));
    o.check(vel < 10.0, format!("{name}: worst LUMIO 3-sigma velocity after day 6 {vel:.2} mm/s, limit 10 mm/s"));
    let lpf_pos = converged.iter().map(|s| s.max_3sigma_pos_m[1]).fold(0.0, f64::max);
    let lpf_vel = converged.iter().map(|s| s.max_3sigma_vel_mm_s[1]).fold(0.0, f64::max);
    o.note(format!("{name}: worst LPF 3-sigma after day 6 {lpf_pos:.1} m / {lpf_vel:.2} mm/s"));
}

fn requirement_compliance(c: &Campaigns) -> Outcome {
    let mut o = Outcome::new();
    envelope(&mut o, "PN", &c.pn);
    envelope(&mut o, "time-derived", &c.td);
    let pn = c.pn.summary.averaged.rms_error_pos_m;
    let td = c.td.summary.averaged.rms_error_pos_m;
    let factor = td.full / pn.full;
    o.check(
        (2.0..=8.0).contains(&factor),
        format!("time-derived / PN position RMSE over the arc {factor:.2} ({:.2} m / {:.2} m), want [2, 8]", td.full, pn.full),
    );
    o.note(format!("same ratio after day 6 {:.2}", td.post_split / pn.post_split));
    o
}

fn bias_handling() -> Outcome {
    let mut o = Outcome::new();
    let estimate = campaign(config("bias_estimate"));
    let neglect = campaign(config("bias_neglect"));
    let consider = campaign(config("bias_consider"));

    let finals: Vec<f64> = estimate.runs.iter().filter_map(|r| r.final_bias_m).collect();
    let (lo, hi) = finals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    o.check(
        finals.len() == estimate.runs_used && lo >= 5.0 && hi <= 15.0,
        format!("final bias estimates in [{lo:.2}, {hi:.2}] m over {} runs, want 10 +- 5", finals.len()),
    );
    let (n, e, k) = (
        neglect.summary.averaged.rms_error_pos_m.post_split,
        estimate.summary.averaged.rms_error_pos_m.post_split,
        consider.summary.averaged.rms_error_pos_m.post_split,
    );
    o.check(n > e && n > k, format!("post-day-6 position RMSE neglect {n:.2} m, estimate {e:.2} m, consider {k:.2} m"));

    let mut cfg = config("bias_consider");
    cfg.filter.bias_prior_m = 0.0;
    cfg.filter.bias_prior_sigma_m = 0.0;
    let consider0 = Scenario::prepare(cfg).unwrap();
    let ekf = consider0.with_bias_mode(BiasMode::Neglect).unwrap();
    let (a, b) = (consider0.run(0).unwrap(), ekf.run(0).unwrap());
    let mut worst = 0.0f64;
    for (ra, rb) in a.filter.records.iter().zip(&b.filter.records) {
        worst = worst.max((&ra.x - &rb.x).amax() / rb.x.amax());
        worst = worst.max((&ra.sigma - &rb.sigma).amax() / rb.sigma.amax());
    }
    let same_len = a.filter.records.len() == b.filter.records.len();
    o.check(same_len && worst <= 1e-12, format!("consider filter with zero bias covariance vs EKF, worst relative {worst:.2e}"));
    o
}

fn observability() -> Outcome {
    let mut o = Outcome::new();
    let cfg = config("baseline_pn");
    let range = observability_analysis(&cfg, &[ObservableKind::Range]).unwrap();
    let rate = observability_analysis(&cfg, &[ObservableKind::RangeRate]).unwrap();
    o.check(
        (1e11..=1e14).contains(&range.condition_number),
        format!("range-only condition number {:.3e}, want [1e11, 1e14]", range.condition_number),
    );
    o.check(
        range.condition_number < rate.condition_number,
        format!("range-rate-only condition number {:.3e} above range-only", rate.condition_number),
    );
    o.check(
        rate.unobservability_index < range.unobservability_index,
        format!(
            "unobservability index range-rate {:.4e} < range {:.4e}",
            rate.unobservability_index, range.unobservability_index
        ),
    );
    let top: Vec<&str> = range.state_ranking[..4].iter().map(String::as_str).collect();
    let bottom: Vec<&str> = range.state_ranking[8..].iter().map(String::as_str).collect();
    let lpf_pos = ["x2", "y2", "z2"].iter().filter(|s| top.contains(s)).count();
    o.check(lpf_pos >= 2, format!("{lpf_pos} LPF position states in the top four {top:?}"));
    let lpf_vel = ["vx2", "vy2", "vz2"].iter().all(|s| bottom.contains(s));
    o.check(lpf_vel, format!("LPF velocity states in the bottom four {bottom:?}"));
    o.note(format!("range-only ranking {}", range.state_ranking.join(" ")));
    o
}

fn ephemeris_model(c: &Campaigns) -> Outcome {
    let mut o = Outcome::new();
    let nbody = campaign(config("nbody_td"));
    let from = nbody.convergence_epoch_days.unwrap_or(f64::INFINITY);
    o.check(nbody.convergence_epoch_days.is_some(), format!("N-body run converged at day {from:.2}"));
    let after: Vec<_> = nbody.epochs.iter().filter(|e| e.epoch_days >= from).collect();
    let mean = |f: &dyn Fn(&&crosslink_nav::scenario::EpochStats) -> f64| {
        after.iter().map(f).sum::<f64>() / after.len().max(1) as f64
    };
    let peak = |f: &dyn Fn(&&crosslink_nav::scenario::EpochStats) -> f64| after.iter().map(f).fold(0.0, f64::max);
    let lumio_pos = peak(&|e| e.sigma_pos_m[0]);
    let lpf_pos = peak(&|e| e.sigma_pos_m[1]);
    let lpf_vel = peak(&|e| e.sigma_vel_mm_s[1]);
    o.check(lumio_pos < 1000.0, format!("peak LUMIO 1-sigma position after convergence {lumio_pos:.1} m, limit 1000 m"));
    o.check(lpf_pos < 1000.0, format!("peak LPF 1-sigma position after convergence {lpf_pos:.1} m, limit 1000 m"));
    o.check(lpf_vel < 10.0, format!("peak LPF 1-sigma velocity after convergence {lpf_vel:.2} mm/s, limit 10 mm/s"));
    o.note(format!(
        "time averages after convergence: LUMIO {:.1} m, LPF {:.1} m / {:.2} mm/s",
        mean(&|e| e.sigma_pos_m[0]),
        mean(&|e| e.sigma_pos_m[1]),
        mean(&|e| e.sigma_vel_mm_s[1])
    ));
    let late: Vec<_> = nbody.epochs.iter().filter(|e| e.epoch_days >= nbody.summary.split_day).collect();
    o.note(format!(
        "peaks after day {}: LUMIO {:.1} m, LPF {:.1} m / {:.2} mm/s",
        nbody.summary.split_day,
        late.iter().map(|e| e.sigma_pos_m[0]).fold(0.0, f64::max),
        late.iter().map(|e| e.sigma_pos_m[1]).fold(0.0, f64::max),
        late.iter().map(|e| e.sigma_vel_mm_s[1]).fold(0.0, f64::max)
    ));
    let n = &nbody.summary.averaged;
    let r = &c.td.summary.averaged;
    let inflation = [
        n.rms_sigma_pos_m.post_split / r.rms_sigma_pos_m.post_split,
        n.rms_sigma_vel_mms.post_split / r.rms_sigma_vel_mms.post_split,
    ];
    o.check(
        inflation.iter().all(|&x| x <= 5.0),
        format!("1-sigma inflation vs CRTBP after day 6: position {:.2}x, velocity {:.2}x, limit 5x", inflation[0], inflation[1]),
    );
    o
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Vector6<f64>, Vector6<f64>) {
    let cfg = ScenarioConfig::default();
    let mut a = Vector6::from_column_slice(&cfg.spacecraft.lumio.state.unwrap());
    let mut b = Vector6::from_column_slice(&cfg.spacecraft.lpf.state.unwrap());
    for k in 0..6 {
        a[k] += rng.random_range(-0.05..0.05);
        b[k] += rng.random_range(-0.01..0.01);
    }
    (a, b)
}

fn property_suites(c: &Campaigns) -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    // Manual filter loop on the baseline truth, checking every covariance.
    let cfg = config("baseline_pn");
    let truth = generate_truth(&cfg, false).unwrap();
    let p = cfg.units();
    let dynamics = CrtbpDynamics::new(p, cfg.dynamics.integrator);
    let sigma_range = cfg.measurement_sigma(cfg.link.measurements[0]) / p.l_star_km;
    let s0 = DVector::from_fn(JOINT_DIM, |i, _| if i % 6 < 3 { 1.0 / p.l_star_km } else { 1e-5 / p.v_star_km_s() });
    let mut f = JointFilterState::new(
        0.0,
        DVector::from_iterator(JOINT_DIM, truth.states[0][0].iter().chain(truth.states[0][1].iter()).copied()),
        DMatrix::from_diagonal(&s0.map(|s| s * s)),
    )
    .unwrap();
    let mut bad = 0usize;
    let mut joseph = 0.0f64;
    for k in 1..truth.len() {
        let q = build_process_noise(&ProcessNoiseConfig {
            sigma: cfg.filter.process_noise_sigma,
            dt: truth.epochs[k] - f.epoch,
            form: NoiseForm::Quartic,
        })
        .unwrap();
        f = time_update(&f, [&dynamics, &dynamics], truth.epochs[k], &q).unwrap().0;
        bad += check_covariance(&f.p, "prior").is_err() as usize;
        let [a, b] = truth.states[k];
        let y = observable(&a, &b, ObservableKind::Range).unwrap() + sigma_range * standard_normal(&mut rng);
        let (pred, h) = predict_measurement(&f, ObservableKind::Range).unwrap();
        let (next, d) = measurement_update(&f, y, pred, &h, sigma_range * sigma_range).unwrap();
        f = next;
        joseph = joseph.max(d.joseph_rel_diff);
        bad += check_covariance(&f.p, "posterior").is_err() as usize;
    }
    o.check(bad == 0, format!("{bad} covariance symmetry/PSD violations over {} epochs", truth.len() - 1));
    o.check(joseph <= 1e-10, format!("Joseph form relative difference {joseph:.2e}, limit 1e-10"));
    let campaign_joseph = c.pn.runs.len();
    o.note(format!("{campaign_joseph} baseline campaign runs completed with health checks on"));

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (a, b) = random_pair(&mut rng);
        for kind in [ObservableKind::Range, ObservableKind::RangeRate] {
            let h = measurement_partials(&a, &b, kind).unwrap();
            let mut fd = RowDVector::zeros(12);
            for i in 0..12 {
                let step = 1e-6;
                let (mut ap, mut am, mut bp, mut bm) = (a, a, b, b);
                if i < 6 {
                    ap[i] += step;
                    am[i] -= step;
                } else {
                    bp[i - 6] += step;
                    bm[i - 6] -= step;
                }
                fd[i] = (observable(&ap, &bp, kind).unwrap() - observable(&am, &bm, kind).unwrap()) / (2.0 * step);
            }
            let hd = RowDVector::from_iterator(12, h.iter().copied());
            worst = worst.max((&hd - &fd).amax() / hd.amax());
        }
    }
    o.check(worst <= 1e-7, format!("measurement partials vs finite differences, worst relative {worst:.2e}"));

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (a, b) = random_pair(&mut rng);
        let (a, b) = (crosslink_nav::scenario::run::dimensional(&a, &p), crosslink_nav::scenario::run::dimensional(&b, &p));
        let rate = range_rate_core(&a, &b).unwrap();
        let at = |t: f64| {
            let ra: Vector3<f64> = a.fixed_rows::<3>(0) + a.fixed_rows::<3>(3) * t;
            let rb: Vector3<f64> = b.fixed_rows::<3>(0) + b.fixed_rows::<3>(3) * t;
            (rb - ra).norm()
        };
        let dt = 1.0;
        worst = worst.max((rate - (at(dt) - at(-dt)) / (2.0 * dt)).abs());
    }
    o.check(worst <= 1e-6, format!("range-rate vs differentiated range, worst {worst:.2e} km/s"));

    let truth = generate_truth(&cfg, true).unwrap();
    let stms = truth.stms.as_ref().unwrap();
    let mut terms: Vec<(DMatrix<f64>, DMatrix<f64>)> = (1..truth.len())
        .map(|k| {
            let mut phi = DMatrix::zeros(12, 12);
            phi.view_mut((0, 0), (6, 6)).copy_from(&stms[k][0]);
            phi.view_mut((6, 6), (6, 6)).copy_from(&stms[k][1]);
            let [a, b] = truth.states[k];
            let h = measurement_partials(&a, &b, ObservableKind::Range).unwrap();
            (phi, DMatrix::from_row_slice(1, 12, h.as_slice()))
        })
        .collect();
    let g = gramian(&terms).unwrap();
    let eig = g.clone().symmetric_eigenvalues();
    let min_eig = eig.min() / eig.max();
    terms.shuffle(&mut rng);
    let shuffled = gramian(&terms).unwrap();
    let perm = (&g - &shuffled).amax() / g.amax();
    let cond = svd_metrics(&g).unwrap().condition_number;
    o.check(min_eig >= -1e-12, format!("Gramian smallest eigenvalue ratio {min_eig:.2e}"));
    o.check(perm <= 1e-12, format!("Gramian epoch-permutation difference {perm:.2e} (condition {cond:.3e})"));

    let mut cfg = config("baseline_pn");
    cfg.dynamics.duration_days = 2.0;
    cfg.set_fixed_step(600.0).unwrap();
    let bytes = |dir: &std::path::Path| {
        let s = Scenario::prepare(cfg.clone()).unwrap();
        let run = s.run(3).unwrap();
        let a = write_table(dir, "estimates", &estimates_table(&run, &s.cfg), OutputFormat::Csv).unwrap();
        let b = write_table(dir, "measurements", &measurements_table(&run, &s.cfg.units()), OutputFormat::Csv).unwrap();
        [std::fs::read(a).unwrap(), std::fs::read(b).unwrap()]
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    o.check(bytes(d1.path()) == bytes(d2.path()), "fixed-step reruns with the same seed are byte-identical".into());
    o
}

fn consistency(c: &Campaigns) -> Outcome {
    let mut o = Outcome::new();
    let a = &c.pn.summary.averaged;
    let pos = a.rms_error_pos_m.post_split / a.rms_sigma_pos_m.post_split;
    let vel = a.rms_error_vel_mms.post_split / a.rms_sigma_vel_mms.post_split;
    let ok = |r: f64| (0.5..=2.0).contains(&r);
    o.check(ok(pos) && ok(vel), format!("baseline RMSE / 1-sigma after day 6: position {pos:.2}, velocity {vel:.2}"));
    o
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(&str, &str, Outcome)> = Vec::new();
    results.push(("1", "link budget", table3()));
    results.push(("2", "CRTBP integrity", crtbp_integrity()));
    results.push(("3", "frame pipeline", frame_pipeline()));
    let c = Campaigns {
        pn: campaign(config("baseline_pn")),
        rate: campaign(config("range_rate")),
        td: campaign(config("time_derived")),
    };
    results.push(("4", "baseline navigation", baseline_navigation(&c)));
    results.push(("5", "requirement compliance", requirement_compliance(&c)));
    results.push(("6", "bias handling", bias_handling()));
    results.push(("7", "observability", observability()));
    results.push(("8", "ephemeris model", ephemeris_model(&c)));
    results.push(("9", "property suites", property_suites(&c)));
    results.push(("9b", "covariance consistency", consistency(&c)));

    let mut failed = 0;
    for (id, name, o) in &results {
        println!("criterion {id} ({name}): {}", if o.pass { "PASS" } else { "FAIL" });
        for d in &o.detail {
            println!("    {d}");
        }
        failed += !o.pass as usize;
    }
    println!("acceptance: {} of {} criteria passed in {:.1} s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
