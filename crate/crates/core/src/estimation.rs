//! Sequential estimation of the joint two-spacecraft state.
//!
//! The joint vector is `[r1, v1, r2, v2]` in non-dimensional rotating
//! coordinates, optionally followed by a measurement bias and a bias drift.
//! The filter is extended: Φ and H are evaluated on the current estimate.

use nalgebra::{DMatrix, DVector, Matrix6, RowDVector, SVector, SymmetricEigen, Vector6};
use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::{NavError, Result};
use crate::radiometrics::{measurement_partials, observable, ObservableKind};

pub const JOINT_DIM: usize = 12;

/// How the measurement bias is treated by the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasMode {
    Neglect,
    Estimate,
    Consider,
}

impl BiasMode {
    pub fn name(self) -> &'static str {
        match self {
            BiasMode::Neglect => "neglect",
            BiasMode::Estimate => "estimate",
            BiasMode::Consider => "consider",
        }
    }
}

/// Shape of the per-spacecraft process-noise block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseForm {
    /// `Δt⁴σ²/3`, `Δt³σ²/2`, `Δt²σ²`.
    Quartic,
    /// White-acceleration form `Δt³σ²/3`, `Δt²σ²/2`, `Δtσ²`.
    Conventional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoiseConfig {
    /// Acceleration noise intensity per spacecraft (non-dimensional).
    pub sigma: [f64; 2],
    /// Filter step (non-dimensional time).
    pub dt: f64,
    pub form: NoiseForm,
}

impl ProcessNoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.iter().all(|s| *s >= 0.0) && self.dt >= 0.0) {
            return Err(NavError::InvalidParameter(format!(
                "process noise needs sigma >= 0 and dt >= 0, got {:?} and {}",
                self.sigma, self.dt
            )));
        }
        Ok(())
    }
}

/// Block-diagonal 12×12 state noise compensation matrix.
pub fn build_process_noise(cfg: &ProcessNoiseConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let dt = cfg.dt;
    let (pp, pv, vv) = match cfg.form {
        NoiseForm::Quartic => (dt.powi(4) / 3.0, dt.powi(3) / 2.0, dt * dt),
        NoiseForm::Conventional => (dt.powi(3) / 3.0, dt * dt / 2.0, dt),
    };
    let mut q = DMatrix::zeros(JOINT_DIM, JOINT_DIM);
    for (j, s) in cfg.sigma.iter().enumerate() {
        let s2 = s * s;
        let o = 6 * j;
        for i in 0..3 {
            q[(o + i, o + i)] = pp * s2;
            q[(o + i, o + 3 + i)] = pv * s2;
            q[(o + 3 + i, o + i)] = pv * s2;
            q[(o + 3 + i, o + 3 + i)] = vv * s2;
        }
    }
    Ok(q)
}

/// A-priori knowledge of the consider parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsiderConfig {
    pub b0: DVector<f64>,
    pub b_cov: DMatrix<f64>,
}

impl ConsiderConfig {
    pub fn scalar(b0: f64, variance: f64) -> Self {
        Self { b0: DVector::from_element(1, b0), b_cov: DMatrix::from_element(1, 1, variance) }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.b0.len();
        if self.b_cov.shape() != (q, q) {
            return Err(NavError::DimensionMismatch(format!(
                "consider covariance is {:?}, expected ({q}, {q})",
                self.b_cov.shape()
            )));
        }
        check_covariance(&self.b_cov, "consider covariance")
    }
}

/// Filter state: estimate, covariance and (consider mode) the cross-covariance
/// between the estimated states and the consider parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFilterState {
    pub epoch: f64,
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
    pub c: Option<DMatrix<f64>>,
    pub mode: BiasMode,
    pub bias_index: Option<usize>,
    pub drift_index: Option<usize>,
}

impl JointFilterState {
    /// Any-dimension state; the two-spacecraft layout is only assumed by
    /// [`time_update`].
    pub fn new(epoch: f64, x: DVector<f64>, p: DMatrix<f64>) -> Result<Self> {
        if p.shape() != (x.len(), x.len()) {
            return Err(NavError::DimensionMismatch(format!(
                "covariance {:?} for a {}-state",
                p.shape(),
                x.len()
            )));
        }
        Ok(Self { epoch, x, p, c: None, mode: BiasMode::Neglect, bias_index: None, drift_index: None })
    }

    /// Joint state of two spacecraft with a diagonal prior.
    pub fn joint(epoch: f64, s1: &Vector6<f64>, s2: &Vector6<f64>, sigma: &SVector<f64, JOINT_DIM>) -> Self {
        let mut x = DVector::zeros(JOINT_DIM);
        x.rows_mut(0, 6).copy_from(s1);
        x.rows_mut(6, 6).copy_from(s2);
        let p = DMatrix::from_diagonal(&DVector::from_iterator(JOINT_DIM, sigma.iter().map(|s| s * s)));
        Self { epoch, x, p, c: None, mode: BiasMode::Neglect, bias_index: None, drift_index: None }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn spacecraft(&self, j: usize) -> Vector6<f64> {
        Vector6::from_iterator(self.x.rows(6 * j, 6).iter().copied())
    }

    pub fn bias(&self) -> f64 {
        self.bias_index.map_or(0.0, |i| self.x[i])
    }

    /// Trace of the position block of spacecraft `j`.
    pub fn position_trace(&self, j: usize) -> f64 {
        (0..3).map(|i| self.p[(6 * j + i, 6 * j + i)]).sum()
    }

    pub fn sigmas(&self) -> DVector<f64> {
        self.p.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

/// Set up bias handling: `Estimate` appends a bias state with the given prior,
/// `Consider` attaches a zero cross-covariance for one consider parameter,
/// `Neglect` leaves the state alone.
pub fn augment_bias(f: &JointFilterState, mode: BiasMode, mean: f64, variance: f64) -> Result<JointFilterState> {
    if f.bias_index.is_some() || f.c.is_some() {
        return Err(NavError::AlreadyAugmented("bias"));
    }
    let mut out = f.clone();
    out.mode = mode;
    match mode {
        BiasMode::Neglect => {}
        BiasMode::Estimate => {
            if !(variance >= 0.0) {
                return Err(NavError::InvalidParameter(format!("bias prior variance {variance}")));
            }
            let n = f.dim();
            out.x = f.x.clone().insert_row(n, mean);
            out.p = f.p.clone().insert_row(n, 0.0).insert_column(n, 0.0);
            out.p[(n, n)] = variance;
            out.bias_index = Some(n);
        }
        BiasMode::Consider => {
            out.c = Some(DMatrix::zeros(f.dim(), 1));
        }
    }
    Ok(out)
}

/// Append a bias-drift state. The bias then evolves as `b + d·Δt`.
pub fn augment_clock_drift(f: &JointFilterState, mean: f64, variance: f64) -> Result<JointFilterState> {
    if f.drift_index.is_some() {
        return Err(NavError::AlreadyAugmented("clock drift"));
    }
    if f.bias_index.is_none() {
        return Err(NavError::InvalidParameter("clock drift requires an estimated bias state".into()));
    }
    let n = f.dim();
    let mut out = f.clone();
    out.x = f.x.clone().insert_row(n, mean);
    out.p = f.p.clone().insert_row(n, 0.0).insert_column(n, 0.0);
    out.p[(n, n)] = variance;
    if let Some(c) = &f.c {
        out.c = Some(c.clone().insert_row(n, 0.0));
    }
    out.drift_index = Some(n);
    Ok(out)
}

/// Full transition matrix of the (possibly augmented) state.
pub fn extended_stm(
    phi1: &Matrix6<f64>,
    phi2: &Matrix6<f64>,
    dt: f64,
    dim: usize,
    bias_index: Option<usize>,
    drift_index: Option<usize>,
) -> DMatrix<f64> {
    let mut phi = DMatrix::identity(dim, dim);
    phi.view_mut((0, 0), (6, 6)).copy_from(phi1);
    phi.view_mut((6, 6), (6, 6)).copy_from(phi2);
    if let (Some(b), Some(d)) = (bias_index, drift_index) {
        phi[(b, d)] = dt;
    }
    phi
}

/// `ΦPΦᵀ + Q`, symmetrized.
pub fn propagate_covariance(p: &DMatrix<f64>, phi: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(phi * p * phi.transpose() + q))
}

pub fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// `C̄ = ΦC`.
pub fn consider_time_update(f: &JointFilterState, phi: &DMatrix<f64>) -> Result<JointFilterState> {
    let mut out = f.clone();
    if let Some(c) = &f.c {
        if phi.ncols() != c.nrows() {
            return Err(NavError::DimensionMismatch(format!("Φ {:?} vs C {:?}", phi.shape(), c.shape())));
        }
        out.c = Some(phi * c);
    } else if f.mode == BiasMode::Consider {
        return Err(NavError::InvalidParameter("consider mode without cross-covariance".into()));
    }
    Ok(out)
}

/// Propagate the filter to `t1`. `dynamics` maps each spacecraft's 6-state;
/// `q12` is the 12×12 process noise for this interval.
pub fn time_update(
    f: &JointFilterState,
    dynamics: [&dyn Dynamics; 2],
    t1: f64,
    q12: &DMatrix<f64>,
) -> Result<(JointFilterState, DMatrix<f64>)> {
    let n = f.dim();
    if n < JOINT_DIM || q12.shape() != (JOINT_DIM, JOINT_DIM) {
        return Err(NavError::DimensionMismatch(format!("state {n}, process noise {:?}", q12.shape())));
    }
    let dt = t1 - f.epoch;
    let (x1, phi1) = dynamics[0].transition(&f.spacecraft(0), f.epoch, t1)?;
    let (x2, phi2) = dynamics[1].transition(&f.spacecraft(1), f.epoch, t1)?;
    let phi = extended_stm(&phi1, &phi2, dt, n, f.bias_index, f.drift_index);

    let mut out = consider_time_update(f, &phi)?;
    out.epoch = t1;
    out.x.rows_mut(0, 6).copy_from(&x1);
    out.x.rows_mut(6, 6).copy_from(&x2);
    if let (Some(b), Some(d)) = (f.bias_index, f.drift_index) {
        out.x[b] += dt * f.x[d];
    }
    let mut q = DMatrix::zeros(n, n);
    q.view_mut((0, 0), (JOINT_DIM, JOINT_DIM)).copy_from(q12);
    out.p = propagate_covariance(&f.p, &phi, &q);
    Ok((out, phi))
}

/// Per-update numerical health figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateDiagnostics {
    /// Pre-fit residual `y − h(x̄)` (minus `N b0` in consider mode).
    pub innovation: f64,
    pub innovation_variance: f64,
    /// `‖P − P_joseph‖_F / ‖P_joseph‖_F`.
    pub joseph_rel_diff: f64,
}

fn check_innovation(omega: f64, epoch: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(NavError::InnovationNotPositive { value: omega, epoch })
    }
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm();
    if denom == 0.0 {
        (a - b).norm()
    } else {
        (a - b).norm() / denom
    }
}

/// Scalar EKF update. `predicted` is `h(x̄)`; `w` the measurement variance.
pub fn measurement_update(
    f: &JointFilterState,
    y: f64,
    predicted: f64,
    h: &RowDVector<f64>,
    w: f64,
) -> Result<(JointFilterState, UpdateDiagnostics)> {
    let n = f.dim();
    if h.len() != n {
        return Err(NavError::DimensionMismatch(format!("H has {} columns, state has {n}", h.len())));
    }
    if !(w > 0.0) {
        return Err(NavError::InvalidParameter(format!("measurement variance must be positive, got {w}")));
    }
    let ph = &f.p * h.transpose();
    let omega = (h * &ph)[0] + w;
    check_innovation(omega, f.epoch)?;
    let k = ph / omega;
    let innovation = y - predicted;
    let ikh = DMatrix::identity(n, n) - &k * h;
    let p = symmetrize(&(&ikh * &f.p));
    let joseph = &ikh * &f.p * ikh.transpose() + &k * k.transpose() * w;

    let mut out = f.clone();
    out.x = &f.x + &k * innovation;
    let diag = UpdateDiagnostics { innovation, innovation_variance: omega, joseph_rel_diff: rel_diff(&p, &joseph) };
    out.p = p;
    Ok((out, diag))
}

/// Simultaneous update with an `m`-vector of measurements and full `W`.
pub fn measurement_update_batch(
    f: &JointFilterState,
    y: &DVector<f64>,
    predicted: &DVector<f64>,
    h: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<JointFilterState> {
    let n = f.dim();
    let m = y.len();
    if h.shape() != (m, n) || w.shape() != (m, m) || predicted.len() != m {
        return Err(NavError::DimensionMismatch(format!("batch update with H {:?}, W {:?}", h.shape(), w.shape())));
    }
    let s = h * &f.p * h.transpose() + w;
    let chol = s
        .clone()
        .cholesky()
        .ok_or(NavError::InnovationNotPositive { value: s.determinant(), epoch: f.epoch })?;
    let k = (chol.solve(&(h * &f.p))).transpose();
    let mut out = f.clone();
    out.x = &f.x + &k * (y - predicted);
    out.p = symmetrize(&((DMatrix::identity(n, n) - &k * h) * &f.p));
    Ok(out)
}

/// Scalar Schmidt consider update. `nrow` is the sensitivity of the
/// measurement to the consider parameters.
pub fn consider_measurement_update(
    f: &JointFilterState,
    y: f64,
    predicted: f64,
    h: &RowDVector<f64>,
    nrow: &RowDVector<f64>,
    w: f64,
    cfg: &ConsiderConfig,
) -> Result<(JointFilterState, UpdateDiagnostics)> {
    let n = f.dim();
    let q = cfg.b0.len();
    let c = f
        .c
        .as_ref()
        .ok_or_else(|| NavError::InvalidParameter("consider update without cross-covariance".into()))?;
    if h.len() != n || nrow.len() != q || c.shape() != (n, q) {
        return Err(NavError::DimensionMismatch(format!(
            "H {}, N {}, C {:?} for n={n}, q={q}",
            h.len(),
            nrow.len(),
            c.shape()
        )));
    }
    if !(w > 0.0) {
        return Err(NavError::InvalidParameter(format!("measurement variance must be positive, got {w}")));
    }
    let ht = h.transpose();
    let nt = nrow.transpose();
    let ph = &f.p * &ht;
    let cn = c * &nt;
    let omega = (h * &ph)[0] + (nrow * c.transpose() * &ht)[0] + (h * &cn)[0] + (nrow * &cfg.b_cov * &nt)[0] + w;
    check_innovation(omega, f.epoch)?;
    let k = (ph + &cn) / omega;
    let innovation = y - predicted - (nrow * &cfg.b0)[0];
    let ikh = DMatrix::identity(n, n) - &k * h;
    let p = symmetrize(&(&ikh * &f.p - &k * nrow * c.transpose()));
    let c_new = c - &k * (h * c + nrow * &cfg.b_cov);

    let cross = &ikh * c * &nt * k.transpose();
    let joseph = &ikh * &f.p * ikh.transpose() + &k * k.transpose() * w + &k * nrow * &cfg.b_cov * &nt * k.transpose()
        - &cross
        - cross.transpose();

    let mut out = f.clone();
    out.x = &f.x + &k * innovation;
    let diag = UpdateDiagnostics { innovation, innovation_variance: omega, joseph_rel_diff: rel_diff(&p, &joseph) };
    out.p = p;
    out.c = Some(c_new);
    Ok((out, diag))
}

/// Covariance sanity: symmetric to 1e-12 relative and no eigenvalue below
/// `−1e−12·trace`.
pub fn check_covariance(p: &DMatrix<f64>, what: &str) -> Result<()> {
    let scale = p.amax().max(f64::MIN_POSITIVE);
    if (p - p.transpose()).amax() > 1e-12 * scale {
        return Err(NavError::InvalidParameter(format!("{what} is not symmetric")));
    }
    if min_eigen_ratio(p) < -1e-12 {
        return Err(NavError::InvalidParameter(format!("{what} is not positive semidefinite")));
    }
    Ok(())
}

/// Smallest eigenvalue over trace (0 for a zero matrix).
pub fn min_eigen_ratio(p: &DMatrix<f64>) -> f64 {
    let tr = p.trace();
    if tr == 0.0 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(symmetrize(p));
    eig.eigenvalues.min() / tr.abs()
}

/// One measurement in filter units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterMeasurement {
    pub epoch: f64,
    pub kind: ObservableKind,
    pub value: f64,
    pub sigma: f64,
}

/// One filter epoch: the measurements to process there and, for simulation
/// runs, the true joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub epoch: f64,
    pub measurements: Vec<FilterMeasurement>,
    pub truth: Option<[Vector6<f64>; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOptions {
    /// Acceleration noise intensity per spacecraft.
    pub process_noise_sigma: [f64; 2],
    pub noise_form: NoiseForm,
    /// Required in consider mode.
    pub consider: Option<ConsiderConfig>,
    /// A run is declared diverged once a position error exceeds this many
    /// initial position sigmas.
    pub divergence_factor: f64,
    pub initial_position_sigma: f64,
    /// Evaluate Joseph and eigenvalue diagnostics on every update.
    pub health_checks: bool,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            process_noise_sigma: [1e-11; 2],
            noise_form: NoiseForm::Quartic,
            consider: None,
            divergence_factor: 100.0,
            initial_position_sigma: 1.0,
            health_checks: true,
        }
    }
}

/// State of the filter after all updates at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub epoch: f64,
    pub x: DVector<f64>,
    pub sigma: DVector<f64>,
    /// Estimate minus truth for the 12 dynamical states.
    pub error: Option<SVector<f64, JOINT_DIM>>,
    pub residuals: Vec<f64>,
    pub prior_position_trace: [f64; 2],
    pub post_position_trace: [f64; 2],
    pub max_joseph_rel_diff: f64,
    pub min_eigen_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub records: Vec<StepRecord>,
    /// Epoch at which the divergence detector fired.
    pub diverged_at: Option<f64>,
    pub final_state: JointFilterState,
}

/// Predicted measurement and its state sensitivity row for the current estimate.
/// The bias state, when present, applies to range observables only.
pub fn predict_measurement(f: &JointFilterState, kind: ObservableKind) -> Result<(f64, RowDVector<f64>)> {
    let s1 = f.spacecraft(0);
    let s2 = f.spacecraft(1);
    let partials = measurement_partials(&s1, &s2, kind)?;
    let mut h = RowDVector::zeros(f.dim());
    h.columns_mut(0, JOINT_DIM).copy_from(&partials);
    let mut predicted = observable(&s1, &s2, kind)?;
    if let (Some(b), ObservableKind::Range) = (f.bias_index, kind) {
        h[b] = 1.0;
        predicted += f.x[b];
    }
    Ok((predicted, h))
}

/// Alternate time and measurement updates over `steps`.
pub fn run_filter(
    init: &JointFilterState,
    steps: &[FilterStep],
    dynamics: [&dyn Dynamics; 2],
    opts: &FilterOptions,
) -> Result<FilterRun> {
    if steps.windows(2).any(|w| w[1].epoch < w[0].epoch) || steps.first().is_some_and(|s| s.epoch < init.epoch) {
        return Err(NavError::InvalidParameter("filter steps must be time-ordered".into()));
    }
    if init.mode == BiasMode::Consider {
        let cfg = opts
            .consider
            .as_ref()
            .ok_or_else(|| NavError::InvalidParameter("consider mode needs a consider configuration".into()))?;
        cfg.validate()?;
    }
    let q = opts.consider.as_ref().map_or(0, |c| c.b0.len());
    let range_sensitivity = RowDVector::from_element(q, 1.0);
    let rate_sensitivity = RowDVector::zeros(q);
    let divergence_limit = opts.divergence_factor * opts.initial_position_sigma;

    let mut f = init.clone();
    let mut records = Vec::with_capacity(steps.len());
    for step in steps {
        let q = build_process_noise(&ProcessNoiseConfig {
            sigma: opts.process_noise_sigma,
            dt: step.epoch - f.epoch,
            form: opts.noise_form,
        })?;
        f = time_update(&f, dynamics, step.epoch, &q)?.0;
        let prior_position_trace = [f.position_trace(0), f.position_trace(1)];
        let mut residuals = Vec::with_capacity(step.measurements.len());
        let mut max_joseph = 0.0f64;
        for m in &step.measurements {
            let (predicted, h) = predict_measurement(&f, m.kind)?;
            let w = m.sigma * m.sigma;
            let (next, diag) = match (f.mode, &opts.consider) {
                (BiasMode::Consider, Some(cfg)) => {
                    let nrow = match m.kind {
                        ObservableKind::Range => &range_sensitivity,
                        ObservableKind::RangeRate => &rate_sensitivity,
                    };
                    consider_measurement_update(&f, m.value, predicted, &h, nrow, w, cfg)?
                }
                _ => measurement_update(&f, m.value, predicted, &h, w)?,
            };
            residuals.push(diag.innovation);
            max_joseph = max_joseph.max(diag.joseph_rel_diff);
            f = next;
        }
        let error = step.truth.map(|[t1, t2]| {
            let mut e = SVector::<f64, JOINT_DIM>::zeros();
            e.fixed_rows_mut::<6>(0).copy_from(&(f.spacecraft(0) - t1));
            e.fixed_rows_mut::<6>(6).copy_from(&(f.spacecraft(1) - t2));
            e
        });
        let min_eig = if opts.health_checks { min_eigen_ratio(&f.p) } else { f64::NAN };
        records.push(StepRecord {
            epoch: step.epoch,
            x: f.x.clone(),
            sigma: f.sigmas(),
            error,
            residuals,
            prior_position_trace,
            post_position_trace: [f.position_trace(0), f.position_trace(1)],
            max_joseph_rel_diff: max_joseph,
            min_eigen_ratio: min_eig,
        });
        if let Some(e) = error {
            let worst = e.fixed_rows::<3>(0).norm().max(e.fixed_rows::<3>(6).norm());
            if !(worst <= divergence_limit) {
                return Ok(FilterRun { records, diverged_at: Some(step.epoch), final_state: f });
            }
        }
    }
    Ok(FilterRun { records, diverged_at: None, final_state: f })
}
