//! Link-budget error models and inter-satellite observables.
//!
//! Link-budget formulas work in SI (meters, seconds, hertz). Observables work
//! in whatever consistent length/time units the caller's states use.

use nalgebra::{RowSVector, Vector3, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT_M_S;
use crate::error::{NavError, Result};

/// Decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(NavError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Pseudo-noise (PN) ranging parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PnRangingConfig {
    /// Ranging clock frequency (Hz).
    pub f_rc: f64,
    /// One-sided loop bandwidth (Hz).
    pub loop_bandwidth: f64,
    /// Ranging clock power over noise spectral density (dB-Hz).
    pub prc_over_n0_db_hz: f64,
    /// Chip rate (Hz).
    pub f_chip: f64,
    /// Received minus local chip rate (Hz).
    pub delta_f_chip: f64,
    /// Integration time (s).
    pub integration_time: f64,
}

impl Default for PnRangingConfig {
    fn default() -> Self {
        Self {
            f_rc: 1e6,
            loop_bandwidth: 1.0,
            prc_over_n0_db_hz: 25.0,
            f_chip: 2e6,
            delta_f_chip: 100.0,
            integration_time: 0.5,
        }
    }
}

impl PnRangingConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("f_rc", self.f_rc)?;
        require_positive("loop_bandwidth", self.loop_bandwidth)?;
        require_positive("f_chip", self.f_chip)?;
        require_positive("integration_time", self.integration_time)?;
        if !self.prc_over_n0_db_hz.is_finite() {
            return Err(NavError::InvalidParameter("prc_over_n0_db_hz must be finite".into()));
        }
        if !(self.delta_f_chip >= 0.0) {
            return Err(NavError::InvalidParameter("delta_f_chip must be non-negative".into()));
        }
        Ok(())
    }
}

/// Time-derived ranging parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeDerivedConfig {
    /// Downlink symbol rate (symbols/s).
    pub symbol_rate_down: f64,
    /// Uplink symbol rate (symbols/s).
    pub symbol_rate_up: f64,
    /// Correlator integration time (s).
    pub correlator_time: f64,
    /// Symbol-to-noise ratio (dB).
    pub es_over_n0_db: f64,
}

impl Default for TimeDerivedConfig {
    fn default() -> Self {
        Self { symbol_rate_down: 4000.0, symbol_rate_up: 2700.0, correlator_time: 0.5, es_over_n0_db: -1.0 }
    }
}

impl TimeDerivedConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("symbol_rate_down", self.symbol_rate_down)?;
        require_positive("symbol_rate_up", self.symbol_rate_up)?;
        require_positive("correlator_time", self.correlator_time)?;
        if !self.es_over_n0_db.is_finite() {
            return Err(NavError::InvalidParameter("es_over_n0_db must be finite".into()));
        }
        Ok(())
    }
}

/// Two-way Doppler parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DopplerConfig {
    /// Downlink carrier frequency (Hz).
    pub f_c: f64,
    /// Doppler count time (s).
    pub count_time: f64,
    /// Downlink carrier loop SNR (dB). `inf` drops the downlink term.
    pub rho_l_db: f64,
    /// Uplink carrier power over noise spectral density (dB-Hz).
    pub pc_over_n0_db_hz: f64,
    /// One-sided carrier loop bandwidth (Hz).
    pub loop_bandwidth: f64,
    /// Transponder turn-around ratio.
    pub turnaround_ratio: f64,
    /// Transmit frequency for the phase-noise conversion (Hz).
    pub f_t: f64,
    /// Count time for the phase-noise conversion (s).
    pub t_c: f64,
    /// Carrier phase noise (rad).
    pub sigma_phi: f64,
}

impl Default for DopplerConfig {
    fn default() -> Self {
        Self {
            f_c: 2.2e9,
            count_time: 1.0,
            rho_l_db: 30.76,
            pc_over_n0_db_hz: 25.0,
            loop_bandwidth: 1.0,
            turnaround_ratio: 1.0,
            f_t: 2.1e9,
            t_c: 0.5,
            sigma_phi: 0.030188,
        }
    }
}

impl DopplerConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("f_c", self.f_c)?;
        require_positive("count_time", self.count_time)?;
        require_positive("loop_bandwidth", self.loop_bandwidth)?;
        require_positive("turnaround_ratio", self.turnaround_ratio)?;
        require_positive("f_t", self.f_t)?;
        require_positive("t_c", self.t_c)?;
        require_positive("sigma_phi", self.sigma_phi)?;
        if self.rho_l_db.is_nan() || !self.pc_over_n0_db_hz.is_finite() {
            return Err(NavError::InvalidParameter("loop SNR and P_C/N0 must be numbers".into()));
        }
        Ok(())
    }
}

/// How one-way leg errors combine into a two-way figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoWayCombiner {
    Rss,
    QuadraticMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Up,
    Down,
}

/// One-way PN ranging error (m).
pub fn pn_range_sigma_oneway(cfg: &PnRangingConfig) -> f64 {
    SPEED_OF_LIGHT_M_S / (8.0 * cfg.f_rc) * (cfg.loop_bandwidth / db_to_linear(cfg.prc_over_n0_db_hz)).sqrt()
}

/// Range bias from a chip-rate mismatch (m).
pub fn pn_range_bias(cfg: &PnRangingConfig) -> f64 {
    SPEED_OF_LIGHT_M_S * cfg.delta_f_chip * cfg.integration_time / (4.0 * cfg.f_chip)
}

/// One-way time-derived ranging error (m) for the given leg.
pub fn time_derived_sigma_oneway(cfg: &TimeDerivedConfig, leg: Leg) -> f64 {
    let rate = match leg {
        Leg::Up => cfg.symbol_rate_up,
        Leg::Down => cfg.symbol_rate_down,
    };
    let t_sd = 1.0 / rate;
    4.0 * SPEED_OF_LIGHT_M_S * t_sd * t_sd / (std::f64::consts::PI * cfg.correlator_time * db_to_linear(cfg.es_over_n0_db))
}

/// Two-way Doppler range-rate error from thermal noise (m/s).
pub fn doppler_sigma(cfg: &DopplerConfig) -> f64 {
    let g = cfg.turnaround_ratio;
    let inv_rho = 1.0 / db_to_linear(cfg.rho_l_db);
    let uplink = g * g * cfg.loop_bandwidth / db_to_linear(cfg.pc_over_n0_db_hz);
    SPEED_OF_LIGHT_M_S / (2.0 * 2f64.sqrt() * std::f64::consts::PI * cfg.f_c * cfg.count_time) * (inv_rho + uplink).sqrt()
}

/// Range-rate error implied by a carrier phase noise (m/s).
pub fn phase_noise_to_range_rate(cfg: &DopplerConfig) -> f64 {
    2f64.sqrt() * SPEED_OF_LIGHT_M_S / (2.0 * cfg.turnaround_ratio * cfg.f_t * cfg.t_c) * cfg.sigma_phi
        / std::f64::consts::TAU
}

pub fn combine_two_way(sigma_up: f64, sigma_down: f64, mode: TwoWayCombiner) -> f64 {
    let ss = sigma_up * sigma_up + sigma_down * sigma_down;
    match mode {
        TwoWayCombiner::Rss => ss.sqrt(),
        TwoWayCombiner::QuadraticMean => (ss / 2.0).sqrt(),
    }
}

/// Two-way PN ranging error (m), equal legs.
pub fn pn_range_sigma_two_way(cfg: &PnRangingConfig, mode: TwoWayCombiner) -> f64 {
    let s = pn_range_sigma_oneway(cfg);
    combine_two_way(s, s, mode)
}

/// Two-way time-derived ranging error (m).
pub fn time_derived_sigma_two_way(cfg: &TimeDerivedConfig, mode: TwoWayCombiner) -> f64 {
    combine_two_way(time_derived_sigma_oneway(cfg, Leg::Up), time_derived_sigma_oneway(cfg, Leg::Down), mode)
}

/// A named link-budget quantity, for tabular reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkBudgetRow {
    pub quantity: &'static str,
    pub value: f64,
    pub unit: &'static str,
}

/// Every link-budget derived error figure.
pub fn link_budget_table(
    pn: &PnRangingConfig,
    td: &TimeDerivedConfig,
    doppler: &DopplerConfig,
    pn_mode: TwoWayCombiner,
    td_mode: TwoWayCombiner,
) -> Vec<LinkBudgetRow> {
    let row = |quantity, value, unit| LinkBudgetRow { quantity, value, unit };
    vec![
        row("pn_range_sigma_oneway", pn_range_sigma_oneway(pn), "m"),
        row("pn_range_sigma_two_way", pn_range_sigma_two_way(pn, pn_mode), "m"),
        row("pn_range_bias", pn_range_bias(pn), "m"),
        row("td_range_sigma_down", time_derived_sigma_oneway(td, Leg::Down), "m"),
        row("td_range_sigma_up", time_derived_sigma_oneway(td, Leg::Up), "m"),
        row("td_range_sigma_two_way", time_derived_sigma_two_way(td, td_mode), "m"),
        row("doppler_range_rate_sigma", doppler_sigma(doppler), "m/s"),
        row("phase_noise_range_rate_sigma", phase_noise_to_range_rate(doppler), "m/s"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Range,
    RangeRate,
}

impl ObservableKind {
    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::Range => "range",
            ObservableKind::RangeRate => "range_rate",
        }
    }
}

/// One synthesized inter-satellite observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSample {
    pub epoch: f64,
    pub kind: ObservableKind,
    pub value: f64,
    pub sigma: f64,
    pub bias_truth: f64,
}

fn split(s: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (Vector3::new(s[0], s[1], s[2]), Vector3::new(s[3], s[4], s[5]))
}

pub fn geometric_range(r1: &Vector3<f64>, r2: &Vector3<f64>) -> f64 {
    (r1 - r2).norm()
}

/// Line-of-sight projection of the relative velocity between two
/// position/velocity states.
pub fn range_rate_core(s1: &Vector6<f64>, s2: &Vector6<f64>) -> Result<f64> {
    let (r1, v1) = split(s1);
    let (r2, v2) = split(s2);
    let d = r1 - r2;
    let rho = d.norm();
    if rho == 0.0 {
        return Err(NavError::UndefinedObservable("range-rate at zero separation".into()));
    }
    Ok(d.dot(&(v1 - v2)) / rho)
}

/// Noise-free value of an observable.
pub fn observable(s1: &Vector6<f64>, s2: &Vector6<f64>, kind: ObservableKind) -> Result<f64> {
    match kind {
        ObservableKind::Range => Ok(geometric_range(&split(s1).0, &split(s2).0)),
        ObservableKind::RangeRate => range_rate_core(s1, s2),
    }
}

/// One standard normal draw.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn synthesize(
    epoch: f64,
    kind: ObservableKind,
    truth: f64,
    sigma: f64,
    bias: f64,
    draw: f64,
) -> Result<MeasurementSample> {
    if !(sigma > 0.0) {
        return Err(NavError::InvalidParameter(format!("measurement sigma must be positive, got {sigma}")));
    }
    Ok(MeasurementSample { epoch, kind, value: truth + bias + sigma * draw, sigma, bias_truth: bias })
}

/// Pseudo-range `|r1 − r2| + bias + σ·draw`, `draw` a standard normal deviate.
pub fn pseudo_range(
    epoch: f64,
    s1: &Vector6<f64>,
    s2: &Vector6<f64>,
    sigma: f64,
    bias: f64,
    draw: f64,
) -> Result<MeasurementSample> {
    let truth = geometric_range(&split(s1).0, &split(s2).0);
    synthesize(epoch, ObservableKind::Range, truth, sigma, bias, draw)
}

/// Range-rate `(Δr·Δv)/|Δr| + bias + σ·draw`.
pub fn range_rate(
    epoch: f64,
    s1: &Vector6<f64>,
    s2: &Vector6<f64>,
    sigma: f64,
    bias: f64,
    draw: f64,
) -> Result<MeasurementSample> {
    let truth = range_rate_core(s1, s2)?;
    synthesize(epoch, ObservableKind::RangeRate, truth, sigma, bias, draw)
}

/// Transmit/receive events of a two-way time transfer. `t1` and `t4` are
/// stamped by the initiating spacecraft, `t2` and `t3` by the responder;
/// `psi_i` is the stamping clock's offset from true time at event `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimestampQuad {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    pub psi4: f64,
}

impl TimestampQuad {
    /// Stamps as read from the onboard clocks.
    pub fn stamps(&self) -> [f64; 4] {
        [self.t1 + self.psi1, self.t2 + self.psi2, self.t3 + self.psi3, self.t4 + self.psi4]
    }
}

/// Range (km) and responder-minus-initiator clock offset (s) from a
/// four-stamp exchange.
pub fn time_transfer_range(q: &TimestampQuad) -> Result<(f64, f64)> {
    let causal = q.t1 < q.t2 && q.t2 <= q.t3 && q.t3 < q.t4;
    if !causal {
        return Err(NavError::NonCausalTimestamps(format!(
            "expected t1 < t2 <= t3 < t4, got {} {} {} {}",
            q.t1, q.t2, q.t3, q.t4
        )));
    }
    let [s1, s2, s3, s4] = q.stamps();
    let round_trip = (s4 - s1) - (s3 - s2);
    if !(round_trip > 0.0) {
        return Err(NavError::NonCausalTimestamps(format!("non-positive round trip {round_trip} s")));
    }
    let range_km = SPEED_OF_LIGHT_M_S * 1e-3 * round_trip / 2.0;
    let offset = ((s2 - s1) - (s4 - s3)) / 2.0;
    Ok((range_km, offset))
}

/// Partials of an observable with respect to the joint state `[s1; s2]`.
pub fn measurement_partials(s1: &Vector6<f64>, s2: &Vector6<f64>, kind: ObservableKind) -> Result<RowSVector<f64, 12>> {
    let (r1, v1) = split(s1);
    let (r2, v2) = split(s2);
    let d = r1 - r2;
    let rho = d.norm();
    if rho == 0.0 {
        return Err(NavError::UndefinedObservable(format!("{} partials at zero separation", kind.name())));
    }
    let u = d / rho;
    let mut h = RowSVector::<f64, 12>::zeros();
    match kind {
        ObservableKind::Range => {
            for i in 0..3 {
                h[i] = u[i];
                h[6 + i] = -u[i];
            }
        }
        ObservableKind::RangeRate => {
            let dv = v1 - v2;
            let rdot = u.dot(&dv);
            let dr = (dv - u * rdot) / rho;
            for i in 0..3 {
                h[i] = dr[i];
                h[3 + i] = u[i];
                h[6 + i] = -dr[i];
                h[9 + i] = -u[i];
            }
        }
    }
    Ok(h)
}
